// Additive white Gaussian noise channel. Noise strength is set by the
// ratio of noise amplitude to signal amplitude, where signal amplitude
// is the RMS of the tensor the noise is applied to. Outputs are not
// clamped; the codec sees the raw corrupted values.
#pragma once

#include "semcomm/rng.hpp"
#include "semcomm/tensor.hpp"

namespace semcomm {

enum class NoisePlacement {
  kInput,   // corrupt the normalized image fed to the encoder
  kLatent,  // corrupt the latent code between encoder and decoder
};

// Root mean square over all elements, accumulated in double.
double signal_rms(const Tensor4<float>& t);

// sigma = ratio * rms. Both arguments must be nonnegative and finite.
double noise_sigma(double ratio, double rms);

// x + sigma * g, g ~ N(0, 1) drawn per element from the stream in
// storage order. sigma == 0 returns a bitwise copy and draws nothing.
Tensor4<float> add_awgn(const Tensor4<float>& t, double sigma, rng::Stream& stream);

struct ChannelConfig {
  double nasar = 0.0;  // noise-amplitude-to-signal-amplitude ratio
  NoisePlacement placement = NoisePlacement::kInput;
};

// Applies AWGN scaled to the batch: sigma = nasar * signal_rms(batch).
Tensor4<float> corrupt(const Tensor4<float>& batch, const ChannelConfig& config,
                       rng::Stream& stream);

}  // namespace semcomm
