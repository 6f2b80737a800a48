#include "semcomm/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace semcomm {

double signal_rms(const Tensor4<float>& t) {
  if (t.size() == 0) {
    throw std::invalid_argument("signal_rms requires a nonempty tensor");
  }
  double sum_sq = 0.0;
  const float* p = t.data();
  for (std::size_t i = 0; i < t.size(); ++i) {
    sum_sq += static_cast<double>(p[i]) * static_cast<double>(p[i]);
  }
  return std::sqrt(sum_sq / static_cast<double>(t.size()));
}

double noise_sigma(double ratio, double rms) {
  if (!(ratio >= 0.0) || !std::isfinite(ratio)) {
    throw std::invalid_argument("noise ratio must be finite and >= 0, got " +
                                std::to_string(ratio));
  }
  if (!(rms >= 0.0) || !std::isfinite(rms)) {
    throw std::invalid_argument("rms must be finite and >= 0, got " +
                                std::to_string(rms));
  }
  return ratio * rms;
}

Tensor4<float> add_awgn(const Tensor4<float>& t, double sigma,
                        rng::Stream& stream) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("sigma must be finite and >= 0, got " +
                                std::to_string(sigma));
  }
  Tensor4<float> out = t;
  if (sigma == 0.0) {
    return out;
  }
  float* p = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    p[i] += static_cast<float>(sigma * stream.gaussian());
  }
  return out;
}

Tensor4<float> corrupt(const Tensor4<float>& batch, const ChannelConfig& config,
                       rng::Stream& stream) {
  const double sigma = noise_sigma(config.nasar, signal_rms(batch));
  return add_awgn(batch, sigma, stream);
}

}  // namespace semcomm
