// Convolutional autoencoder. The encoder is a stack of strided
// convolutions with ReLU after each stage; the decoder mirrors it with
// transposed convolutions, ReLU between stages, and tanh at the output
// so reconstructions live in the normalized [-1, 1] range.
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "semcomm/nn.hpp"
#include "semcomm/rng.hpp"
#include "semcomm/tensor.hpp"

namespace semcomm {

struct ConvStage {
  int in_ch = 0;
  int out_ch = 0;
  int kernel = 3;
  int stride = 2;
  int pad = 1;
  int output_pad = 0;  // decoder stages only

  bool operator==(const ConvStage&) const = default;
};

struct AutoencoderSpec {
  std::vector<ConvStage> encoder;
  std::vector<ConvStage> decoder;

  std::string to_json() const;
  static AutoencoderSpec from_json(const std::string& text);
  bool operator==(const AutoencoderSpec&) const = default;
};

// 3 -> 32 -> 64 -> 128 channels, each stage halving 32x32 spatial dims;
// latent 128 x 4 x 4; decoder mirrored with output padding 1.
AutoencoderSpec default_autoencoder_spec();

struct ShapeReport {
  std::array<int, 3> latent;  // (c, h, w) after the encoder
  std::array<int, 3> output;  // must equal the input shape
};

// Walks the stage chain for the given input shape. Throws with a
// description of the first inconsistency (channel chain breaks,
// geometry that does not tile, output not matching the input).
ShapeReport validate_spec(const AutoencoderSpec& spec, int in_c, int in_h,
                          int in_w);

template <typename T>
class Autoencoder {
 public:
  Autoencoder(const AutoencoderSpec& spec, int in_c, int in_h, int in_w);

  Tensor4<T> encode(const Tensor4<T>& x);
  Tensor4<T> decode(const Tensor4<T>& z);
  Tensor4<T> forward(const Tensor4<T>& x) { return decode(encode(x)); }

  // Backward through the decoder alone: dL/d(recon) -> dL/d(latent).
  Tensor4<T> backward_decoder(const Tensor4<T>& drecon);
  // Backward through the encoder: consumes dL/d(latent).
  void backward_encoder(const Tensor4<T>& dlatent);

  // Draws every weight then bias per stage, encoder stages first.
  void init(rng::Stream& stream);

  std::vector<nn::ParamRef<T>> params();
  std::size_t param_count();

  const AutoencoderSpec& spec() const { return spec_; }
  std::array<int, 3> latent_shape() const { return latent_; }
  int latent_size() const { return latent_[0] * latent_[1] * latent_[2]; }

 private:
  AutoencoderSpec spec_;
  std::array<int, 3> latent_{};
  std::vector<std::unique_ptr<nn::Layer<T>>> enc_;
  std::vector<std::unique_ptr<nn::Layer<T>>> dec_;
};

extern template class Autoencoder<float>;
extern template class Autoencoder<double>;

}  // namespace semcomm
