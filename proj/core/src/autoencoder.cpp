#include "semcomm/autoencoder.hpp"

#include <stdexcept>

#include <json.hpp>

namespace semcomm {
namespace {

using nlohmann::json;

json stage_to_json(const ConvStage& s) {
  return json{{"in_ch", s.in_ch},   {"out_ch", s.out_ch},
              {"kernel", s.kernel}, {"stride", s.stride},
              {"pad", s.pad},       {"output_pad", s.output_pad}};
}

ConvStage stage_from_json(const json& j) {
  ConvStage s;
  s.in_ch = j.at("in_ch").get<int>();
  s.out_ch = j.at("out_ch").get<int>();
  s.kernel = j.at("kernel").get<int>();
  s.stride = j.at("stride").get<int>();
  s.pad = j.at("pad").get<int>();
  s.output_pad = j.at("output_pad").get<int>();
  return s;
}

}  // namespace

std::string AutoencoderSpec::to_json() const {
  json j;
  j["encoder"] = json::array();
  for (const auto& s : encoder) j["encoder"].push_back(stage_to_json(s));
  j["decoder"] = json::array();
  for (const auto& s : decoder) j["decoder"].push_back(stage_to_json(s));
  return j.dump();
}

AutoencoderSpec AutoencoderSpec::from_json(const std::string& text) {
  const json j = json::parse(text);
  AutoencoderSpec spec;
  for (const auto& s : j.at("encoder")) spec.encoder.push_back(stage_from_json(s));
  for (const auto& s : j.at("decoder")) spec.decoder.push_back(stage_from_json(s));
  return spec;
}

AutoencoderSpec default_autoencoder_spec() {
  AutoencoderSpec spec;
  spec.encoder = {{3, 32, 3, 2, 1, 0}, {32, 64, 3, 2, 1, 0}, {64, 128, 3, 2, 1, 0}};
  spec.decoder = {{128, 64, 3, 2, 1, 1}, {64, 32, 3, 2, 1, 1}, {32, 3, 3, 2, 1, 1}};
  return spec;
}

ShapeReport validate_spec(const AutoencoderSpec& spec, int in_c, int in_h,
                          int in_w) {
  if (spec.encoder.empty() || spec.decoder.empty()) {
    throw std::invalid_argument("spec needs at least one stage on each side");
  }
  int c = in_c, h = in_h, w = in_w;
  for (std::size_t i = 0; i < spec.encoder.size(); ++i) {
    const ConvStage& s = spec.encoder[i];
    if (s.in_ch != c) {
      throw std::invalid_argument(
          "encoder stage " + std::to_string(i) + " expects " +
          std::to_string(s.in_ch) + " channels but receives " + std::to_string(c));
    }
    if (s.output_pad != 0) {
      throw std::invalid_argument("encoder stage " + std::to_string(i) +
                                  " must not use output padding");
    }
    h = nn::conv_out_size(h, s.kernel, s.stride, s.pad);
    w = nn::conv_out_size(w, s.kernel, s.stride, s.pad);
    c = s.out_ch;
  }
  ShapeReport report;
  report.latent = {c, h, w};
  for (std::size_t i = 0; i < spec.decoder.size(); ++i) {
    const ConvStage& s = spec.decoder[i];
    if (s.in_ch != c) {
      throw std::invalid_argument(
          "decoder stage " + std::to_string(i) + " expects " +
          std::to_string(s.in_ch) + " channels but receives " + std::to_string(c));
    }
    h = nn::tconv_out_size(h, s.kernel, s.stride, s.pad, s.output_pad);
    w = nn::tconv_out_size(w, s.kernel, s.stride, s.pad, s.output_pad);
    c = s.out_ch;
  }
  report.output = {c, h, w};
  if (c != in_c || h != in_h || w != in_w) {
    throw std::invalid_argument(
        "decoder output " + std::to_string(c) + "x" + std::to_string(h) + "x" +
        std::to_string(w) + " does not reproduce the input shape " +
        std::to_string(in_c) + "x" + std::to_string(in_h) + "x" +
        std::to_string(in_w));
  }
  return report;
}

template <typename T>
Autoencoder<T>::Autoencoder(const AutoencoderSpec& spec, int in_c, int in_h,
                            int in_w)
    : spec_(spec) {
  const ShapeReport report = validate_spec(spec, in_c, in_h, in_w);
  latent_ = report.latent;
  for (const ConvStage& s : spec.encoder) {
    enc_.push_back(
        std::make_unique<nn::Conv2d<T>>(s.in_ch, s.out_ch, s.kernel, s.stride, s.pad));
    enc_.push_back(std::make_unique<nn::ReLU<T>>());
  }
  for (std::size_t i = 0; i < spec.decoder.size(); ++i) {
    const ConvStage& s = spec.decoder[i];
    dec_.push_back(std::make_unique<nn::ConvTranspose2d<T>>(
        s.in_ch, s.out_ch, s.kernel, s.stride, s.pad, s.output_pad));
    if (i + 1 < spec.decoder.size()) {
      dec_.push_back(std::make_unique<nn::ReLU<T>>());
    } else {
      dec_.push_back(std::make_unique<nn::Tanh<T>>());
    }
  }
}

template <typename T>
Tensor4<T> Autoencoder<T>::encode(const Tensor4<T>& x) {
  Tensor4<T> cur = x;
  for (auto& layer : enc_) cur = layer->forward(cur);
  return cur;
}

template <typename T>
Tensor4<T> Autoencoder<T>::decode(const Tensor4<T>& z) {
  Tensor4<T> cur = z;
  for (auto& layer : dec_) cur = layer->forward(cur);
  return cur;
}

template <typename T>
Tensor4<T> Autoencoder<T>::backward_decoder(const Tensor4<T>& drecon) {
  Tensor4<T> cur = drecon;
  for (auto it = dec_.rbegin(); it != dec_.rend(); ++it) cur = (*it)->backward(cur);
  return cur;
}

template <typename T>
void Autoencoder<T>::backward_encoder(const Tensor4<T>& dlatent) {
  Tensor4<T> cur = dlatent;
  for (auto it = enc_.rbegin(); it != enc_.rend(); ++it) cur = (*it)->backward(cur);
}

template <typename T>
void Autoencoder<T>::init(rng::Stream& stream) {
  for (auto& layer : enc_) layer->init(stream);
  for (auto& layer : dec_) layer->init(stream);
}

template <typename T>
std::vector<nn::ParamRef<T>> Autoencoder<T>::params() {
  std::vector<nn::ParamRef<T>> out;
  int stage = 0;
  for (auto& layer : enc_) {
    const std::size_t before = out.size();
    layer->collect_params("encoder.conv" + std::to_string(stage), out);
    if (out.size() != before) ++stage;
  }
  stage = 0;
  for (auto& layer : dec_) {
    const std::size_t before = out.size();
    layer->collect_params("decoder.tconv" + std::to_string(stage), out);
    if (out.size() != before) ++stage;
  }
  return out;
}

template <typename T>
std::size_t Autoencoder<T>::param_count() {
  std::size_t total = 0;
  for (const auto& p : params()) total += p.value.size();
  return total;
}

template class Autoencoder<float>;
template class Autoencoder<double>;

}  // namespace semcomm
