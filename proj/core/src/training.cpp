#include "semcomm/training.hpp"

#include <bit>
#include <chrono>
#include <cstring>

#include <json.hpp>

#include "semcomm/io.hpp"
#include "semcomm/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace semcomm {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'S', 'E', 'M', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kFormatVersion = 1;

std::string placement_name(NoisePlacement p) {
  return p == NoisePlacement::kInput ? "input" : "latent";
}

NoisePlacement placement_from_name(const std::string& s) {
  if (s == "input") return NoisePlacement::kInput;
  if (s == "latent") return NoisePlacement::kLatent;
  throw std::invalid_argument("unknown noise placement: " + s);
}

void validate_config(const TrainConfig& c) {
  if (c.mode != "ssl" && c.mode != "sl") {
    throw std::invalid_argument("mode must be \"ssl\" or \"sl\", got \"" +
                                c.mode + "\"");
  }
  if (c.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (c.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(c.lr > 0.0) || !std::isfinite(c.lr)) {
    throw std::invalid_argument("lr must be finite and > 0");
  }
  if (!(c.noise_factor >= 0.0) || !std::isfinite(c.noise_factor)) {
    throw std::invalid_argument("noise_factor must be finite and >= 0");
  }
  if (!(c.lambda_ce >= 0.0) || !std::isfinite(c.lambda_ce)) {
    throw std::invalid_argument("lambda_ce must be finite and >= 0");
  }
  if (c.sample_count < 1) throw std::invalid_argument("sample_count must be >= 1");
}

json trace_to_json(const LossTrace& trace) {
  json arr = json::array();
  for (const auto& e : trace.epochs) {
    arr.push_back(json{{"total", e.total}, {"mse", e.mse}, {"ce", e.ce}});
  }
  return arr;
}

LossTrace trace_from_json(const json& arr) {
  LossTrace trace;
  for (const auto& e : arr) {
    trace.epochs.push_back(EpochStats{e.at("total").get<double>(),
                                      e.at("mse").get<double>(),
                                      e.at("ce").get<double>()});
  }
  return trace;
}

}  // namespace

std::string LossTrace::to_json() const { return trace_to_json(*this).dump(); }

std::string TrainConfig::to_json() const {
  json j;
  j["mode"] = mode;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["lr"] = lr;
  j["noise_factor"] = noise_factor;
  j["sample_count"] = sample_count;
  j["seed"] = seed;
  j["lambda_ce"] = lambda_ce;
  j["placement"] = placement_name(placement);
  j["spec"] = json::parse(spec.to_json());
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  TrainConfig c;
  c.mode = j.at("mode").get<std::string>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.lr = j.at("lr").get<double>();
  c.noise_factor = j.at("noise_factor").get<double>();
  c.sample_count = j.at("sample_count").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.lambda_ce = j.at("lambda_ce").get<double>();
  c.placement = placement_from_name(j.at("placement").get<std::string>());
  c.spec = AutoencoderSpec::from_json(j.at("spec").dump());
  return c;
}

TrainResult train_model(const Split& train_split, const TrainConfig& config) {
  validate_config(config);
  const bool supervised = config.mode == "sl";
  const auto start = std::chrono::steady_clock::now();

  const Split subset = subset_sample(
      train_split,
      SubsetSpec{config.sample_count, rng::derive(config.seed, "subset"), true});

  TrainResult result;
  result.config = config;
  result.model = std::make_unique<Autoencoder<float>>(config.spec, kImageChannels,
                                                      kImageHeight, kImageWidth);
  {
    rng::Stream init_stream(rng::derive(config.seed, "init/backbone"));
    result.model->init(init_stream);
  }
  if (supervised) {
    result.head = std::make_unique<nn::Linear<float>>(
        result.model->latent_size(), kNumClasses);
    rng::Stream head_stream(rng::derive(config.seed, "init/head"));
    result.head->init(head_stream);
  }

  std::vector<nn::ParamRef<float>> params = result.model->params();
  if (supervised) {
    result.head->collect_params("head", params);
  }
  AdamConfig adam_config;
  adam_config.lr = config.lr;
  Adam<float> adam(adam_config, params);

  const bool use_ce = supervised && config.lambda_ce > 0.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    BatchIterator batches(subset, config.batch_size,
                          rng::derive(config.seed, "epoch",
                                      static_cast<std::uint64_t>(epoch)),
                          supervised);
    rng::Stream noise_stream(
        rng::derive(config.seed, "noise", static_cast<std::uint64_t>(epoch)));

    double total_sum = 0.0, mse_sum = 0.0, ce_sum = 0.0;
    long long seen = 0;
    int batch_index = 0;
    ImageBatch batch;
    while (batches.next(batch)) {
      const Tensor4<float>& clean = batch.data;
      Tensor4<float> latent;
      Tensor4<float> recon;
      if (config.placement == NoisePlacement::kInput) {
        const Tensor4<float> noisy =
            add_awgn(clean, config.noise_factor, noise_stream);
        latent = result.model->encode(noisy);
        recon = result.model->decode(latent);
      } else {
        const Tensor4<float> z = result.model->encode(clean);
        latent = add_awgn(z, config.noise_factor, noise_stream);
        recon = result.model->decode(latent);
      }

      MseResult<float> mse = mse_loss(recon, clean);
      double ce_value = 0.0;
      double loss = mse.value;

      Tensor4<float> dlatent = result.model->backward_decoder(mse.grad);
      if (use_ce) {
        const std::vector<float> logits = result.head->forward(latent);
        CeResult<float> ce =
            cross_entropy_loss(logits, std::span<const int>(batch.labels),
                               kNumClasses);
        ce_value = ce.value;
        loss += config.lambda_ce * ce_value;
        for (auto& g : ce.grad) g *= static_cast<float>(config.lambda_ce);
        const Tensor4<float> dlatent_ce = result.head->backward(ce.grad);
        float* d = dlatent.data();
        const float* dce = dlatent_ce.data();
        for (std::size_t i = 0; i < dlatent.size(); ++i) d[i] += dce[i];
      }
      result.model->backward_encoder(dlatent);

      if (!std::isfinite(loss)) {
        throw std::runtime_error("non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_index));
      }
      try {
        adam.step();
      } catch (const std::exception& e) {
        throw std::runtime_error("epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_index) + ": " + e.what());
      }

      const int bn = batch.size();
      total_sum += loss * bn;
      mse_sum += mse.value * bn;
      ce_sum += ce_value * bn;
      seen += bn;
      ++batch_index;
    }
    result.trace.epochs.push_back(EpochStats{total_sum / seen, mse_sum / seen,
                                             ce_sum / seen});
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

TrainResult train_ssl(const Split& train_split, TrainConfig config) {
  config.mode = "ssl";
  return train_model(train_split, config);
}

TrainResult train_sl(const Split& train_split, TrainConfig config) {
  config.mode = "sl";
  return train_model(train_split, config);
}

void save_checkpoint(const std::filesystem::path& path,
                     const TrainResult& result) {
  std::vector<nn::ParamRef<float>> params = result.model->params();
  if (result.head) {
    result.head->collect_params("head", params);
  }

  json header;
  header["format_version"] = kFormatVersion;
  header["config"] = json::parse(result.config.to_json());
  header["loss_trace"] = trace_to_json(result.trace);
  json dir = json::array();
  std::size_t payload_floats = 0;
  for (const auto& p : params) {
    dir.push_back(json{{"name", p.name}, {"count", p.value.size()}});
    payload_floats += p.value.size();
  }
  header["arrays"] = dir;
  const std::string header_text = header.dump();

  std::vector<std::uint8_t> bytes;
  bytes.reserve(sizeof(kMagic) + 12 + header_text.size() + payload_floats * 4);
  bytes.insert(bytes.end(), kMagic, kMagic + sizeof(kMagic));
  const std::uint32_t version = kFormatVersion;
  const std::uint64_t header_len = header_text.size();
  bytes.resize(bytes.size() + sizeof(version) + sizeof(header_len));
  std::memcpy(bytes.data() + sizeof(kMagic), &version, sizeof(version));
  std::memcpy(bytes.data() + sizeof(kMagic) + sizeof(version), &header_len,
              sizeof(header_len));
  bytes.insert(bytes.end(), header_text.begin(), header_text.end());
  for (const auto& p : params) {
    const std::size_t at = bytes.size();
    bytes.resize(at + p.value.size() * sizeof(float));
    std::memcpy(bytes.data() + at, p.value.data(), p.value.size() * sizeof(float));
  }
  write_file_atomic(path, bytes);
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  if (bytes.size() < sizeof(kMagic) + 12 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path.string());
  }
  std::uint32_t version = 0;
  std::uint64_t header_len = 0;
  std::memcpy(&version, bytes.data() + sizeof(kMagic), sizeof(version));
  std::memcpy(&header_len, bytes.data() + sizeof(kMagic) + sizeof(version),
              sizeof(header_len));
  if (version != kFormatVersion) {
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version));
  }
  std::size_t offset = sizeof(kMagic) + 12;
  if (bytes.size() < offset + header_len) {
    throw std::runtime_error("truncated checkpoint header: " + path.string());
  }
  const json header = json::parse(
      std::string(reinterpret_cast<const char*>(bytes.data() + offset),
                  static_cast<std::size_t>(header_len)));
  offset += static_cast<std::size_t>(header_len);

  CheckpointData data;
  data.config = TrainConfig::from_json(header.at("config").dump());
  data.trace = trace_from_json(header.at("loss_trace"));
  for (const auto& entry : header.at("arrays")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::size_t count = entry.at("count").get<std::size_t>();
    if (bytes.size() < offset + count * sizeof(float)) {
      throw std::runtime_error("truncated checkpoint payload: " + path.string());
    }
    std::vector<float> values(count);
    std::memcpy(values.data(), bytes.data() + offset, count * sizeof(float));
    offset += count * sizeof(float);
    data.arrays.emplace_back(name, std::move(values));
  }
  if (offset != bytes.size()) {
    throw std::runtime_error("trailing bytes in checkpoint: " + path.string());
  }
  return data;
}

TrainResult restore_checkpoint(const CheckpointData& data) {
  TrainResult result;
  result.config = data.config;
  result.trace = data.trace;
  result.model = std::make_unique<Autoencoder<float>>(
      data.config.spec, kImageChannels, kImageHeight, kImageWidth);
  if (data.config.mode == "sl") {
    result.head = std::make_unique<nn::Linear<float>>(
        result.model->latent_size(), kNumClasses);
  }
  std::vector<nn::ParamRef<float>> params = result.model->params();
  if (result.head) {
    result.head->collect_params("head", params);
  }
  if (params.size() != data.arrays.size()) {
    throw std::runtime_error("checkpoint holds " +
                             std::to_string(data.arrays.size()) +
                             " arrays, model expects " +
                             std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, values] = data.arrays[i];
    if (params[i].name != name || params[i].value.size() != values.size()) {
      throw std::runtime_error("checkpoint array mismatch at " + name);
    }
    std::copy(values.begin(), values.end(), params[i].value.begin());
  }
  return result;
}

}  // namespace semcomm
