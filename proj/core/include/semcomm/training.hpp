// Training loop for the semantic codec. Two regimes share one loop:
// self-supervised (reconstruct the clean image from its corrupted
// version) and label-supervised (same reconstruction loss plus a
// weighted cross entropy on a linear head over the latent).
//
// Determinism contract: every random decision draws from a stream
// derived from (config.seed, purpose[, index]), so runs with equal
// configs produce bitwise-identical parameters and checkpoints.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "semcomm/autoencoder.hpp"
#include "semcomm/channel.hpp"
#include "semcomm/dataset.hpp"
#include "semcomm/nn.hpp"

namespace semcomm {

template <typename T>
struct MseResult {
  double value = 0.0;
  Tensor4<T> grad;  // d(mean squared error)/d(pred)
};

// Mean over all elements of (pred - target)^2, accumulated in double.
template <typename T>
MseResult<T> mse_loss(const Tensor4<T>& pred, const Tensor4<T>& target) {
  if (!pred.same_shape(target)) {
    throw std::invalid_argument("mse_loss: shape mismatch");
  }
  MseResult<T> r;
  r.grad = Tensor4<T>(pred.n(), pred.c(), pred.h(), pred.w());
  const T* p = pred.data();
  const T* t = target.data();
  T* g = r.grad.data();
  const double inv = 1.0 / static_cast<double>(pred.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
    acc += d * d;
    g[i] = static_cast<T>(2.0 * d * inv);
  }
  r.value = acc * inv;
  return r;
}

template <typename T>
struct CeResult {
  double value = 0.0;
  std::vector<T> grad;  // d(mean cross entropy)/d(logits), row major
};

// Softmax cross entropy, mean over the batch, stabilized by the
// per-row max before exponentiation.
template <typename T>
CeResult<T> cross_entropy_loss(const std::vector<T>& logits,
                               std::span<const int> labels, int classes) {
  const std::size_t n = labels.size();
  if (logits.size() != n * static_cast<std::size_t>(classes) || n == 0) {
    throw std::invalid_argument("cross_entropy_loss: size mismatch");
  }
  CeResult<T> r;
  r.grad.resize(logits.size());
  const double inv = 1.0 / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= classes) {
      throw std::invalid_argument("cross_entropy_loss: label out of range");
    }
    const T* row = logits.data() + i * static_cast<std::size_t>(classes);
    T* grow = r.grad.data() + i * static_cast<std::size_t>(classes);
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < classes; ++c) mx = std::max(mx, static_cast<double>(row[c]));
    double denom = 0.0;
    for (int c = 0; c < classes; ++c) denom += std::exp(static_cast<double>(row[c]) - mx);
    acc += (std::log(denom) + mx - static_cast<double>(row[y]));
    for (int c = 0; c < classes; ++c) {
      const double soft = std::exp(static_cast<double>(row[c]) - mx) / denom;
      grow[c] = static_cast<T>((soft - (c == y ? 1.0 : 0.0)) * inv);
    }
  }
  r.value = acc * inv;
  return r;
}

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction over a fixed parameter list. Throws on the
// first non-finite gradient, naming the offending array.
template <typename T>
class Adam {
 public:
  Adam(const AdamConfig& config, std::vector<nn::ParamRef<T>> params)
      : config_(config), params_(std::move(params)) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].value.size(), T(0));
      v_[i].assign(params_[i].value.size(), T(0));
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        const double g = static_cast<double>(p.grad[j]);
        if (!std::isfinite(g)) {
          throw std::runtime_error("non-finite gradient in " + p.name +
                                   " at element " + std::to_string(j));
        }
        double m = static_cast<double>(m_[i][j]);
        double v = static_cast<double>(v_[i][j]);
        m = config_.beta1 * m + (1.0 - config_.beta1) * g;
        v = config_.beta2 * v + (1.0 - config_.beta2) * g * g;
        m_[i][j] = static_cast<T>(m);
        v_[i][j] = static_cast<T>(v);
        const double update =
            config_.lr * (m / bc1) / (std::sqrt(v / bc2) + config_.eps);
        p.value[j] = static_cast<T>(static_cast<double>(p.value[j]) - update);
      }
    }
  }

  long long t() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<nn::ParamRef<T>> params_;
  std::vector<std::vector<T>> m_, v_;
  long long t_ = 0;
};

struct TrainConfig {
  std::string mode = "ssl";  // "ssl" or "sl"
  int epochs = 20;
  int batch_size = 128;
  double lr = 0.001;
  double noise_factor = 0.5;  // training-time noise sigma, normalized units
  int sample_count = kTrainRecords;
  std::uint64_t seed = 0;
  double lambda_ce = 0.1;  // weight of the cross entropy term in sl mode
  NoisePlacement placement = NoisePlacement::kInput;
  AutoencoderSpec spec = default_autoencoder_spec();

  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
};

struct EpochStats {
  double total = 0.0;
  double mse = 0.0;
  double ce = 0.0;
};

struct LossTrace {
  std::vector<EpochStats> epochs;

  std::string to_json() const;
};

struct TrainResult {
  std::unique_ptr<Autoencoder<float>> model;
  std::unique_ptr<nn::Linear<float>> head;  // present in sl mode only
  LossTrace trace;
  TrainConfig config;
  double wall_seconds = 0.0;
};

// Trains on a seed-deterministic subset of `train_split` of size
// config.sample_count (stratified). The split must carry labels for sl.
TrainResult train_model(const Split& train_split, const TrainConfig& config);
TrainResult train_ssl(const Split& train_split, TrainConfig config);
TrainResult train_sl(const Split& train_split, TrainConfig config);

// Checkpoint container: a small binary file holding a JSON header
// (mode, config echo, architecture, loss trace, array directory) and a
// raw little-endian float32 payload. Wall-clock time is deliberately
// not part of the file, so identical runs produce identical bytes.
struct CheckpointData {
  TrainConfig config;
  LossTrace trace;
  std::vector<std::pair<std::string, std::vector<float>>> arrays;
};

void save_checkpoint(const std::filesystem::path& path, const TrainResult& result);
CheckpointData load_checkpoint(const std::filesystem::path& path);

// Rebuilds the model (and head, in sl mode) from checkpoint arrays.
TrainResult restore_checkpoint(const CheckpointData& data);

}  // namespace semcomm
