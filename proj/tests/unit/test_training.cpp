#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "semcomm/dataset.hpp"
#include "semcomm/io.hpp"
#include "semcomm/procgen.hpp"
#include "semcomm/rng.hpp"
#include "semcomm/training.hpp"

using namespace semcomm;

namespace {

// Small labeled split backed by the first n records of one shard.
Split make_corpus_split(int n) {
  const auto shard = procgen::make_shard(99, 0);
  auto pixels = std::make_shared<std::vector<std::uint8_t>>();
  auto labels = std::make_shared<std::vector<std::uint8_t>>();
  pixels->reserve(static_cast<std::size_t>(n) * kImagePixels);
  for (int r = 0; r < n; ++r) {
    const std::uint8_t* rec = shard.data() + static_cast<std::size_t>(r) * kRecordBytes;
    labels->push_back(rec[0]);
    pixels->insert(pixels->end(), rec + 1, rec + kRecordBytes);
  }
  std::vector<int> index(n);
  for (int i = 0; i < n; ++i) index[i] = i;
  return Split(std::move(pixels), std::move(labels), std::move(index));
}

TrainConfig smoke_config(int epochs) {
  TrainConfig config;
  config.epochs = epochs;
  config.batch_size = 64;
  config.sample_count = 256;
  config.seed = 7;
  return config;
}

bool params_equal(const TrainResult& a, const TrainResult& b) {
  auto pa = a.model->params();
  auto pb = b.model->params();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].value.size() != pb[i].value.size()) return false;
    if (std::memcmp(pa[i].value.data(), pb[i].value.data(),
                    pa[i].value.size() * sizeof(float)) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("mse loss and gradient match hand computation") {
  Tensor4<double> pred(1, 1, 1, 2);
  pred.data()[0] = 1.0;
  pred.data()[1] = 2.0;
  Tensor4<double> target(1, 1, 1, 2);
  target.fill(0.0);

  const auto r = mse_loss(pred, target);
  CHECK(r.value == doctest::Approx(2.5));
  CHECK(r.grad.data()[0] == doctest::Approx(1.0));  // 2 * d / N
  CHECK(r.grad.data()[1] == doctest::Approx(2.0));

  const auto zero = mse_loss(pred, pred);
  CHECK(zero.value == 0.0);
  CHECK(zero.grad.data()[0] == 0.0);
  CHECK(zero.grad.data()[1] == 0.0);

  Tensor4<double> other(1, 1, 2, 1);
  CHECK_THROWS(mse_loss(pred, other));
}

TEST_CASE("cross entropy on uniform logits is log of the class count") {
  const std::vector<double> logits(20, 0.25);  // 2 rows, any constant
  const std::vector<int> labels = {3, 7};
  const auto r = cross_entropy_loss(logits, std::span<const int>(labels), 10);
  CHECK(r.value == doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy vanishes on a confident correct logit") {
  std::vector<double> logits(10, 0.0);
  logits[4] = 100.0;
  const std::vector<int> labels = {4};
  const auto r = cross_entropy_loss(logits, std::span<const int>(labels), 10);
  CHECK(r.value < 1e-12);
}

TEST_CASE("cross entropy matches an independent softmax computation") {
  rng::Stream stream(17);
  std::vector<double> logits(40);
  for (auto& v : logits) v = stream.uniform(-3.0, 3.0);
  const std::vector<int> labels = {0, 9, 5, 5};

  const auto r = cross_entropy_loss(logits, std::span<const int>(labels), 10);

  double expected = 0.0;
  std::vector<double> expected_grad(40);
  for (int i = 0; i < 4; ++i) {
    const double* row = logits.data() + i * 10;
    double mx = row[0];
    for (int c = 1; c < 10; ++c) mx = std::max(mx, row[c]);
    double denom = 0.0;
    for (int c = 0; c < 10; ++c) denom += std::exp(row[c] - mx);
    expected += std::log(denom) + mx - row[labels[static_cast<std::size_t>(i)]];
    for (int c = 0; c < 10; ++c) {
      const double soft = std::exp(row[c] - mx) / denom;
      expected_grad[static_cast<std::size_t>(i * 10 + c)] =
          (soft - (c == labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0)) / 4.0;
    }
  }
  expected /= 4.0;

  CHECK(r.value == doctest::Approx(expected).epsilon(1e-12));
  for (int i = 0; i < 40; ++i) {
    CHECK(r.grad[static_cast<std::size_t>(i)] ==
          doctest::Approx(expected_grad[static_cast<std::size_t>(i)])
              .epsilon(1e-12));
  }

  // Each gradient row sums to zero: softmax mass balances the one-hot.
  for (int i = 0; i < 4; ++i) {
    double row_sum = 0.0;
    for (int c = 0; c < 10; ++c) row_sum += r.grad[static_cast<std::size_t>(i * 10 + c)];
    CHECK(std::abs(row_sum) < 1e-15);
  }
}

TEST_CASE("cross entropy rejects malformed inputs") {
  const std::vector<double> logits(10, 0.0);
  const std::vector<int> bad_label = {10};
  CHECK_THROWS(cross_entropy_loss(logits, std::span<const int>(bad_label), 10));
  const std::vector<int> negative = {-1};
  CHECK_THROWS(cross_entropy_loss(logits, std::span<const int>(negative), 10));
  const std::vector<int> two = {1, 2};
  CHECK_THROWS(cross_entropy_loss(logits, std::span<const int>(two), 10));
  const std::vector<int> none;
  CHECK_THROWS(cross_entropy_loss(logits, std::span<const int>(none), 10));
}

TEST_CASE("adam leaves parameters alone under zero gradients") {
  std::vector<double> value = {1.0, -2.0};
  std::vector<double> grad = {0.0, 0.0};
  std::vector<nn::ParamRef<double>> params = {
      {"w", std::span<double>(value), std::span<double>(grad)}};
  Adam<double> adam(AdamConfig{}, params);
  adam.step();
  adam.step();
  CHECK(adam.t() == 2);
  CHECK(value[0] == 1.0);
  CHECK(value[1] == -2.0);
}

TEST_CASE("adam follows the bias-corrected closed form") {
  std::vector<double> value = {1.0};
  std::vector<double> grad = {0.0};
  std::vector<nn::ParamRef<double>> params = {
      {"w", std::span<double>(value), std::span<double>(grad)}};
  AdamConfig config;
  Adam<double> adam(config, params);

  const double grads[3] = {0.5, -0.3, 1.2};
  double expected = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 3; ++t) {
    grad[0] = grads[t - 1];
    adam.step();

    m = config.beta1 * m + (1.0 - config.beta1) * grads[t - 1];
    v = config.beta2 * v + (1.0 - config.beta2) * grads[t - 1] * grads[t - 1];
    const double mhat = m / (1.0 - std::pow(config.beta1, t));
    const double vhat = v / (1.0 - std::pow(config.beta2, t));
    expected -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    CHECK(value[0] == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("adam names the array holding a non-finite gradient") {
  std::vector<double> value = {1.0, 2.0};
  std::vector<double> grad = {0.0, std::nan("")};
  std::vector<nn::ParamRef<double>> params = {
      {"w", std::span<double>(value), std::span<double>(grad)}};
  Adam<double> adam(AdamConfig{}, params);
  CHECK_THROWS_WITH_AS(adam.step(), "non-finite gradient in w at element 1",
                       std::runtime_error);
}

TEST_CASE("train config defaults are frozen") {
  const TrainConfig c;
  CHECK(c.mode == "ssl");
  CHECK(c.epochs == 20);
  CHECK(c.batch_size == 128);
  CHECK(c.lr == 0.001);
  CHECK(c.noise_factor == 0.5);
  CHECK(c.sample_count == 50000);
  CHECK(c.seed == 0);
  CHECK(c.lambda_ce == 0.1);
  CHECK(c.placement == NoisePlacement::kInput);
}

TEST_CASE("train config survives a json round trip") {
  TrainConfig c;
  c.mode = "sl";
  c.epochs = 3;
  c.batch_size = 32;
  c.lr = 0.005;
  c.noise_factor = 0.25;
  c.sample_count = 4000;
  c.seed = 99;
  c.lambda_ce = 0.2;
  c.placement = NoisePlacement::kLatent;

  const auto back = TrainConfig::from_json(c.to_json());
  CHECK(back.mode == c.mode);
  CHECK(back.epochs == c.epochs);
  CHECK(back.batch_size == c.batch_size);
  CHECK(back.lr == c.lr);
  CHECK(back.noise_factor == c.noise_factor);
  CHECK(back.sample_count == c.sample_count);
  CHECK(back.seed == c.seed);
  CHECK(back.lambda_ce == c.lambda_ce);
  CHECK(back.placement == c.placement);
  CHECK(back.spec == c.spec);
}

TEST_CASE("training rejects invalid configs") {
  const auto split = make_corpus_split(64);
  TrainConfig config = smoke_config(1);
  config.mode = "semi";
  CHECK_THROWS(train_model(split, config));
  config = smoke_config(0);
  CHECK_THROWS(train_model(split, config));
  config = smoke_config(1);
  config.lr = -1.0;
  CHECK_THROWS(train_model(split, config));
  config = smoke_config(1);
  config.sample_count = 65;  // more than the split holds
  CHECK_THROWS(train_model(split, config));
}

TEST_CASE("self-supervised training reduces the loss") {
  const auto split = make_corpus_split(512);
  const auto result = train_ssl(split, smoke_config(4));
  REQUIRE(result.trace.epochs.size() == 4);
  CHECK(result.head == nullptr);
  CHECK(result.trace.epochs.front().total > result.trace.epochs.back().total);
  for (const auto& e : result.trace.epochs) {
    CHECK(std::isfinite(e.total));
    CHECK(e.total == doctest::Approx(e.mse));  // no ce term in ssl
    CHECK(e.ce == 0.0);
  }
}

TEST_CASE("training is bitwise deterministic in the seed") {
  const auto split = make_corpus_split(512);
  const auto a = train_ssl(split, smoke_config(2));
  const auto b = train_ssl(split, smoke_config(2));
  CHECK(params_equal(a, b));
  REQUIRE(a.trace.epochs.size() == b.trace.epochs.size());
  for (std::size_t i = 0; i < a.trace.epochs.size(); ++i) {
    CHECK(a.trace.epochs[i].total == b.trace.epochs[i].total);
  }

  auto other = smoke_config(2);
  other.seed = 8;
  const auto c = train_ssl(split, other);
  CHECK_FALSE(params_equal(a, c));
}

TEST_CASE("label-supervised training populates the head and ce term") {
  const auto split = make_corpus_split(512);
  const auto result = train_sl(split, smoke_config(2));
  REQUIRE(result.head != nullptr);
  CHECK(result.head->in_features() == 2048);
  CHECK(result.head->out_features() == 10);
  for (const auto& e : result.trace.epochs) {
    CHECK(e.ce > 0.0);
    CHECK(e.total == doctest::Approx(e.mse + 0.1 * e.ce));
  }
}

TEST_CASE("zero label weight reproduces the self-supervised run") {
  const auto split = make_corpus_split(512);
  auto config = smoke_config(2);

  const auto ssl = train_ssl(split, config);
  config.lambda_ce = 0.0;
  const auto sl = train_sl(split, config);

  REQUIRE(sl.head != nullptr);
  CHECK(params_equal(ssl, sl));  // backbone trajectories coincide
  REQUIRE(ssl.trace.epochs.size() == sl.trace.epochs.size());
  for (std::size_t i = 0; i < ssl.trace.epochs.size(); ++i) {
    CHECK(ssl.trace.epochs[i].total == sl.trace.epochs[i].total);
    CHECK(ssl.trace.epochs[i].mse == sl.trace.epochs[i].mse);
    CHECK(sl.trace.epochs[i].ce == 0.0);
  }
}

TEST_CASE("checkpoints round trip the trained model exactly") {
  const auto dir = std::filesystem::temp_directory_path() / "semcomm_ckpt_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.ckpt";

  const auto split = make_corpus_split(512);
  const auto trained = train_sl(split, smoke_config(1));
  save_checkpoint(path, trained);

  const auto data = load_checkpoint(path);
  CHECK(data.config.mode == "sl");
  CHECK(data.config.seed == 7);
  REQUIRE(data.trace.epochs.size() == 1);
  CHECK(data.trace.epochs[0].total == trained.trace.epochs[0].total);
  REQUIRE(data.arrays.size() == 14);  // 12 backbone + head weight/bias

  const auto restored = restore_checkpoint(data);
  REQUIRE(restored.head != nullptr);
  CHECK(params_equal(trained, restored));

  Tensor4<float> probe(1, 3, 32, 32);
  rng::Stream stream(3);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    probe.data()[i] = static_cast<float>(stream.uniform(-1.0, 1.0));
  }
  const auto y1 = trained.model->forward(probe);
  const auto y2 = restored.model->forward(probe);
  CHECK(std::memcmp(y1.data(), y2.data(), y1.size() * sizeof(float)) == 0);
}

TEST_CASE("saving the same result twice yields identical bytes") {
  const auto dir = std::filesystem::temp_directory_path() / "semcomm_ckpt_bytes";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  const auto split = make_corpus_split(512);
  const auto trained = train_ssl(split, smoke_config(1));
  save_checkpoint(dir / "a.ckpt", trained);
  save_checkpoint(dir / "b.ckpt", trained);

  const auto a = read_file_bytes(dir / "a.ckpt");
  const auto b = read_file_bytes(dir / "b.ckpt");
  CHECK(a == b);
}

TEST_CASE("checkpoint loader rejects damaged files") {
  const auto dir = std::filesystem::temp_directory_path() / "semcomm_ckpt_bad";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  const auto split = make_corpus_split(512);
  const auto trained = train_ssl(split, smoke_config(1));
  const auto path = dir / "good.ckpt";
  save_checkpoint(path, trained);
  auto bytes = read_file_bytes(path);

  auto write_variant = [&](const std::vector<std::uint8_t>& b) {
    write_file_atomic(dir / "bad.ckpt", b);
    return dir / "bad.ckpt";
  };

  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS(load_checkpoint(write_variant(magic)));

  auto version = bytes;
  version[8] = 99;
  CHECK_THROWS(load_checkpoint(write_variant(version)));

  auto truncated = bytes;
  truncated.resize(truncated.size() - 100);
  CHECK_THROWS(load_checkpoint(write_variant(truncated)));

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS(load_checkpoint(write_variant(trailing)));

  auto tiny = bytes;
  tiny.resize(10);
  CHECK_THROWS(load_checkpoint(write_variant(tiny)));
}

TEST_CASE("restore refuses a model list that does not match") {
  const auto dir = std::filesystem::temp_directory_path() / "semcomm_ckpt_mismatch";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.ckpt";

  const auto split = make_corpus_split(512);
  save_checkpoint(path, train_ssl(split, smoke_config(1)));
  auto data = load_checkpoint(path);
  data.config.mode = "sl";  // demands head arrays the file lacks
  CHECK_THROWS(restore_checkpoint(data));
}
