// Microbenchmarks for the hot paths: corpus synthesis, the conv
// lowering, codec forward/backward, channel noise, and evaluation.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <numeric>
#include <vector>

#include "semcomm/autoencoder.hpp"
#include "semcomm/channel.hpp"
#include "semcomm/dataset.hpp"
#include "semcomm/metrics.hpp"
#include "semcomm/nn.hpp"
#include "semcomm/procgen.hpp"
#include "semcomm/rng.hpp"
#include "semcomm/training.hpp"

namespace {

using namespace semcomm;

Split sample_split(int n) {
  const std::vector<std::uint8_t> shard = procgen::make_shard(1, 0);
  auto pixels = std::make_shared<std::vector<std::uint8_t>>(
      static_cast<std::size_t>(n) * kImagePixels);
  auto labels = std::make_shared<std::vector<std::uint8_t>>(n);
  std::vector<int> index(n);
  for (int i = 0; i < n; ++i) {
    const std::uint8_t* rec =
        shard.data() + static_cast<std::size_t>(i) * kRecordBytes;
    (*labels)[i] = rec[0];
    std::copy(rec + 1, rec + kRecordBytes,
              pixels->data() + static_cast<std::size_t>(i) * kImagePixels);
    index[i] = i;
  }
  return Split(std::move(pixels), std::move(labels), std::move(index));
}

Tensor4<float> sample_batch(int n) {
  const Split split = sample_split(n);
  std::vector<int> positions(n);
  std::iota(positions.begin(), positions.end(), 0);
  return split.make_batch(positions, false).data;
}

Autoencoder<float> seeded_model() {
  Autoencoder<float> model(default_autoencoder_spec(), kImageChannels,
                           kImageHeight, kImageWidth);
  rng::Stream stream(1);
  model.init(stream);
  return model;
}

void BM_RenderRecord(benchmark::State& state) {
  std::vector<std::uint8_t> px(kImagePixels);
  int record = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        procgen::render_record(1, 0, record++ % kRecordsPerShard, px.data()));
  }
}
BENCHMARK(BM_RenderRecord);

void BM_Im2col(benchmark::State& state) {
  // Second encoder stage geometry: 32 channels at 16x16 down to 8x8.
  std::vector<float> x(32 * 16 * 16);
  std::vector<float> col(static_cast<std::size_t>(32) * 9 * 64);
  rng::Stream stream(2);
  for (auto& v : x) v = static_cast<float>(stream.uniform(-1.0, 1.0));
  for (auto _ : state) {
    nn::im2col(x.data(), 32, 16, 16, 3, 2, 1, 8, 8, col.data());
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_Im2col);

void BM_CodecForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Autoencoder<float> model = seeded_model();
  const Tensor4<float> batch = sample_batch(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward(batch));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_CodecForward)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Autoencoder<float> model = seeded_model();
  Adam<float> adam(AdamConfig{}, model.params());
  const Tensor4<float> clean = sample_batch(n);
  rng::Stream stream(3);
  const Tensor4<float> noisy = add_awgn(clean, 0.5, stream);
  for (auto _ : state) {
    const Tensor4<float> recon = model.forward(noisy);
    const MseResult<float> mse = mse_loss(recon, clean);
    const Tensor4<float> dz = model.backward_decoder(mse.grad);
    model.backward_encoder(dz);
    adam.step();
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TrainStep)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_AddAwgn(benchmark::State& state) {
  Tensor4<float> t(1, 1, 1000, 1000);
  rng::Stream fill(4);
  for (std::size_t i = 0; i < t.size(); ++i)
    t.data()[i] = static_cast<float>(fill.uniform(-1.0, 1.0));
  rng::Stream stream(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(add_awgn(t, 0.25, stream));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(t.size()));
}
BENCHMARK(BM_AddAwgn)->Unit(benchmark::kMillisecond);

void BM_PsnrBatch(benchmark::State& state) {
  const Tensor4<float> a = sample_batch(64);
  Tensor4<float> b = a;
  rng::Stream stream(6);
  b = add_awgn(b, 0.1, stream);
  for (auto _ : state) {
    benchmark::DoNotOptimize(psnr_db(mse_between(denormalize(a), denormalize(b))));
  }
}
BENCHMARK(BM_PsnrBatch);

void BM_EvaluateModel(benchmark::State& state) {
  Autoencoder<float> model = seeded_model();
  const Split split = sample_split(64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_model(model, split, 0.5, 9));
  }
  state.SetItemsProcessed(state.iterations() * split.size());
}
BENCHMARK(BM_EvaluateModel)->Unit(benchmark::kMillisecond);

void BM_CheckpointRoundTrip(benchmark::State& state) {
  TrainResult result;
  result.model = std::make_unique<Autoencoder<float>>(
      default_autoencoder_spec(), kImageChannels, kImageHeight, kImageWidth);
  rng::Stream stream(7);
  result.model->init(stream);
  const auto path =
      std::filesystem::temp_directory_path() / "semcomm_bench_checkpoint.bin";
  for (auto _ : state) {
    save_checkpoint(path, result);
    benchmark::DoNotOptimize(load_checkpoint(path));
  }
  std::filesystem::remove(path);
}
BENCHMARK(BM_CheckpointRoundTrip)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
