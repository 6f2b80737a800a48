// Release gate. Each check prints one verdict line:
//
//   [4/9] PASS reconstruction psnr matches an independent scalar oracle (...)
//
// and the process exits with the number of failed checks.
//
// Usage: semcomm_acceptance [fast|full|all]
//   fast  checks 4..9: statistics, determinism, gradients, ingestion,
//         and the lambda = 0 reduction. Desk scale, needs the corpus
//         fixture, finishes in seconds.
//   full  checks 1..3: the two headline comparison sweeps at default
//         configuration. Roughly an hour of training on one core.
//   all   both groups (default).

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include "semcomm/autoencoder.hpp"
#include "semcomm/channel.hpp"
#include "semcomm/dataset.hpp"
#include "semcomm/digest.hpp"
#include "semcomm/experiments.hpp"
#include "semcomm/metrics.hpp"
#include "semcomm/nn.hpp"
#include "semcomm/procgen.hpp"
#include "semcomm/rng.hpp"
#include "semcomm/training.hpp"

namespace {

using namespace semcomm;

const std::filesystem::path kDataDir = SEMCOMM_TEST_DATA_DIR;

int g_failures = 0;

struct Outcome {
  bool ok = false;
  std::string detail;
};

void verdict(int index, const Outcome& o, const std::string& what) {
  std::cout << "[" << index << "/9] " << (o.ok ? "PASS " : "FAIL ") << what;
  if (!o.detail.empty()) std::cout << " (" << o.detail << ")";
  std::cout << std::endl;
  if (!o.ok) ++g_failures;
}

void skipped(int index, const std::string& what) {
  std::cout << "[" << index << "/9] SKIP " << what << std::endl;
}

template <typename Fn>
Outcome guarded(Fn&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {false, std::string("threw: ") + e.what()};
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const Dataset& fixture_dataset() {
  static const Dataset d = load_dataset(kDataDir);
  return d;
}

// ---- checks 1 and 3: noise-ratio sweep at default configuration ----

Outcome check_noise_gap_bands(const SweepResult& r) {
  double low = 0.0, high = 0.0;
  for (const SweepPoint& p : r.points) {
    if (p.grid_value == 0.1) low = p.gap_percent;
    if (p.grid_value == 0.5) high = p.gap_percent;
  }
  Outcome o;
  o.ok = low >= 2.0 && low <= 9.0 && high >= 1.0 && high <= 7.0 && low > high;
  o.detail = "gap " + fmt(low) + "% at ratio 0.1 (band 2..9), " + fmt(high) +
             "% at 0.5 (band 1..7)" + (low > high ? ", shrinking" : ", NOT shrinking");
  return o;
}

Outcome check_noise_decline(const SweepResult& r) {
  Outcome o;
  o.ok = true;
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    if (r.points[i].ssl.mean_psnr_db >= r.points[i - 1].ssl.mean_psnr_db) {
      o.ok = false;
      o.detail += " ssl flat/rising at ratio " + fmt(r.points[i].grid_value) + ";";
    }
    if (r.points[i].sl.mean_psnr_db >= r.points[i - 1].sl.mean_psnr_db) {
      o.ok = false;
      o.detail += " sl flat/rising at ratio " + fmt(r.points[i].grid_value) + ";";
    }
  }
  if (o.ok) {
    o.detail = "both psnr chains strictly decreasing over " +
               std::to_string(r.points.size()) + " ratios, ssl " +
               fmt(r.points.front().ssl.mean_psnr_db) + ".." +
               fmt(r.points.back().ssl.mean_psnr_db) + " dB";
  }
  return o;
}

// ---- check 2: sample-count sweep at fixed evaluation noise ----

Outcome check_sample_gap_shrink(const SweepResult& r) {
  const SweepPoint& first = r.points.front();
  const SweepPoint& last = r.points.back();
  const double shrink = first.gap_percent - last.gap_percent;

  int ssl_inversions = 0, sl_inversions = 0;
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    if (r.points[i].ssl.mean_psnr_db < r.points[i - 1].ssl.mean_psnr_db)
      ++ssl_inversions;
    if (r.points[i].sl.mean_psnr_db < r.points[i - 1].sl.mean_psnr_db)
      ++sl_inversions;
  }

  Outcome o;
  o.ok = shrink >= 2.0 && ssl_inversions <= 1 && sl_inversions <= 1;
  o.detail = "gap " + fmt(first.gap_percent) + "% at " +
             fmt(first.grid_value) + " samples -> " + fmt(last.gap_percent) +
             "% at " + fmt(last.grid_value) + " (shrink " + fmt(shrink) +
             " points, need >= 2); psnr inversions ssl " +
             std::to_string(ssl_inversions) + ", sl " +
             std::to_string(sl_inversions) + " (each <= 1)";
  return o;
}

// ---- check 4: psnr against an independent scalar-loop oracle ----

Outcome check_psnr_oracle() {
  rng::Stream stream(4242);
  double worst = 0.0;
  for (int pair = 0; pair < 100; ++pair) {
    Tensor4<float> a(1, 3, 8, 8), b(1, 3, 8, 8);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a.data()[i] = static_cast<float>(stream.uniform(0.0, 1.0));
      b.data()[i] = static_cast<float>(stream.uniform(0.0, 1.0));
    }
    const double got = psnr_db(mse_between(a, b));

    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(a.data()[i]) -
                       static_cast<double>(b.data()[i]);
      acc += d * d;
    }
    acc /= static_cast<double>(a.size());
    const double want =
        acc == 0.0 ? 100.0 : std::min(100.0, 10.0 * std::log10(1.0 / acc));
    worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
  }

  Tensor4<float> x(1, 3, 8, 8), zeros(1, 3, 8, 8), ones(1, 3, 8, 8),
      halves(1, 3, 8, 8);
  for (std::size_t i = 0; i < x.size(); ++i)
    x.data()[i] = static_cast<float>(stream.uniform(-1.0, 1.0));
  zeros.fill(0.0f);
  ones.fill(1.0f);
  halves.fill(0.5f);
  const bool identical_caps = psnr_db(mse_between(x, x)) == 100.0;
  const bool unit_error_zero_db = psnr_db(mse_between(ones, zeros)) == 0.0;
  const double quarter = psnr_db(mse_between(halves, zeros));
  const bool quarter_matches = std::abs(quarter - 10.0 * std::log10(4.0)) <= 1e-12;

  Outcome o;
  o.ok = worst <= 1e-9 && identical_caps && unit_error_zero_db && quarter_matches;
  o.detail = "worst relative disagreement " + fmt(worst) +
             " over 100 pairs; identical -> 100 dB " +
             (identical_caps ? "ok" : "BROKEN") + ", unit mse -> 0 dB " +
             (unit_error_zero_db ? "ok" : "BROKEN") + ", quarter mse -> " +
             fmt(quarter) + " dB";
  return o;
}

// ---- check 5: injected noise statistics and the zero-noise identity ----

Outcome check_channel_statistics() {
  const double sigma = 0.37;
  Tensor4<float> silence(1, 1, 1000, 1000);
  silence.fill(0.0f);
  rng::Stream stream(777);
  const Tensor4<float> noise = add_awgn(silence, sigma, stream);

  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    const double v = noise.data()[i];
    sum += v;
    sumsq += v * v;
  }
  const double n = static_cast<double>(noise.size());
  const double mean = sum / n;
  const double sd = std::sqrt(sumsq / n - mean * mean);
  const double sd_rel = std::abs(sd - sigma) / sigma;

  Tensor4<float> image(2, 3, 32, 32);
  rng::Stream fill(778);
  for (std::size_t i = 0; i < image.size(); ++i)
    image.data()[i] = static_cast<float>(fill.uniform(-1.0, 1.0));
  rng::Stream channel_stream(779);
  const Tensor4<float> through =
      corrupt(image, ChannelConfig{0.0, NoisePlacement::kInput}, channel_stream);
  const bool identity =
      std::memcmp(image.data(), through.data(),
                  image.size() * sizeof(float)) == 0;

  Outcome o;
  o.ok = sd_rel <= 0.005 && std::abs(mean) <= 0.002 && identity;
  o.detail = "1e6 draws: std " + fmt(sd) + " vs sigma " + fmt(sigma) + " (" +
             fmt(sd_rel * 100.0) + "%, cap 0.5%), mean " + fmt(mean) +
             " (cap 0.002); zero ratio " +
             (identity ? "bitwise identity" : "NOT an identity");
  return o;
}

// ---- check 6: run-to-run determinism ----

int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string command =
      std::string(SEMCOMM_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome check_determinism() {
  const auto scratch = kDataDir.parent_path() / "acceptance_scratch";
  std::filesystem::remove_all(scratch);
  std::filesystem::create_directories(scratch);

  const std::string base_args =
      "train --mode ssl --epochs 1 --samples 512 --seed 7 --data-dir " +
      kDataDir.string() + " --out ";
  for (int run = 0; run < 2; ++run) {
    const auto out = scratch / ("run" + std::to_string(run));
    const auto log = scratch / ("run" + std::to_string(run) + ".log");
    const int code = run_cli(base_args + out.string(), log);
    if (code != 0) {
      return {false, "training run " + std::to_string(run) + " exited " +
                         std::to_string(code) + ", log " + log.string()};
    }
  }
  const std::string digest0 = sha256_hex_file(scratch / "run0/checkpoint.bin");
  const std::string digest1 = sha256_hex_file(scratch / "run1/checkpoint.bin");
  const bool checkpoints_equal = digest0 == digest1;

  const Dataset& data = fixture_dataset();
  const Split sub_a = subset_sample(data.train, {512, 11, true});
  const Split sub_b = subset_sample(data.train, {512, 11, true});
  const Split sub_c = subset_sample(data.train, {512, 12, true});
  const bool subset_reproduces =
      std::equal(sub_a.index().begin(), sub_a.index().end(),
                 sub_b.index().begin(), sub_b.index().end()) &&
      !std::equal(sub_a.index().begin(), sub_a.index().end(),
                  sub_c.index().begin(), sub_c.index().end());

  BatchIterator it_a(sub_a, 128, 33);
  BatchIterator it_b(sub_a, 128, 33);
  BatchIterator it_c(sub_a, 128, 34);
  ImageBatch ba, bb, bc;
  it_a.next(ba);
  it_b.next(bb);
  it_c.next(bc);
  const bool order_reproduces = ba.data.storage() == bb.data.storage() &&
                                ba.data.storage() != bc.data.storage();

  Outcome o;
  o.ok = checkpoints_equal && subset_reproduces && order_reproduces;
  o.detail = std::string("checkpoints ") +
             (checkpoints_equal ? "sha256-equal" : "DIFFER") + "; subset " +
             (subset_reproduces ? "seed-stable" : "NOT seed-stable") +
             "; batch order " +
             (order_reproduces ? "seed-stable" : "NOT seed-stable");
  return o;
}

// ---- check 7: backprop against central finite differences ----

Outcome check_gradients() {
  const AutoencoderSpec spec = default_autoencoder_spec();
  Autoencoder<double> model(spec, kImageChannels, kImageHeight, kImageWidth);
  rng::Stream backbone_init(rng::derive(99, "init/backbone"));
  model.init(backbone_init);
  nn::Linear<double> head(model.latent_size(), kNumClasses);
  rng::Stream head_init(rng::derive(99, "init/head"));
  head.init(head_init);

  Tensor4<double> clean(4, kImageChannels, kImageHeight, kImageWidth);
  std::vector<int> labels(4);
  std::vector<std::uint8_t> px(kImagePixels);
  for (int i = 0; i < 4; ++i) {
    labels[i] = procgen::render_record(20240901, 0, i * 17, px.data());
    for (int j = 0; j < kImagePixels; ++j) {
      clean.item(i)[j] = static_cast<double>(normalize_value(px[j]));
    }
  }
  // One fixed corrupted input; the probes below must all see the same
  // noise realization.
  Tensor4<double> noisy = clean;
  rng::Stream noise(515);
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    noisy.data()[i] += 0.5 * noise.gaussian();
  }

  const double lambda = 0.1;
  const auto loss = [&]() {
    const Tensor4<double> z = model.encode(noisy);
    const Tensor4<double> recon = model.decode(z);
    const MseResult<double> mse = mse_loss(recon, clean);
    const std::vector<double> logits = head.forward(z);
    const CeResult<double> ce = cross_entropy_loss(logits, labels, kNumClasses);
    return mse.value + lambda * ce.value;
  };

  // Analytic pass: reconstruction loss through the decoder, weighted
  // head loss through the dense layer, both summed into the latent.
  const Tensor4<double> z = model.encode(noisy);
  const Tensor4<double> recon = model.decode(z);
  const MseResult<double> mse = mse_loss(recon, clean);
  const std::vector<double> logits = head.forward(z);
  const CeResult<double> ce = cross_entropy_loss(logits, labels, kNumClasses);
  std::vector<double> dlogits(ce.grad.size());
  for (std::size_t i = 0; i < dlogits.size(); ++i) dlogits[i] = lambda * ce.grad[i];
  Tensor4<double> dz = model.backward_decoder(mse.grad);
  const Tensor4<double> dz_head = head.backward(dlogits);
  for (std::size_t i = 0; i < dz.size(); ++i) dz.data()[i] += dz_head.data()[i];
  model.backward_encoder(dz);

  std::vector<nn::ParamRef<double>> params = model.params();
  head.collect_params("head", params);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.emplace_back(p.grad.begin(), p.grad.end());

  const double h = 1e-5;
  double worst = 0.0;
  std::string worst_at = "none";
  int probed = 0;
  for (std::size_t a = 0; a < params.size(); ++a) {
    auto& p = params[a];
    const std::size_t stride = std::max<std::size_t>(1, p.value.size() / 5);
    for (std::size_t j = 0; j < p.value.size(); j += stride) {
      const double original = p.value[j];
      p.value[j] = original + h;
      const double up = loss();
      p.value[j] = original - h;
      const double down = loss();
      p.value[j] = original;
      const double fd = (up - down) / (2.0 * h);
      const double an = analytic[a][j];
      const double rel =
          std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8});
      ++probed;
      if (rel > worst) {
        worst = rel;
        worst_at = p.name + "[" + std::to_string(j) + "]";
      }
    }
  }

  Outcome o;
  o.ok = worst <= 1e-3;
  o.detail = std::to_string(probed) + " coordinates over " +
             std::to_string(params.size()) + " arrays, worst relative error " +
             fmt(worst) + " at " + worst_at + " (cap 1e-3)";
  return o;
}

// ---- check 8: corpus ingestion invariants ----

Outcome check_ingestion() {
  const Dataset& data = fixture_dataset();
  const bool counts_ok =
      data.train.size() == kTrainRecords && data.test.size() == kTestRecords;

  bool labels_ok = true;
  for (int i = 0; i < data.train.size() && labels_ok; ++i) {
    const int l = data.train.label(i);
    labels_ok = l >= 0 && l < kNumClasses;
  }
  for (int i = 0; i < data.test.size() && labels_ok; ++i) {
    const int l = data.test.label(i);
    labels_ok = l >= 0 && l < kNumClasses;
  }

  const bool endpoints_ok =
      normalize_value(0) == -1.0f && normalize_value(255) == 1.0f;

  double worst_round_trip = 0.0;
  for (int v = 0; v < 256; ++v) {
    const double back = denormalize_value(normalize_value(
        static_cast<std::uint8_t>(v)));
    worst_round_trip =
        std::max(worst_round_trip, std::abs(back - v / 255.0));
  }

  Outcome o;
  o.ok = counts_ok && labels_ok && endpoints_ok && worst_round_trip <= 1e-6;
  o.detail = std::to_string(data.train.size()) + "/" +
             std::to_string(data.test.size()) + " records, labels " +
             (labels_ok ? "in [0,9]" : "OUT OF RANGE") + ", endpoints " +
             (endpoints_ok ? "map to -1/+1" : "BROKEN") +
             ", worst round trip " + fmt(worst_round_trip);
  return o;
}

// ---- check 9: zero label weight reproduces the self-supervised run ----

Outcome check_reduction_identity() {
  const Dataset& data = fixture_dataset();
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.sample_count = 512;
  cfg.seed = 7;
  cfg.lambda_ce = 0.0;
  const TrainResult ssl = train_ssl(data.train, cfg);
  const TrainResult sl = train_sl(data.train, cfg);

  bool trace_equal = ssl.trace.epochs.size() == sl.trace.epochs.size();
  bool ce_silent = true;
  for (std::size_t e = 0; trace_equal && e < ssl.trace.epochs.size(); ++e) {
    trace_equal = ssl.trace.epochs[e].total == sl.trace.epochs[e].total &&
                  ssl.trace.epochs[e].mse == sl.trace.epochs[e].mse;
    ce_silent = ce_silent && sl.trace.epochs[e].ce == 0.0;
  }

  auto ssl_params = ssl.model->params();
  auto sl_params = sl.model->params();
  bool backbone_equal = ssl_params.size() == sl_params.size();
  for (std::size_t i = 0; backbone_equal && i < ssl_params.size(); ++i) {
    backbone_equal =
        ssl_params[i].name == sl_params[i].name &&
        ssl_params[i].value.size() == sl_params[i].value.size() &&
        std::memcmp(ssl_params[i].value.data(), sl_params[i].value.data(),
                    ssl_params[i].value.size() * sizeof(float)) == 0;
  }

  Outcome o;
  o.ok = trace_equal && ce_silent && backbone_equal;
  o.detail = std::string("loss trace ") +
             (trace_equal ? "bitwise equal" : "DIFFERS") + ", label term " +
             (ce_silent ? "silent" : "ACTIVE") + ", all " +
             std::to_string(ssl_params.size()) + " backbone arrays " +
             (backbone_equal ? "bitwise equal" : "DIFFER");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "all";
  if (mode != "fast" && mode != "full" && mode != "all") {
    std::cerr << "usage: semcomm_acceptance [fast|full|all]\n";
    return 64;
  }
  const bool run_fast = mode != "full";
  const bool run_full = mode != "fast";

  const std::string what1 =
      "supervised advantage lands in band and shrinks with noise";
  const std::string what2 =
      "supervised advantage shrinks with training set size";
  const std::string what3 = "psnr declines strictly as channel noise grows";

  Outcome c1, c2, c3;
  if (run_full) {
    const Outcome both = guarded([&] {
      const Dataset& data = fixture_dataset();
      SweepSpec noise_spec;
      noise_spec.kind = "nasar";
      noise_spec.grid = kDefaultNasarGrid;
      std::cerr << "running default-configuration noise sweep..." << std::endl;
      const SweepResult noise_sweep = run_nasar_sweep(data, noise_spec);
      c1 = check_noise_gap_bands(noise_sweep);
      c3 = check_noise_decline(noise_sweep);
      return Outcome{true, ""};
    });
    if (!both.ok) c1 = c3 = both;

    c2 = guarded([&] {
      const Dataset& data = fixture_dataset();
      SweepSpec sample_spec;
      sample_spec.kind = "samples";
      sample_spec.grid = kDefaultSampleGrid;
      sample_spec.eval_nasar = 0.5;
      std::cerr << "running default-configuration sample sweep..." << std::endl;
      return check_sample_gap_shrink(run_samples_sweep(data, sample_spec));
    });

    verdict(1, c1, what1);
    verdict(2, c2, what2);
    verdict(3, c3, what3);
  } else {
    skipped(1, what1);
    skipped(2, what2);
    skipped(3, what3);
  }

  if (run_fast) {
    verdict(4, guarded(check_psnr_oracle),
            "reconstruction psnr matches an independent scalar oracle");
    verdict(5, guarded(check_channel_statistics),
            "injected noise has the requested statistics");
    verdict(6, guarded(check_determinism),
            "equal seeds reproduce checkpoints, subsets, and batch order");
    verdict(7, guarded(check_gradients),
            "backprop matches central finite differences");
    verdict(8, guarded(check_ingestion),
            "corpus parses to full splits with exact normalization");
    verdict(9, guarded(check_reduction_identity),
            "zero label weight reproduces the self-supervised run");
  } else {
    skipped(4, "reconstruction psnr matches an independent scalar oracle");
    skipped(5, "injected noise has the requested statistics");
    skipped(6, "equal seeds reproduce checkpoints, subsets, and batch order");
    skipped(7, "backprop matches central finite differences");
    skipped(8, "corpus parses to full splits with exact normalization");
    skipped(9, "zero label weight reproduces the self-supervised run");
  }

  return g_failures;
}
