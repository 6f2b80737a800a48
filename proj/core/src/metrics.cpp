#include "semcomm/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "semcomm/rng.hpp"

namespace semcomm {
namespace {

using nlohmann::json;

// Shortest round-trip decimal form, suitable for CSV cells.
std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) {
    throw std::runtime_error("double formatting failed");
  }
  return std::string(buf, ptr);
}

// Adds AWGN to each item of the batch independently: sigma scales with
// that item's own RMS, and the noise stream is derived from the item's
// global position within the split.
void corrupt_slices(Tensor4<float>& batch, double nasar, std::uint64_t seed,
                    int first_position) {
  if (nasar == 0.0) {
    return;
  }
  const std::size_t item = batch.item_size();
  for (int i = 0; i < batch.n(); ++i) {
    float* p = batch.data() + static_cast<std::size_t>(i) * item;
    double sum_sq = 0.0;
    for (std::size_t j = 0; j < item; ++j) {
      sum_sq += static_cast<double>(p[j]) * static_cast<double>(p[j]);
    }
    const double sigma =
        nasar * std::sqrt(sum_sq / static_cast<double>(item));
    rng::Stream stream(rng::derive(
        seed, "eval/img", static_cast<std::uint64_t>(first_position + i)));
    for (std::size_t j = 0; j < item; ++j) {
      p[j] += static_cast<float>(sigma * stream.gaussian());
    }
  }
}

}  // namespace

double mse_between(const Tensor4<float>& a, const Tensor4<float>& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("mse_between: shape mismatch");
  }
  if (a.size() == 0) {
    throw std::invalid_argument("mse_between: empty tensors");
  }
  const float* pa = a.data();
  const float* pb = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double psnr_db(double mse, double peak) {
  if (!(mse >= 0.0) || !std::isfinite(mse)) {
    throw std::invalid_argument("psnr_db: mse must be finite and >= 0");
  }
  if (!(peak > 0.0) || !std::isfinite(peak)) {
    throw std::invalid_argument("psnr_db: peak must be finite and > 0");
  }
  if (mse == 0.0) {
    return kPsnrCapDb;
  }
  const double value = 10.0 * std::log10(peak * peak / mse);
  return value > kPsnrCapDb ? kPsnrCapDb : value;
}

double relative_gap_percent(double sl_psnr, double ssl_psnr) {
  if (sl_psnr == 0.0) {
    throw std::invalid_argument("relative_gap_percent: sl_psnr must be nonzero");
  }
  return 100.0 * (sl_psnr - ssl_psnr) / sl_psnr;
}

double relative_gap_percent(const MetricsRecord& sl, const MetricsRecord& ssl) {
  if (sl.nasar != ssl.nasar || sl.n_images != ssl.n_images) {
    throw std::invalid_argument(
        "relative_gap_percent: records evaluate different settings");
  }
  return relative_gap_percent(sl.mean_psnr_db, ssl.mean_psnr_db);
}

EvalResult evaluate_model(Autoencoder<float>& model, const Split& split,
                          double nasar, std::uint64_t seed,
                          NoisePlacement placement, int batch_size) {
  if (split.size() == 0) {
    throw std::invalid_argument("evaluate_model: empty split");
  }
  if (batch_size < 1) {
    throw std::invalid_argument("evaluate_model: batch_size must be >= 1");
  }
  if (!(nasar >= 0.0) || !std::isfinite(nasar)) {
    throw std::invalid_argument("evaluate_model: nasar must be finite and >= 0");
  }

  EvalResult result;
  result.n_images = split.size();
  double psnr_sum = 0.0;
  double mse_sum = 0.0;

  std::vector<int> positions;
  for (int start = 0; start < split.size(); start += batch_size) {
    const int count = std::min(batch_size, split.size() - start);
    positions.resize(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) positions[static_cast<std::size_t>(i)] = start + i;
    ImageBatch batch = split.make_batch(positions, false);
    const Tensor4<float>& clean = batch.data;

    Tensor4<float> recon;
    if (placement == NoisePlacement::kInput) {
      Tensor4<float> noisy = clean;
      corrupt_slices(noisy, nasar, seed, start);
      recon = model.forward(noisy);
    } else {
      Tensor4<float> z = model.encode(clean);
      corrupt_slices(z, nasar, seed, start);
      recon = model.decode(z);
    }

    const std::size_t item = clean.item_size();
    for (int i = 0; i < count; ++i) {
      const float* c = clean.data() + static_cast<std::size_t>(i) * item;
      const float* r = recon.data() + static_cast<std::size_t>(i) * item;
      double acc = 0.0;
      for (std::size_t p = 0; p < item; ++p) {
        const double d = static_cast<double>(denormalize_value(r[p])) -
                         static_cast<double>(denormalize_value(c[p]));
        acc += d * d;
      }
      const double img_mse = acc / static_cast<double>(item);
      psnr_sum += psnr_db(img_mse);
      mse_sum += img_mse;
    }
  }

  result.mean_psnr_db = psnr_sum / result.n_images;
  result.mean_mse = mse_sum / result.n_images;
  return result;
}

std::string MetricsRecord::csv_header() {
  return "model_tag,nasar,sample_count,mean_psnr_db,mean_mse,n_images,seed";
}

std::string MetricsRecord::to_csv_row() const {
  return model_tag + "," + format_double(nasar) + "," +
         std::to_string(sample_count) + "," + format_double(mean_psnr_db) + "," +
         format_double(mean_mse) + "," + std::to_string(n_images) + "," +
         std::to_string(seed);
}

std::string MetricsRecord::to_json() const {
  json j;
  j["model_tag"] = model_tag;
  j["nasar"] = nasar;
  j["sample_count"] = sample_count;
  j["mean_psnr_db"] = mean_psnr_db;
  j["mean_mse"] = mean_mse;
  j["n_images"] = n_images;
  j["seed"] = seed;
  return j.dump();
}

MetricsRecord MetricsRecord::from_json(const std::string& text) {
  const json j = json::parse(text);
  MetricsRecord r;
  r.model_tag = j.at("model_tag").get<std::string>();
  r.nasar = j.at("nasar").get<double>();
  r.sample_count = j.at("sample_count").get<int>();
  r.mean_psnr_db = j.at("mean_psnr_db").get<double>();
  r.mean_mse = j.at("mean_mse").get<double>();
  r.n_images = j.at("n_images").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

}  // namespace semcomm
