// Reconstruction quality metrics. PSNR is computed in the denormalized
// [0, 1] pixel domain with peak 1, then averaged arithmetically over
// images. A zero-error image is scored at the 100 dB cap.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semcomm/autoencoder.hpp"
#include "semcomm/channel.hpp"
#include "semcomm/dataset.hpp"
#include "semcomm/tensor.hpp"

namespace semcomm {

inline constexpr double kPsnrCapDb = 100.0;

// Mean squared error between same-shaped tensors, double accumulation.
double mse_between(const Tensor4<float>& a, const Tensor4<float>& b);

// 10 * log10(peak^2 / mse), capped at 100 dB; mse must be >= 0.
double psnr_db(double mse, double peak = 1.0);

// 100 * (sl - ssl) / sl, the supervised advantage in percent.
double relative_gap_percent(double sl_psnr, double ssl_psnr);

struct EvalResult {
  double mean_psnr_db = 0.0;
  double mean_mse = 0.0;
  int n_images = 0;
};

// Corrupts each image independently (sigma = nasar * that image's RMS,
// noise from a stream derived per image index) so the result does not
// depend on batching, then scores reconstruction PSNR per image in the
// denormalized domain and averages. Deterministic in (model, split,
// nasar, seed).
EvalResult evaluate_model(Autoencoder<float>& model, const Split& split,
                          double nasar, std::uint64_t seed,
                          NoisePlacement placement = NoisePlacement::kInput,
                          int batch_size = 256);

struct MetricsRecord {
  std::string model_tag;  // "ssl" or "sl"
  double nasar = 0.0;
  int sample_count = 0;
  double mean_psnr_db = 0.0;
  double mean_mse = 0.0;
  int n_images = 0;
  std::uint64_t seed = 0;

  std::string to_csv_row() const;
  std::string to_json() const;
  static std::string csv_header();
  static MetricsRecord from_json(const std::string& text);
};

// Record-level gap; the two records must describe the same evaluation
// (equal nasar and image count) or the comparison is meaningless.
double relative_gap_percent(const MetricsRecord& sl, const MetricsRecord& ssl);

}  // namespace semcomm
