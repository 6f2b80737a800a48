// Experiment harness: the two headline comparisons between the
// self-supervised codec and the label-supervised baseline.
//
//   nasar sweep    train once at the configured noise factor, then
//                  evaluate both models across a grid of channel noise
//                  ratios (optionally retraining at every point).
//   samples sweep  train both models from scratch on stratified
//                  subsets of increasing size, evaluating each pair at
//                  a fixed channel noise ratio.
//
// Every grid point derives its own seed from (base seed, kind, the
// IEEE-754 bits of the grid value), so adding or reordering points
// never changes the results of the others.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semcomm/dataset.hpp"
#include "semcomm/metrics.hpp"
#include "semcomm/training.hpp"

namespace semcomm {

inline const std::vector<double> kDefaultNasarGrid = {0.1, 0.2, 0.3, 0.4, 0.5};
inline const std::vector<double> kDefaultSampleGrid = {1000, 2000, 5000,
                                                       10000, 20000, 50000};

struct SweepSpec {
  std::string kind;           // "nasar" or "samples"
  std::vector<double> grid;   // noise ratios, or sample counts
  TrainConfig base;           // seed and training knobs; mode is ignored
  bool retrain_per_point = false;  // nasar sweep: retrain at each ratio
  double eval_nasar = 0.5;         // samples sweep evaluation ratio
  int jobs = 1;                    // parallel grid points (trained points only)
};

std::uint64_t point_seed(std::uint64_t base_seed, const std::string& kind,
                         double grid_value);

struct SweepPoint {
  double grid_value = 0.0;
  MetricsRecord ssl;
  MetricsRecord sl;
  double gap_percent = 0.0;  // 100 * (sl - ssl) / sl on mean PSNR
};

struct SweepResult {
  std::string kind;
  std::vector<double> grid;
  TrainConfig base;
  bool retrain_per_point = false;
  double eval_nasar = 0.5;
  std::vector<SweepPoint> points;
  double wall_seconds = 0.0;

  std::string to_json() const;
  static SweepResult from_json(const std::string& text);
  std::string to_csv() const;  // header + one row per (model, point)
};

SweepResult run_nasar_sweep(const Dataset& data, const SweepSpec& spec);
SweepResult run_samples_sweep(const Dataset& data, const SweepSpec& spec);
SweepResult run_sweep(const Dataset& data, const SweepSpec& spec);

// Writes results.json, results.csv, and plot.csv under dir; when
// emit_figure is set also renders figure.svg. All writes are atomic.
void persist_sweep(const std::filesystem::path& dir, const SweepResult& result,
                   bool emit_figure);

}  // namespace semcomm
