#include "semcomm/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "semcomm/figure.hpp"
#include "semcomm/io.hpp"
#include "semcomm/rng.hpp"

namespace semcomm {
namespace {

using nlohmann::json;

void validate_sweep(const SweepSpec& spec) {
  if (spec.kind != "nasar" && spec.kind != "samples") {
    throw std::invalid_argument("sweep kind must be \"nasar\" or \"samples\"");
  }
  if (spec.grid.empty()) {
    throw std::invalid_argument("sweep grid must not be empty");
  }
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    const double v = spec.grid[i];
    if (!std::isfinite(v)) {
      throw std::invalid_argument("sweep grid values must be finite");
    }
    if (i > 0 && v <= spec.grid[i - 1]) {
      throw std::invalid_argument("sweep grid must be strictly increasing");
    }
    if (spec.kind == "nasar" && v < 0.0) {
      throw std::invalid_argument("noise ratios must be >= 0");
    }
    if (spec.kind == "samples" &&
        (v < 1.0 || v != std::floor(v))) {
      throw std::invalid_argument("sample counts must be positive integers");
    }
  }
  if (spec.jobs < 1) {
    throw std::invalid_argument("jobs must be >= 1");
  }
  if (spec.kind == "samples" &&
      (!(spec.eval_nasar >= 0.0) || !std::isfinite(spec.eval_nasar))) {
    throw std::invalid_argument("eval nasar must be finite and >= 0");
  }
}

// Runs fn(0..count-1), either inline or on a small worker pool. The
// first exception is rethrown after all workers finish.
void run_indexed(int count, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  const int n_threads = std::min(jobs, count);
  threads.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

MetricsRecord make_record(const std::string& tag, double nasar,
                          int sample_count, const EvalResult& eval,
                          std::uint64_t eval_seed) {
  MetricsRecord r;
  r.model_tag = tag;
  r.nasar = nasar;
  r.sample_count = sample_count;
  r.mean_psnr_db = eval.mean_psnr_db;
  r.mean_mse = eval.mean_mse;
  r.n_images = eval.n_images;
  r.seed = eval_seed;
  return r;
}

json point_to_json(const SweepPoint& p) {
  return json{{"grid_value", p.grid_value},
              {"ssl", json::parse(p.ssl.to_json())},
              {"sl", json::parse(p.sl.to_json())},
              {"gap_percent", p.gap_percent}};
}

SweepPoint point_from_json(const json& j) {
  SweepPoint p;
  p.grid_value = j.at("grid_value").get<double>();
  p.ssl = MetricsRecord::from_json(j.at("ssl").dump());
  p.sl = MetricsRecord::from_json(j.at("sl").dump());
  p.gap_percent = j.at("gap_percent").get<double>();
  return p;
}

}  // namespace

std::uint64_t point_seed(std::uint64_t base_seed, const std::string& kind,
                         double grid_value) {
  const std::uint64_t tagged = rng::derive(base_seed, "sweep/" + kind);
  return rng::derive(tagged, "point", rng::bits_of(grid_value));
}

SweepResult run_nasar_sweep(const Dataset& data, const SweepSpec& spec) {
  validate_sweep(spec);
  const auto start = std::chrono::steady_clock::now();

  SweepResult result;
  result.kind = "nasar";
  result.grid = spec.grid;
  result.base = spec.base;
  result.retrain_per_point = spec.retrain_per_point;
  result.eval_nasar = spec.eval_nasar;
  result.points.resize(spec.grid.size());

  if (!spec.retrain_per_point) {
    TrainConfig cfg = spec.base;
    cfg.seed = rng::derive(spec.base.seed, "sweep/nasar/train");
    TrainResult ssl = train_ssl(data.train, cfg);
    TrainResult sl = train_sl(data.train, cfg);
    // Shared models: evaluation mutates layer caches, so points run
    // sequentially; they are cheap next to the single training pass.
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
      const double nasar = spec.grid[i];
      const std::uint64_t eval_seed =
          rng::derive(point_seed(spec.base.seed, "nasar", nasar), "eval");
      SweepPoint& p = result.points[i];
      p.grid_value = nasar;
      p.ssl = make_record("ssl", nasar, cfg.sample_count,
                          evaluate_model(*ssl.model, data.test, nasar, eval_seed,
                                         cfg.placement),
                          eval_seed);
      p.sl = make_record("sl", nasar, cfg.sample_count,
                         evaluate_model(*sl.model, data.test, nasar, eval_seed,
                                        cfg.placement),
                         eval_seed);
      p.gap_percent = relative_gap_percent(p.sl.mean_psnr_db, p.ssl.mean_psnr_db);
    }
  } else {
    run_indexed(static_cast<int>(spec.grid.size()), spec.jobs, [&](int i) {
      const double nasar = spec.grid[static_cast<std::size_t>(i)];
      const std::uint64_t ps = point_seed(spec.base.seed, "nasar", nasar);
      TrainConfig cfg = spec.base;
      cfg.seed = rng::derive(ps, "train");
      const std::uint64_t eval_seed = rng::derive(ps, "eval");
      TrainResult ssl = train_ssl(data.train, cfg);
      TrainResult sl = train_sl(data.train, cfg);
      SweepPoint& p = result.points[static_cast<std::size_t>(i)];
      p.grid_value = nasar;
      p.ssl = make_record("ssl", nasar, cfg.sample_count,
                          evaluate_model(*ssl.model, data.test, nasar, eval_seed,
                                         cfg.placement),
                          eval_seed);
      p.sl = make_record("sl", nasar, cfg.sample_count,
                         evaluate_model(*sl.model, data.test, nasar, eval_seed,
                                        cfg.placement),
                         eval_seed);
      p.gap_percent = relative_gap_percent(p.sl.mean_psnr_db, p.ssl.mean_psnr_db);
    });
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

SweepResult run_samples_sweep(const Dataset& data, const SweepSpec& spec) {
  validate_sweep(spec);
  const auto start = std::chrono::steady_clock::now();

  SweepResult result;
  result.kind = "samples";
  result.grid = spec.grid;
  result.base = spec.base;
  result.retrain_per_point = true;
  result.eval_nasar = spec.eval_nasar;
  result.points.resize(spec.grid.size());

  run_indexed(static_cast<int>(spec.grid.size()), spec.jobs, [&](int i) {
    const double value = spec.grid[static_cast<std::size_t>(i)];
    const int count = static_cast<int>(value);
    const std::uint64_t ps = point_seed(spec.base.seed, "samples", value);
    TrainConfig cfg = spec.base;
    cfg.sample_count = count;
    cfg.seed = rng::derive(ps, "train");
    const std::uint64_t eval_seed = rng::derive(ps, "eval");
    TrainResult ssl = train_ssl(data.train, cfg);
    TrainResult sl = train_sl(data.train, cfg);
    SweepPoint& p = result.points[static_cast<std::size_t>(i)];
    p.grid_value = value;
    p.ssl = make_record("ssl", spec.eval_nasar, count,
                        evaluate_model(*ssl.model, data.test, spec.eval_nasar,
                                       eval_seed, cfg.placement),
                        eval_seed);
    p.sl = make_record("sl", spec.eval_nasar, count,
                       evaluate_model(*sl.model, data.test, spec.eval_nasar,
                                      eval_seed, cfg.placement),
                       eval_seed);
    p.gap_percent = relative_gap_percent(p.sl.mean_psnr_db, p.ssl.mean_psnr_db);
  });

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

SweepResult run_sweep(const Dataset& data, const SweepSpec& spec) {
  validate_sweep(spec);
  return spec.kind == "nasar" ? run_nasar_sweep(data, spec)
                              : run_samples_sweep(data, spec);
}

std::string SweepResult::to_json() const {
  json j;
  j["kind"] = kind;
  j["grid"] = grid;
  j["base_config"] = json::parse(base.to_json());
  j["retrain_per_point"] = retrain_per_point;
  j["eval_nasar"] = eval_nasar;
  j["points"] = json::array();
  for (const auto& p : points) j["points"].push_back(point_to_json(p));
  j["wall_seconds"] = wall_seconds;
  return j.dump(2) + "\n";
}

SweepResult SweepResult::from_json(const std::string& text) {
  const json j = json::parse(text);
  SweepResult r;
  r.kind = j.at("kind").get<std::string>();
  r.grid = j.at("grid").get<std::vector<double>>();
  r.base = TrainConfig::from_json(j.at("base_config").dump());
  r.retrain_per_point = j.at("retrain_per_point").get<bool>();
  r.eval_nasar = j.at("eval_nasar").get<double>();
  for (const auto& p : j.at("points")) r.points.push_back(point_from_json(p));
  r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

std::string SweepResult::to_csv() const {
  std::string out = MetricsRecord::csv_header() + "\n";
  for (const auto& p : points) {
    out += p.ssl.to_csv_row() + "\n";
    out += p.sl.to_csv_row() + "\n";
  }
  return out;
}

void persist_sweep(const std::filesystem::path& dir, const SweepResult& result,
                   bool emit_figure) {
  std::filesystem::create_directories(dir);
  write_text_file_atomic(dir / "results.json", result.to_json());
  write_text_file_atomic(dir / "results.csv", result.to_csv());
  write_text_file_atomic(dir / "plot.csv", sweep_plot_csv(result));
  if (emit_figure) {
    write_text_file_atomic(dir / "figure.svg", render_sweep_figure(result));
  }
}

}  // namespace semcomm
