// Command line front end for the semantic communication experiments.
//
//   data-fetch   acquire (or synthesize) the image corpus
//   data-verify  re-check every digest in the dataset cache
//   train        train one codec and save a checkpoint
//   eval         score a checkpoint on the test split
//   sweep        run a two-model comparison across a grid
//   plot         render a saved sweep result as an SVG chart
//
// Every run prints exactly one JSON summary line on stdout. Exit codes:
// 0 success, 1 pipeline failure, 2 usage error.
#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "semcomm/config.hpp"
#include "semcomm/dataset.hpp"
#include "semcomm/experiments.hpp"
#include "semcomm/figure.hpp"
#include "semcomm/io.hpp"
#include "semcomm/metrics.hpp"
#include "semcomm/training.hpp"
#include "semcomm/version.hpp"

namespace {

using nlohmann::json;
using namespace semcomm;

void print_summary(const json& j) { std::cout << j.dump() << std::endl; }

// Train-shaped knobs shared by `train` and `sweep`, carrying both the
// values and which ones the user set explicitly on the command line.
struct TrainFlags {
  std::string config_path;
  std::string data_dir;
  std::string out_dir;
  std::string mode = "ssl";
  int epochs = 20;
  int batch_size = 128;
  double lr = 0.001;
  double noise_factor = 0.5;
  int samples = kTrainRecords;
  std::uint64_t seed = 0;
  double lambda = 0.1;
  std::string placement = "input";
};

void add_train_options(CLI::App* cmd, TrainFlags& f, bool with_mode) {
  cmd->add_option("--config", f.config_path, "JSON config file (flags override it)");
  cmd->add_option("--data-dir", f.data_dir, "dataset cache directory");
  cmd->add_option("--out", f.out_dir, "output directory");
  if (with_mode) {
    cmd->add_option("--mode", f.mode, "training regime: ssl or sl")
        ->check(CLI::IsMember({"ssl", "sl"}));
  }
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--batch-size", f.batch_size, "minibatch size");
  cmd->add_option("--lr", f.lr, "Adam learning rate");
  cmd->add_option("--noise-factor", f.noise_factor, "training noise sigma");
  cmd->add_option("--samples", f.samples, "training sample count");
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--lambda", f.lambda, "cross entropy weight (sl mode)");
  cmd->add_option("--placement", f.placement, "noise placement: input or latent")
      ->check(CLI::IsMember({"input", "latent"}));
}

// File value applies only when the flag was not passed explicitly.
void apply_train_config_file(const CLI::App* cmd, TrainFlags& f,
                             const std::vector<std::string>& extra_keys = {}) {
  if (f.config_path.empty()) {
    return;
  }
  std::vector<std::string> allowed = {"mode",  "epochs",  "batch_size",
                                      "lr",    "noise_factor", "samples",
                                      "seed",  "lambda",  "placement",
                                      "data_dir", "out"};
  allowed.insert(allowed.end(), extra_keys.begin(), extra_keys.end());
  const ConfigFile file = load_config_file(f.config_path, allowed);
  auto flag_passed = [&](const std::string& name) {
    return cmd->count(name) > 0;
  };
  if (file.has("mode") && !flag_passed("--mode")) f.mode = file.get_string("mode");
  if (file.has("epochs") && !flag_passed("--epochs")) f.epochs = file.get_int("epochs");
  if (file.has("batch_size") && !flag_passed("--batch-size")) {
    f.batch_size = file.get_int("batch_size");
  }
  if (file.has("lr") && !flag_passed("--lr")) f.lr = file.get_double("lr");
  if (file.has("noise_factor") && !flag_passed("--noise-factor")) {
    f.noise_factor = file.get_double("noise_factor");
  }
  if (file.has("samples") && !flag_passed("--samples")) {
    f.samples = file.get_int("samples");
  }
  if (file.has("seed") && !flag_passed("--seed")) f.seed = file.get_uint64("seed");
  if (file.has("lambda") && !flag_passed("--lambda")) {
    f.lambda = file.get_double("lambda");
  }
  if (file.has("placement") && !flag_passed("--placement")) {
    f.placement = file.get_string("placement");
  }
  if (file.has("data_dir") && !flag_passed("--data-dir")) {
    f.data_dir = file.get_string("data_dir");
  }
  if (file.has("out") && !flag_passed("--out")) f.out_dir = file.get_string("out");
}

TrainConfig to_train_config(const TrainFlags& f) {
  TrainConfig cfg;
  cfg.mode = f.mode;
  cfg.epochs = f.epochs;
  cfg.batch_size = f.batch_size;
  cfg.lr = f.lr;
  cfg.noise_factor = f.noise_factor;
  cfg.sample_count = f.samples;
  cfg.seed = f.seed;
  cfg.lambda_ce = f.lambda;
  cfg.placement =
      f.placement == "latent" ? NoisePlacement::kLatent : NoisePlacement::kInput;
  return cfg;
}

std::filesystem::path resolve_data_dir(const std::string& flag_value) {
  return flag_value.empty() ? default_data_dir()
                            : std::filesystem::path(flag_value);
}

std::filesystem::path resolve_out_dir(const std::string& flag_value,
                                      const std::string& command) {
  const std::filesystem::path dir =
      flag_value.empty() ? default_out_dir(command)
                         : std::filesystem::path(flag_value);
  std::filesystem::create_directories(dir);
  return dir;
}

void cmd_data_fetch(const std::string& data_dir_flag, bool synthetic,
                    std::uint64_t synthetic_seed, const std::string& url,
                    const std::string& md5) {
  const std::filesystem::path dir = resolve_data_dir(data_dir_flag);
  FetchOptions options;
  options.synthetic = synthetic;
  options.synthetic_seed = synthetic_seed;
  if (!url.empty()) options.url = url;
  if (!md5.empty()) options.expected_md5 = md5;
  const DatasetManifest manifest = fetch_dataset(dir, options);
  print_summary(json{{"command", "data-fetch"},
                     {"data_dir", dir.string()},
                     {"source", manifest.source},
                     {"archive_sha256", manifest.archive_sha256},
                     {"train_records", kTrainRecords},
                     {"test_records", kTestRecords}});
}

void cmd_data_verify(const std::string& data_dir_flag) {
  const std::filesystem::path dir = resolve_data_dir(data_dir_flag);
  const DatasetManifest manifest = verify_dataset(dir);
  print_summary(json{{"command", "data-verify"},
                     {"data_dir", dir.string()},
                     {"source", manifest.source},
                     {"archive_sha256", manifest.archive_sha256},
                     {"ok", true}});
}

void cmd_train(const CLI::App* cmd, TrainFlags flags) {
  apply_train_config_file(cmd, flags);
  const std::filesystem::path data_dir = resolve_data_dir(flags.data_dir);
  const std::filesystem::path out = resolve_out_dir(flags.out_dir, "train");
  const Dataset data = load_dataset(data_dir);
  const TrainConfig cfg = to_train_config(flags);

  const TrainResult result = train_model(data.train, cfg);
  const std::filesystem::path ckpt = out / "checkpoint.bin";
  save_checkpoint(ckpt, result);

  RunManifest manifest;
  manifest.command = "train";
  manifest.effective_config_json = cfg.to_json();
  manifest.loss_trace_json = result.trace.to_json();
  manifest.seed = cfg.seed;
  manifest.data_dir = data_dir.string();
  manifest.dataset_source = data.manifest.source;
  manifest.dataset_archive_sha256 = data.manifest.archive_sha256;
  manifest.wall_seconds = result.wall_seconds;
  write_run_manifest(out, manifest, {ckpt});

  const EpochStats& last = result.trace.epochs.back();
  print_summary(json{{"command", "train"},
                     {"mode", cfg.mode},
                     {"out", out.string()},
                     {"checkpoint", ckpt.string()},
                     {"epochs", cfg.epochs},
                     {"final_loss", last.total},
                     {"final_mse", last.mse},
                     {"wall_seconds", result.wall_seconds}});
}

void cmd_eval(const CLI::App* cmd, const std::string& config_path,
              const std::string& checkpoint_path, const std::string& data_dir_flag,
              const std::string& out_flag, double nasar, std::uint64_t seed) {
  std::string ckpt = checkpoint_path;
  std::string data_dir_value = data_dir_flag;
  std::string out_value = out_flag;
  double nasar_value = nasar;
  std::uint64_t seed_value = seed;
  if (!config_path.empty()) {
    const ConfigFile file = load_config_file(
        config_path, {"checkpoint", "data_dir", "out", "nasar", "seed"});
    if (file.has("checkpoint") && cmd->count("--checkpoint") == 0) {
      ckpt = file.get_string("checkpoint");
    }
    if (file.has("data_dir") && cmd->count("--data-dir") == 0) {
      data_dir_value = file.get_string("data_dir");
    }
    if (file.has("out") && cmd->count("--out") == 0) {
      out_value = file.get_string("out");
    }
    if (file.has("nasar") && cmd->count("--nasar") == 0) {
      nasar_value = file.get_double("nasar");
    }
    if (file.has("seed") && cmd->count("--seed") == 0) {
      seed_value = file.get_uint64("seed");
    }
  }
  if (ckpt.empty()) {
    throw std::invalid_argument("eval requires --checkpoint");
  }

  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path data_dir = resolve_data_dir(data_dir_value);
  const std::filesystem::path out = resolve_out_dir(out_value, "eval");
  const Dataset data = load_dataset(data_dir);
  const TrainResult restored = restore_checkpoint(load_checkpoint(ckpt));

  const EvalResult eval = evaluate_model(*restored.model, data.test, nasar_value,
                                         seed_value, restored.config.placement);
  MetricsRecord record;
  record.model_tag = restored.config.mode;
  record.nasar = nasar_value;
  record.sample_count = restored.config.sample_count;
  record.mean_psnr_db = eval.mean_psnr_db;
  record.mean_mse = eval.mean_mse;
  record.n_images = eval.n_images;
  record.seed = seed_value;

  write_text_file_atomic(out / "metrics.json", record.to_json() + "\n");
  write_text_file_atomic(out / "metrics.csv", MetricsRecord::csv_header() + "\n" +
                                                  record.to_csv_row() + "\n");

  RunManifest manifest;
  manifest.command = "eval";
  manifest.effective_config_json =
      json{{"checkpoint", ckpt}, {"nasar", nasar_value}, {"seed", seed_value}}
          .dump();
  manifest.seed = seed_value;
  manifest.data_dir = data_dir.string();
  manifest.dataset_source = data.manifest.source;
  manifest.dataset_archive_sha256 = data.manifest.archive_sha256;
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  write_run_manifest(out, manifest, {out / "metrics.json", out / "metrics.csv"});

  json summary = json::parse(record.to_json());
  summary["command"] = "eval";
  summary["out"] = out.string();
  print_summary(summary);
}

void cmd_sweep(const CLI::App* cmd, TrainFlags flags, std::string kind,
               std::vector<double> grid, bool retrain_per_point,
               double eval_nasar, int jobs) {
  if (!flags.config_path.empty()) {
    const ConfigFile file = load_config_file(
        flags.config_path,
        {"mode", "epochs", "batch_size", "lr", "noise_factor", "samples",
         "seed", "lambda", "placement", "data_dir", "out", "kind", "grid",
         "retrain_per_point", "eval_nasar", "jobs"});
    if (file.has("kind") && cmd->count("--kind") == 0) {
      kind = file.get_string("kind");
    }
    if (file.has("grid") && cmd->count("--grid") == 0) {
      grid = file.get_double_list("grid");
    }
    if (file.has("retrain_per_point") && cmd->count("--retrain-per-point") == 0) {
      retrain_per_point = file.get_bool("retrain_per_point");
    }
    if (file.has("eval_nasar") && cmd->count("--eval-nasar") == 0) {
      eval_nasar = file.get_double("eval_nasar");
    }
    if (file.has("jobs") && cmd->count("--jobs") == 0) {
      jobs = file.get_int("jobs");
    }
  }
  apply_train_config_file(cmd, flags,
                          {"kind", "grid", "retrain_per_point", "eval_nasar",
                           "jobs"});
  if (kind.empty()) {
    throw std::invalid_argument("sweep requires --kind nasar|samples");
  }

  SweepSpec spec;
  spec.kind = kind;
  spec.grid = grid.empty()
                  ? (kind == "nasar" ? kDefaultNasarGrid : kDefaultSampleGrid)
                  : grid;
  spec.base = to_train_config(flags);
  spec.retrain_per_point = retrain_per_point;
  spec.eval_nasar = eval_nasar;
  spec.jobs = jobs;

  const std::filesystem::path data_dir = resolve_data_dir(flags.data_dir);
  const std::filesystem::path out = resolve_out_dir(flags.out_dir, "sweep");
  const Dataset data = load_dataset(data_dir);

  const SweepResult result = run_sweep(data, spec);
  persist_sweep(out, result, true);

  RunManifest manifest;
  manifest.command = "sweep";
  manifest.effective_config_json =
      json{{"kind", spec.kind},
           {"grid", spec.grid},
           {"retrain_per_point", spec.retrain_per_point},
           {"eval_nasar", spec.eval_nasar},
           {"jobs", spec.jobs},
           {"base", json::parse(spec.base.to_json())}}
          .dump();
  manifest.seed = spec.base.seed;
  manifest.data_dir = data_dir.string();
  manifest.dataset_source = data.manifest.source;
  manifest.dataset_archive_sha256 = data.manifest.archive_sha256;
  manifest.wall_seconds = result.wall_seconds;
  write_run_manifest(out, manifest,
                     {out / "results.json", out / "results.csv",
                      out / "plot.csv", out / "figure.svg"});

  json points = json::array();
  for (const auto& p : result.points) {
    points.push_back(json{{"grid_value", p.grid_value},
                          {"ssl_psnr_db", p.ssl.mean_psnr_db},
                          {"sl_psnr_db", p.sl.mean_psnr_db},
                          {"gap_percent", p.gap_percent}});
  }
  print_summary(json{{"command", "sweep"},
                     {"kind", result.kind},
                     {"out", out.string()},
                     {"points", points},
                     {"wall_seconds", result.wall_seconds}});
}

void cmd_plot(const std::string& results_path, const std::string& out_flag) {
  const SweepResult result =
      SweepResult::from_json(read_text_file(results_path));
  std::filesystem::path out_file;
  if (out_flag.empty()) {
    out_file = std::filesystem::path(results_path).parent_path() / "figure.svg";
  } else if (out_flag.size() > 4 &&
             out_flag.substr(out_flag.size() - 4) == ".svg") {
    out_file = out_flag;
    if (out_file.has_parent_path()) {
      std::filesystem::create_directories(out_file.parent_path());
    }
  } else {
    std::filesystem::create_directories(out_flag);
    out_file = std::filesystem::path(out_flag) / "figure.svg";
  }
  write_text_file_atomic(out_file, render_sweep_figure(result));
  print_summary(json{{"command", "plot"},
                     {"results", results_path},
                     {"figure", out_file.string()}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semantic communication codec experiments"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // data-fetch
  auto* fetch = app.add_subcommand("data-fetch", "acquire the image corpus");
  std::string fetch_dir, fetch_url_flag, fetch_md5;
  bool fetch_synthetic = false;
  std::uint64_t fetch_seed = 20240901;
  fetch->add_option("--data-dir", fetch_dir, "dataset cache directory");
  fetch->add_flag("--synthetic", fetch_synthetic,
                  "synthesize a procedural stand-in corpus locally");
  fetch->add_option("--synthetic-seed", fetch_seed, "procedural corpus seed");
  fetch->add_option("--url", fetch_url_flag, "archive url override");
  fetch->add_option("--md5", fetch_md5, "expected archive md5 override");
  fetch->callback([&] {
    cmd_data_fetch(fetch_dir, fetch_synthetic, fetch_seed, fetch_url_flag,
                   fetch_md5);
  });

  // data-verify
  auto* verify = app.add_subcommand("data-verify", "re-check dataset digests");
  std::string verify_dir;
  verify->add_option("--data-dir", verify_dir, "dataset cache directory");
  verify->callback([&] { cmd_data_verify(verify_dir); });

  // train
  auto* train = app.add_subcommand("train", "train one codec");
  TrainFlags train_flags;
  add_train_options(train, train_flags, true);
  train->callback([&] { cmd_train(train, train_flags); });

  // eval
  auto* eval = app.add_subcommand("eval", "score a checkpoint on the test split");
  std::string eval_config, eval_ckpt, eval_dir, eval_out;
  double eval_nasar_flag = 0.5;
  std::uint64_t eval_seed = 0;
  eval->add_option("--config", eval_config, "JSON config file (flags override it)");
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file");
  eval->add_option("--data-dir", eval_dir, "dataset cache directory");
  eval->add_option("--out", eval_out, "output directory");
  eval->add_option("--nasar", eval_nasar_flag, "channel noise ratio");
  eval->add_option("--seed", eval_seed, "evaluation noise seed");
  eval->callback([&] {
    cmd_eval(eval, eval_config, eval_ckpt, eval_dir, eval_out, eval_nasar_flag,
             eval_seed);
  });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "two-model comparison on a grid");
  TrainFlags sweep_flags;
  std::string sweep_kind;
  std::vector<double> sweep_grid;
  bool sweep_retrain = false;
  double sweep_eval_nasar = 0.5;
  int sweep_jobs = 1;
  add_train_options(sweep, sweep_flags, false);
  sweep->add_option("--kind", sweep_kind, "sweep kind: nasar or samples")
      ->check(CLI::IsMember({"nasar", "samples"}));
  sweep->add_option("--grid", sweep_grid, "grid values")->delimiter(',');
  sweep->add_flag("--retrain-per-point", sweep_retrain,
                  "retrain at every grid point (nasar sweep)");
  sweep->add_option("--eval-nasar", sweep_eval_nasar,
                    "evaluation noise ratio (samples sweep)");
  sweep->add_option("--jobs", sweep_jobs, "parallel trained grid points");
  sweep->callback([&] {
    cmd_sweep(sweep, sweep_flags, sweep_kind, sweep_grid, sweep_retrain,
              sweep_eval_nasar, sweep_jobs);
  });

  // plot
  auto* plot = app.add_subcommand("plot", "render a sweep result as SVG");
  std::string plot_results, plot_out;
  plot->add_option("--results", plot_results, "results.json from a sweep")
      ->required();
  plot->add_option("--out", plot_out, "output file or directory");
  plot->callback([&] { cmd_plot(plot_results, plot_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
