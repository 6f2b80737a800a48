// Run configuration files and run manifests.
//
// A config file is a flat JSON object whose keys mirror the long CLI
// flags. Unknown keys are rejected by name so typos fail loudly
// instead of silently keeping a default. Explicit CLI flags override
// file values; the tool applies the file first, then its flags.
//
// Every artifact-producing run writes a manifest capturing the
// effective configuration, seeds, input digests, output digests, and
// environment, which is enough to reproduce the run exactly.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace semcomm {

// Flat key -> JSON-value-as-text view of a config file. Values keep
// their JSON spelling ("0.5", "\"ssl\"", "[1,2]") for typed parsing.
struct ConfigFile {
  std::map<std::string, std::string> entries;

  bool has(const std::string& key) const { return entries.count(key) != 0; }
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_uint64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
};

// Parses the file and rejects any key not in allowed_keys, naming the
// offending key in the exception.
ConfigFile load_config_file(const std::filesystem::path& path,
                            const std::vector<std::string>& allowed_keys);

struct RunManifest {
  std::string command;
  std::string effective_config_json;  // the configuration actually used
  std::string loss_trace_json;        // training runs only; empty otherwise
  std::uint64_t seed = 0;
  std::string data_dir;
  std::string dataset_source;
  std::string dataset_archive_sha256;
  std::vector<std::pair<std::string, std::string>> outputs;  // path, sha256
  double wall_seconds = 0.0;
  std::string timestamp_utc;
  std::string tool_version;
  std::string compiler;
  std::string eigen_version;

  std::string to_json() const;
};

std::string utc_timestamp_now();
std::string compiler_description();
std::string eigen_version_string();

// Hashes the listed output files and writes manifest.json under dir.
void write_run_manifest(const std::filesystem::path& dir, RunManifest manifest,
                        const std::vector<std::filesystem::path>& output_files);

// runs/<UTC timestamp>-<command> under the current directory.
std::filesystem::path default_out_dir(const std::string& command);

}  // namespace semcomm
