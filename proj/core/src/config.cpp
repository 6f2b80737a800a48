#include "semcomm/config.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <stdexcept>

#include <Eigen/Core>
#include <json.hpp>

#include "semcomm/digest.hpp"
#include "semcomm/io.hpp"
#include "semcomm/version.hpp"

namespace semcomm {
namespace {

using nlohmann::json;

json parse_entry(const ConfigFile& f, const std::string& key) {
  const auto it = f.entries.find(key);
  if (it == f.entries.end()) {
    throw std::invalid_argument("config key missing: " + key);
  }
  return json::parse(it->second);
}

}  // namespace

std::string ConfigFile::get_string(const std::string& key) const {
  const json v = parse_entry(*this, key);
  if (!v.is_string()) {
    throw std::invalid_argument("config key \"" + key + "\" must be a string");
  }
  return v.get<std::string>();
}

double ConfigFile::get_double(const std::string& key) const {
  const json v = parse_entry(*this, key);
  if (!v.is_number()) {
    throw std::invalid_argument("config key \"" + key + "\" must be a number");
  }
  return v.get<double>();
}

int ConfigFile::get_int(const std::string& key) const {
  const json v = parse_entry(*this, key);
  if (!v.is_number_integer()) {
    throw std::invalid_argument("config key \"" + key + "\" must be an integer");
  }
  return v.get<int>();
}

std::uint64_t ConfigFile::get_uint64(const std::string& key) const {
  const json v = parse_entry(*this, key);
  if (!v.is_number_unsigned() && !v.is_number_integer()) {
    throw std::invalid_argument("config key \"" + key + "\" must be an integer");
  }
  return v.get<std::uint64_t>();
}

bool ConfigFile::get_bool(const std::string& key) const {
  const json v = parse_entry(*this, key);
  if (!v.is_boolean()) {
    throw std::invalid_argument("config key \"" + key + "\" must be a boolean");
  }
  return v.get<bool>();
}

std::vector<double> ConfigFile::get_double_list(const std::string& key) const {
  const json v = parse_entry(*this, key);
  if (!v.is_array()) {
    throw std::invalid_argument("config key \"" + key +
                                "\" must be an array of numbers");
  }
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) {
      throw std::invalid_argument("config key \"" + key +
                                  "\" must be an array of numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

ConfigFile load_config_file(const std::filesystem::path& path,
                            const std::vector<std::string>& allowed_keys) {
  const json j = json::parse(read_text_file(path));
  if (!j.is_object()) {
    throw std::invalid_argument("config file must hold a JSON object: " +
                                path.string());
  }
  ConfigFile f;
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed_keys.begin(), allowed_keys.end(), key) ==
        allowed_keys.end()) {
      throw std::invalid_argument("unknown config key: " + key);
    }
    f.entries[key] = value.dump();
  }
  return f;
}

std::string utc_timestamp_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string compiler_description() {
#if defined(__VERSION__)
  return std::string("gcc-compatible ") + __VERSION__;
#else
  return "unknown";
#endif
}

std::string eigen_version_string() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." +
         std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

std::string RunManifest::to_json() const {
  json j;
  j["command"] = command;
  j["effective_config"] = json::parse(effective_config_json);
  if (!loss_trace_json.empty()) {
    j["loss_trace"] = json::parse(loss_trace_json);
  }
  j["seed"] = seed;
  j["data_dir"] = data_dir;
  j["dataset_source"] = dataset_source;
  j["dataset_archive_sha256"] = dataset_archive_sha256;
  json outs = json::array();
  for (const auto& [path, sha] : outputs) {
    outs.push_back(json{{"path", path}, {"sha256", sha}});
  }
  j["outputs"] = outs;
  j["wall_seconds"] = wall_seconds;
  j["timestamp_utc"] = timestamp_utc;
  j["tool_version"] = tool_version;
  j["compiler"] = compiler;
  j["eigen_version"] = eigen_version;
  return j.dump(2) + "\n";
}

void write_run_manifest(const std::filesystem::path& dir, RunManifest manifest,
                        const std::vector<std::filesystem::path>& output_files) {
  manifest.timestamp_utc = utc_timestamp_now();
  manifest.tool_version = kVersion;
  manifest.compiler = compiler_description();
  manifest.eigen_version = eigen_version_string();
  for (const auto& path : output_files) {
    manifest.outputs.emplace_back(path.filename().string(), sha256_hex_file(path));
  }
  write_text_file_atomic(dir / "manifest.json", manifest.to_json());
}

std::filesystem::path default_out_dir(const std::string& command) {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return std::filesystem::path("runs") / (std::string(buf) + "-" + command);
}

}  // namespace semcomm
