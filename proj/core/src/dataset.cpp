#include "semcomm/dataset.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "semcomm/archive.hpp"
#include "semcomm/digest.hpp"
#include "semcomm/io.hpp"
#include "semcomm/procgen.hpp"
#include "semcomm/rng.hpp"

namespace semcomm {
namespace {

using nlohmann::json;

std::string shard_file_name(int shard) {
  return shard < 5 ? "data_batch_" + std::to_string(shard + 1) + ".bin"
                   : std::string("test_batch.bin");
}

std::filesystem::path shard_path(const std::filesystem::path& dir, int shard) {
  return dir / kShardDirName / shard_file_name(shard);
}

json shard_to_json(const ShardInfo& s) {
  return json{{"name", s.name}, {"sha256", s.sha256}, {"records", s.records}};
}

ShardInfo shard_from_json(const json& j) {
  ShardInfo s;
  s.name = j.at("name").get<std::string>();
  s.sha256 = j.at("sha256").get<std::string>();
  s.records = j.at("records").get<int>();
  return s;
}

}  // namespace

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("SEMCOMM_DATA_DIR"); env && *env) {
    return std::filesystem::path(env);
  }
  return std::filesystem::path("data");
}

RawRecord parse_record(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != static_cast<std::size_t>(kRecordBytes)) {
    throw std::invalid_argument("record must be exactly " +
                                std::to_string(kRecordBytes) + " bytes, got " +
                                std::to_string(bytes.size()));
  }
  RawRecord rec;
  rec.label = bytes[0];
  if (rec.label >= kNumClasses) {
    throw std::invalid_argument("record label out of range: " +
                                std::to_string(rec.label));
  }
  std::copy(bytes.begin() + 1, bytes.end(), rec.pixels.begin());
  return rec;
}

Tensor4<float> denormalize(const Tensor4<float>& batch) {
  Tensor4<float> out(batch.n(), batch.c(), batch.h(), batch.w());
  const float* src = batch.data();
  float* dst = out.data();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    dst[i] = denormalize_value(src[i]);
  }
  return out;
}

Split::Split(std::shared_ptr<const std::vector<std::uint8_t>> pixels,
             std::shared_ptr<const std::vector<std::uint8_t>> labels,
             std::vector<int> index)
    : pixels_(std::move(pixels)), labels_(std::move(labels)),
      index_(std::move(index)) {
  for (int src : index_) {
    if (src < 0 || static_cast<std::size_t>(src) >= labels_->size()) {
      throw std::out_of_range("split index out of range");
    }
  }
}

ImageBatch Split::make_batch(std::span<const int> positions,
                             bool with_labels) const {
  ImageBatch batch;
  batch.data = Tensor4<float>(static_cast<int>(positions.size()),
                              kImageChannels, kImageHeight, kImageWidth);
  if (with_labels) {
    batch.labels.resize(positions.size());
  }
  float* dst = batch.data.data();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const int pos = positions[i];
    if (pos < 0 || pos >= size()) {
      throw std::out_of_range("batch position out of range");
    }
    const std::span<const std::uint8_t> px = pixels(pos);
    float* img = dst + i * static_cast<std::size_t>(kImagePixels);
    for (int p = 0; p < kImagePixels; ++p) {
      img[p] = normalize_value(px[p]);
    }
    if (with_labels) {
      batch.labels[i] = label(pos);
    }
  }
  return batch;
}

Split subset_sample(const Split& split, const SubsetSpec& spec) {
  const int n = split.size();
  if (spec.sample_count < 1 || spec.sample_count > n) {
    throw std::invalid_argument("sample_count must be in [1, " +
                                std::to_string(n) + "], got " +
                                std::to_string(spec.sample_count));
  }

  std::vector<int> chosen;  // positions within the input split
  chosen.reserve(static_cast<std::size_t>(spec.sample_count));

  if (spec.sample_count == n) {
    chosen.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) chosen[static_cast<std::size_t>(i)] = i;
  } else if (spec.stratified) {
    std::vector<std::vector<int>> by_class(kNumClasses);
    for (int i = 0; i < n; ++i) {
      by_class[static_cast<std::size_t>(split.label(i))].push_back(i);
    }
    // Per-class counts differ by at most one; the classes receiving the
    // remainder are picked by the seed, not by class id.
    std::vector<int> class_order(kNumClasses);
    for (int c = 0; c < kNumClasses; ++c) class_order[static_cast<std::size_t>(c)] = c;
    rng::Stream order_stream(rng::derive(spec.seed, "subset/classes"));
    rng::shuffle(std::span<int>(class_order), order_stream);
    const int base = spec.sample_count / kNumClasses;
    const int remainder = spec.sample_count % kNumClasses;
    for (int rank = 0; rank < kNumClasses; ++rank) {
      const int c = class_order[static_cast<std::size_t>(rank)];
      const int want = base + (rank < remainder ? 1 : 0);
      auto& pool = by_class[static_cast<std::size_t>(c)];
      if (static_cast<int>(pool.size()) < want) {
        throw std::runtime_error("class " + std::to_string(c) + " has only " +
                                 std::to_string(pool.size()) +
                                 " samples, need " + std::to_string(want));
      }
      rng::Stream class_stream(
          rng::derive(spec.seed, "subset/class", static_cast<std::uint64_t>(c)));
      rng::shuffle(std::span<int>(pool), class_stream);
      chosen.insert(chosen.end(), pool.begin(), pool.begin() + want);
    }
  } else {
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    rng::Stream plain_stream(rng::derive(spec.seed, "subset/plain"));
    rng::shuffle(std::span<int>(all), plain_stream);
    chosen.assign(all.begin(), all.begin() + spec.sample_count);
  }

  // Canonical order: ascending source index.
  std::vector<int> index;
  index.reserve(chosen.size());
  const std::span<const int> src_index = split.index();
  for (int pos : chosen) index.push_back(src_index[static_cast<std::size_t>(pos)]);
  std::sort(index.begin(), index.end());
  return split.reindexed(std::move(index));
}

BatchIterator::BatchIterator(const Split& split, int batch_size,
                             std::uint64_t seed, bool with_labels)
    : split_(&split), batch_size_(batch_size), with_labels_(with_labels) {
  if (batch_size < 1) {
    throw std::invalid_argument("batch_size must be positive");
  }
  order_.resize(static_cast<std::size_t>(split.size()));
  for (int i = 0; i < split.size(); ++i) order_[static_cast<std::size_t>(i)] = i;
  rng::Stream s(seed);
  rng::shuffle(std::span<int>(order_), s);
}

int BatchIterator::batch_count() const {
  return static_cast<int>((order_.size() + static_cast<std::size_t>(batch_size_) - 1) /
                          static_cast<std::size_t>(batch_size_));
}

bool BatchIterator::next(ImageBatch& out) {
  if (cursor_ >= order_.size()) {
    return false;
  }
  const std::size_t take =
      std::min(static_cast<std::size_t>(batch_size_), order_.size() - cursor_);
  out = split_->make_batch(
      std::span<const int>(order_.data() + cursor_, take), with_labels_);
  cursor_ += take;
  return true;
}

std::string DatasetManifest::to_json() const {
  json j;
  j["source"] = source;
  j["archive_file"] = archive_file;
  j["archive_md5"] = archive_md5;
  j["archive_sha256"] = archive_sha256;
  j["train_shards"] = json::array();
  for (const auto& s : train_shards) j["train_shards"].push_back(shard_to_json(s));
  j["test_shard"] = shard_to_json(test_shard);
  j["normalize_mean"] = normalize_mean;
  j["normalize_std"] = normalize_std;
  return j.dump(2) + "\n";
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  const json j = json::parse(text);
  DatasetManifest m;
  m.source = j.at("source").get<std::string>();
  m.archive_file = j.at("archive_file").get<std::string>();
  m.archive_md5 = j.at("archive_md5").get<std::string>();
  m.archive_sha256 = j.at("archive_sha256").get<std::string>();
  for (const auto& s : j.at("train_shards")) {
    m.train_shards.push_back(shard_from_json(s));
  }
  m.test_shard = shard_from_json(j.at("test_shard"));
  m.normalize_mean = j.at("normalize_mean").get<std::array<double, 3>>();
  m.normalize_std = j.at("normalize_std").get<std::array<double, 3>>();
  return m;
}

namespace {

bool shards_present(const std::filesystem::path& dir) {
  for (int shard = 0; shard < procgen::kShardCount; ++shard) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(shard_path(dir, shard), ec);
    if (ec || size != kShardBytes) {
      return false;
    }
  }
  return true;
}

DatasetManifest build_manifest(const std::filesystem::path& dir,
                               const std::string& source,
                               const std::string& archive_md5,
                               const std::string& archive_sha256) {
  DatasetManifest m;
  m.source = source;
  m.archive_file = kArchiveFileName;
  m.archive_md5 = archive_md5;
  m.archive_sha256 = archive_sha256;
  for (int shard = 0; shard < procgen::kShardCount; ++shard) {
    ShardInfo info;
    info.name = std::string(kShardDirName) + "/" + shard_file_name(shard);
    info.sha256 = sha256_hex_file(shard_path(dir, shard));
    info.records = kRecordsPerShard;
    if (shard < 5) {
      m.train_shards.push_back(std::move(info));
    } else {
      m.test_shard = std::move(info);
    }
  }
  return m;
}

}  // namespace

DatasetManifest fetch_dataset(const std::filesystem::path& dir,
                              const FetchOptions& options) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path manifest_path = dir / "manifest.json";
  if (std::filesystem::exists(manifest_path) && shards_present(dir)) {
    return DatasetManifest::from_json(read_text_file(manifest_path));
  }

  const std::filesystem::path archive = dir / kArchiveFileName;
  if (!std::filesystem::exists(archive)) {
    if (options.synthetic) {
      procgen::write_archive(archive, options.synthetic_seed);
    } else {
      fetch_url(options.url, archive);
    }
  }

  const std::string md5 = md5_hex_file(archive);
  if (!options.synthetic && !options.expected_md5.empty() &&
      md5 != options.expected_md5) {
    throw std::runtime_error("archive digest mismatch: expected md5 " +
                             options.expected_md5 + ", got " + md5);
  }
  const std::string sha256 = sha256_hex_file(archive);

  const std::vector<TarEntry> entries = read_tar_gz(archive);
  for (int shard = 0; shard < procgen::kShardCount; ++shard) {
    const std::string want = std::string(kShardDirName) + "/" + shard_file_name(shard);
    const auto it =
        std::find_if(entries.begin(), entries.end(),
                     [&](const TarEntry& e) { return e.name == want; });
    if (it == entries.end()) {
      throw std::runtime_error("archive is missing entry: " + want);
    }
    if (it->bytes.size() != kShardBytes) {
      throw std::runtime_error("entry " + want + " has " +
                               std::to_string(it->bytes.size()) +
                               " bytes, expected " + std::to_string(kShardBytes));
    }
    write_file_atomic(shard_path(dir, shard), it->bytes);
  }

  const std::string source =
      options.synthetic ? "procedural:" + std::to_string(options.synthetic_seed)
                        : options.url;
  const DatasetManifest manifest = build_manifest(dir, source, md5, sha256);
  write_text_file_atomic(manifest_path, manifest.to_json());
  return manifest;
}

DatasetManifest verify_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw std::runtime_error("no manifest at " + manifest_path.string() +
                             "; run a fetch first");
  }
  const DatasetManifest m = DatasetManifest::from_json(read_text_file(manifest_path));

  const std::filesystem::path archive = dir / m.archive_file;
  if (!std::filesystem::exists(archive)) {
    throw std::runtime_error("archive missing: " + archive.string());
  }
  if (const std::string md5 = md5_hex_file(archive); md5 != m.archive_md5) {
    throw std::runtime_error("archive md5 mismatch: manifest " + m.archive_md5 +
                             ", actual " + md5);
  }
  if (const std::string sha = sha256_hex_file(archive); sha != m.archive_sha256) {
    throw std::runtime_error("archive sha256 mismatch: manifest " +
                             m.archive_sha256 + ", actual " + sha);
  }

  auto check_shard = [&](const ShardInfo& info) {
    const std::filesystem::path p = dir / info.name;
    std::error_code ec;
    const auto size = std::filesystem::file_size(p, ec);
    if (ec || size != kShardBytes) {
      throw std::runtime_error("shard missing or wrong size: " + p.string());
    }
    if (const std::string sha = sha256_hex_file(p); sha != info.sha256) {
      throw std::runtime_error("shard sha256 mismatch for " + info.name +
                               ": manifest " + info.sha256 + ", actual " + sha);
    }
  };
  for (const auto& s : m.train_shards) check_shard(s);
  check_shard(m.test_shard);
  return m;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path) || !shards_present(dir)) {
    throw std::runtime_error("dataset not present under " + dir.string() +
                             "; run a fetch first");
  }
  const DatasetManifest manifest =
      DatasetManifest::from_json(read_text_file(manifest_path));

  auto parse_shards = [&](int first, int count) {
    auto pixels = std::make_shared<std::vector<std::uint8_t>>();
    auto labels = std::make_shared<std::vector<std::uint8_t>>();
    pixels->reserve(static_cast<std::size_t>(count) * kRecordsPerShard * kImagePixels);
    labels->reserve(static_cast<std::size_t>(count) * kRecordsPerShard);
    for (int shard = first; shard < first + count; ++shard) {
      const std::vector<std::uint8_t> bytes = read_file_bytes(shard_path(dir, shard));
      if (bytes.size() != kShardBytes) {
        throw std::runtime_error("shard has wrong size: " +
                                 shard_path(dir, shard).string());
      }
      for (int r = 0; r < kRecordsPerShard; ++r) {
        const std::uint8_t* rec =
            bytes.data() + static_cast<std::size_t>(r) * kRecordBytes;
        if (rec[0] >= kNumClasses) {
          throw std::runtime_error("label out of range in " +
                                   shard_path(dir, shard).string());
        }
        labels->push_back(rec[0]);
        pixels->insert(pixels->end(), rec + 1, rec + kRecordBytes);
      }
    }
    std::vector<int> index(labels->size());
    for (std::size_t i = 0; i < index.size(); ++i) index[i] = static_cast<int>(i);
    return Split(std::move(pixels), std::move(labels), std::move(index));
  };

  Dataset ds;
  ds.train = parse_shards(0, 5);
  ds.test = parse_shards(5, 1);
  ds.manifest = manifest;
  return ds;
}

}  // namespace semcomm
