// CIFAR-10 ingestion: acquire the archive, verify digests, parse the
// binary shards, normalize to [-1, 1], subsample and iterate batches.
// Every step is deterministic given its seed.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semcomm/tensor.hpp"

namespace semcomm {

inline constexpr int kImageChannels = 3;
inline constexpr int kImageHeight = 32;
inline constexpr int kImageWidth = 32;
inline constexpr int kImagePixels = kImageChannels * kImageHeight * kImageWidth;
inline constexpr int kRecordBytes = kImagePixels + 1;
inline constexpr int kNumClasses = 10;
inline constexpr int kRecordsPerShard = 10000;
inline constexpr int kTrainRecords = 50000;
inline constexpr int kTestRecords = 10000;
inline constexpr std::size_t kShardBytes =
    static_cast<std::size_t>(kRecordsPerShard) * kRecordBytes;

// Published binary distribution of the corpus.
inline constexpr const char* kArchiveUrl =
    "https://www.cs.toronto.edu/~kriz/cifar-10-binary.tar.gz";
inline constexpr const char* kArchiveMd5 = "c32a1d4ab5d03f1284b67883e8d87530";
inline constexpr const char* kArchiveFileName = "cifar-10-binary.tar.gz";
inline constexpr const char* kShardDirName = "cifar-10-batches-bin";

std::filesystem::path default_data_dir();  // $SEMCOMM_DATA_DIR or ./data

// One record of the binary wire format: a label byte followed by 3072
// pixel bytes in planar R,G,B order, each plane 32x32 row major.
struct RawRecord {
  std::uint8_t label = 0;
  std::array<std::uint8_t, kImagePixels> pixels{};
};

// Throws if the input is not exactly one record long.
RawRecord parse_record(std::span<const std::uint8_t> bytes);

// Pixel byte -> normalized value in [-1, 1]: (v/255 - 0.5) / 0.5.
inline float normalize_value(std::uint8_t v) {
  return (static_cast<float>(v) / 255.0f - 0.5f) / 0.5f;
}

// Normalized value -> [0, 1]: v * 0.5 + 0.5, clamped.
inline float denormalize_value(float v) {
  const float d = v * 0.5f + 0.5f;
  return d < 0.0f ? 0.0f : (d > 1.0f ? 1.0f : d);
}

Tensor4<float> denormalize(const Tensor4<float>& batch);

struct SubsetSpec {
  int sample_count = kTrainRecords;
  std::uint64_t seed = 0;
  bool stratified = true;
};

// An immutable parsed split. Subsets share the backing pixel store, so
// they are cheap and safe to read concurrently.
class Split {
 public:
  Split() = default;
  Split(std::shared_ptr<const std::vector<std::uint8_t>> pixels,
        std::shared_ptr<const std::vector<std::uint8_t>> labels,
        std::vector<int> index);

  int size() const { return static_cast<int>(index_.size()); }
  int label(int i) const { return (*labels_)[static_cast<std::size_t>(index_[i])]; }
  std::span<const std::uint8_t> pixels(int i) const {
    return {pixels_->data() + static_cast<std::size_t>(index_[i]) * kImagePixels,
            kImagePixels};
  }

  // Materializes normalized images for the given positions within this split.
  ImageBatch make_batch(std::span<const int> positions, bool with_labels) const;

  std::span<const int> index() const { return index_; }

  // A view over the same backing store with a new source index list.
  Split reindexed(std::vector<int> source_index) const {
    return Split(pixels_, labels_, std::move(source_index));
  }

 private:
  std::shared_ptr<const std::vector<std::uint8_t>> pixels_;
  std::shared_ptr<const std::vector<std::uint8_t>> labels_;
  std::vector<int> index_;
};

// Seed-deterministic subset in canonical (ascending source index) order.
// Stratified mode draws per-class counts that differ by at most one.
Split subset_sample(const Split& split, const SubsetSpec& spec);

// One epoch of seed-shuffled batches; the final partial batch is yielded.
class BatchIterator {
 public:
  BatchIterator(const Split& split, int batch_size, std::uint64_t seed,
                bool with_labels = false);

  bool next(ImageBatch& out);
  int batch_count() const;

 private:
  const Split* split_;
  int batch_size_;
  bool with_labels_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
};

struct ShardInfo {
  std::string name;
  std::string sha256;
  int records = 0;
};

struct DatasetManifest {
  std::string source;                   // url, or "procedural:<seed>"
  std::string archive_file;
  std::string archive_md5;
  std::string archive_sha256;
  std::vector<ShardInfo> train_shards;
  ShardInfo test_shard;
  std::array<double, 3> normalize_mean{0.5, 0.5, 0.5};
  std::array<double, 3> normalize_std{0.5, 0.5, 0.5};

  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
};

struct FetchOptions {
  std::string url = kArchiveUrl;
  std::string expected_md5 = kArchiveMd5;  // empty disables the check
  // When set, a procedural stand-in corpus with the same wire format is
  // synthesized locally instead of downloading.
  bool synthetic = false;
  std::uint64_t synthetic_seed = 20240901;
};

// Ensures archive + extracted shards + manifest exist under dir and that
// the archive digest matches. Idempotent: a valid populated cache does no
// network work. Returns the manifest.
DatasetManifest fetch_dataset(const std::filesystem::path& dir,
                              const FetchOptions& options = {});

// Re-checks every digest recorded in the manifest. Throws on mismatch.
DatasetManifest verify_dataset(const std::filesystem::path& dir);

struct Dataset {
  Split train;
  Split test;
  DatasetManifest manifest;
};

// Parses the extracted shards; requires a prior fetch_dataset.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace semcomm
