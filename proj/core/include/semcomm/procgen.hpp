// Procedural stand-in corpus in the exact wire format of the published
// binary distribution: six shards of 10000 records, each record a label
// byte plus 3072 planar RGB bytes. Generation is pure in (seed, shard),
// so the corpus is reproducible byte for byte anywhere.
//
// Appearance is coupled to the label. Classes form five confusable
// pairs: both members of a pair share the background gradient, the
// foreground shape family, and the palette, and differ only in a
// class-keyed full-field texture whose orientation, frequency, and
// phase are fixed per class. The texture is high frequency and faint,
// and every record also carries fresh mid-frequency clutter that a
// reconstruction loss must keep spending capacity on, so a pixel loss
// alone starves the class texture. The label hands a codec exactly
// that bit, which is what lets a label-supervised codec outperform a
// purely self-supervised one.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace semcomm::procgen {

inline constexpr int kShardCount = 6;  // shards 0..4 train, shard 5 test

// Renders one 32x32 RGB image into 3072 planar bytes and returns its
// label. `out` must point at 3072 writable bytes.
int render_record(std::uint64_t seed, int shard, int record, std::uint8_t* out);

// Full shard: 10000 records, labels balanced (1000 per class) and
// shuffled deterministically per shard.
std::vector<std::uint8_t> make_shard(std::uint64_t seed, int shard);

// Writes the six shards as a gzipped tar mirroring the published
// archive layout and returns the archive path.
std::filesystem::path write_archive(const std::filesystem::path& dest,
                                    std::uint64_t seed);

}  // namespace semcomm::procgen
