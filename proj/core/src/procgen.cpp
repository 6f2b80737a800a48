#include "semcomm/procgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "semcomm/archive.hpp"
#include "semcomm/dataset.hpp"
#include "semcomm/rng.hpp"

namespace semcomm::procgen {
namespace {

struct Rgb {
  float r, g, b;
};

// Classes 2p and 2p+1 form a pair sharing one palette: the same
// background gradient and foreground tone. Everything that separates
// the two members of a pair lives in the class texture below.
struct Palette {
  Rgb bg0, bg1, fg;
};

constexpr Palette kPairPalettes[5] = {
    {{0.10f, 0.22f, 0.45f}, {0.55f, 0.70f, 0.95f}, {0.90f, 0.70f, 0.25f}},
    {{0.40f, 0.15f, 0.10f}, {0.90f, 0.58f, 0.42f}, {0.25f, 0.62f, 0.88f}},
    {{0.10f, 0.35f, 0.14f}, {0.55f, 0.85f, 0.52f}, {0.88f, 0.38f, 0.62f}},
    {{0.30f, 0.26f, 0.40f}, {0.80f, 0.74f, 0.90f}, {0.30f, 0.80f, 0.78f}},
    {{0.45f, 0.36f, 0.12f}, {0.95f, 0.88f, 0.55f}, {0.50f, 0.28f, 0.72f}},
};

// Full-field texture signature, keyed to the class: a fixed sum of
// several near-Nyquist sinusoids whose orientations, frequencies, and
// phases are drawn once per class from a constant seed, so the label
// alone pins these pixels. The amplitude sits well below the
// per-record clutter, so a pixel loss gets almost no gradient from any
// single component, while a label loss rewards identifying the class
// and so builds the matched filters for all components at once.
constexpr int kSignatureComponents = 10;
constexpr float kSignatureAmplitude = 0.05f;

// Record-specific clutter: mid-frequency waves drawn fresh for every
// record. They cannot be memorized, so reconstructing them keeps
// claiming model capacity no matter how long training runs.
constexpr int kClutterComponents = 5;
constexpr float kClutterAmplitude = 0.16f;

const std::array<std::array<float, kImagePixels / 3>, kNumClasses>&
class_signature_fields() {
  static const auto fields = [] {
    std::array<std::array<float, kImagePixels / 3>, kNumClasses> f{};
    rng::Stream s(rng::derive(0x53454d434f4d4d31ULL, "procgen/signature"));
    const float a =
        kSignatureAmplitude / std::sqrt(static_cast<float>(kSignatureComponents));
    for (auto& field : f) {
      for (int k = 0; k < kSignatureComponents; ++k) {
        const float angle = static_cast<float>(s.uniform(0.0, 3.14159265));
        const float freq = static_cast<float>(s.uniform(2.0, 3.1));
        const float phase = static_cast<float>(s.uniform(0.0, 6.2831853));
        const float u = std::cos(angle) * freq;
        const float v = std::sin(angle) * freq;
        for (int y = 0; y < kImageHeight; ++y) {
          for (int x = 0; x < kImageWidth; ++x) {
            field[static_cast<std::size_t>(y) * kImageWidth + x] +=
                a * std::sin(u * static_cast<float>(x) +
                             v * static_cast<float>(y) + phase);
          }
        }
      }
    }
    return f;
  }();
  return fields;
}

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

inline Rgb jitter(const Rgb& c, rng::Stream& s, float amp) {
  return {clamp01(c.r + static_cast<float>(s.uniform(-amp, amp))),
          clamp01(c.g + static_cast<float>(s.uniform(-amp, amp))),
          clamp01(c.b + static_cast<float>(s.uniform(-amp, amp)))};
}

inline Rgb lerp(const Rgb& a, const Rgb& b, float t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

struct Shape {
  int family;  // 0 ellipse, 1 rounded box, 2 bars
  float cx, cy, rx, ry, cosr, sinr, bar_freq, opacity;
  Rgb color;
};

// Coverage in [0, 1] with a roughly one-pixel soft edge.
float coverage(const Shape& sh, float x, float y) {
  const float dx = x - sh.cx;
  const float dy = y - sh.cy;
  const float xr = dx * sh.cosr + dy * sh.sinr;
  const float yr = -dx * sh.sinr + dy * sh.cosr;
  switch (sh.family) {
    case 0: {
      const float q = std::sqrt((xr / sh.rx) * (xr / sh.rx) +
                                (yr / sh.ry) * (yr / sh.ry));
      return clamp01((1.0f - q) * std::min(sh.rx, sh.ry));
    }
    case 1: {
      const float mx = sh.rx - std::fabs(xr);
      const float my = sh.ry - std::fabs(yr);
      return clamp01(std::min(mx, my) + 0.5f);
    }
    default: {
      const float q = std::sqrt((xr / sh.rx) * (xr / sh.rx) +
                                (yr / sh.ry) * (yr / sh.ry));
      const float disc = clamp01((1.0f - q) * std::min(sh.rx, sh.ry));
      const float wave = std::sin(xr * sh.bar_freq);
      return disc * clamp01(wave * 3.0f);
    }
  }
}

void render_image(int label, rng::Stream& s, std::uint8_t* out) {
  const int pair = label / 2;
  const Palette& pal = kPairPalettes[pair];
  const Rgb bg0 = jitter(pal.bg0, s, 0.03f);
  const Rgb bg1 = jitter(pal.bg1, s, 0.03f);

  // Gradient direction is pair-keyed with a small wobble, a robust
  // low-frequency cue that identifies the pair but not the member.
  const float theta = 0.6f * static_cast<float>(pair) +
                      static_cast<float>(s.uniform(-0.2, 0.2));
  const float gx = std::cos(theta);
  const float gy = std::sin(theta);

  const float* signature = class_signature_fields()[label].data();
  const float tex_scale = static_cast<float>(s.uniform(0.9, 1.1));

  float cu[kClutterComponents], cv[kClutterComponents];
  float cphase[kClutterComponents], camp[kClutterComponents];
  const float clutter_base =
      kClutterAmplitude / std::sqrt(static_cast<float>(kClutterComponents));
  for (int k = 0; k < kClutterComponents; ++k) {
    const float angle = static_cast<float>(s.uniform(0.0, 3.14159265));
    const float freq = static_cast<float>(s.uniform(0.45, 1.4));
    cu[k] = std::cos(angle) * freq;
    cv[k] = std::sin(angle) * freq;
    cphase[k] = static_cast<float>(s.uniform(0.0, 6.2831853));
    camp[k] = clutter_base * static_cast<float>(s.uniform(0.6, 1.4));
  }

  Shape shapes[2];
  for (int i = 0; i < 2; ++i) {
    Shape& sh = shapes[i];
    sh.family = pair % 3;
    if (i == 0) {
      sh.cx = static_cast<float>(s.uniform(12.0, 20.0));
      sh.cy = static_cast<float>(s.uniform(12.0, 20.0));
      sh.rx = static_cast<float>(s.uniform(5.0, 8.0));
      sh.ry = static_cast<float>(s.uniform(5.0, 8.0));
      // The first shape keeps a pair-keyed rotation, a robust cue for
      // the pair but not the member.
      const float rot = 0.35f * static_cast<float>(pair) +
                        static_cast<float>(s.uniform(-0.15, 0.15));
      sh.cosr = std::cos(rot);
      sh.sinr = std::sin(rot);
      sh.opacity = static_cast<float>(s.uniform(0.85, 1.0));
    } else {
      sh.cx = static_cast<float>(s.uniform(6.0, 26.0));
      sh.cy = static_cast<float>(s.uniform(6.0, 26.0));
      sh.rx = static_cast<float>(s.uniform(3.0, 5.5));
      sh.ry = static_cast<float>(s.uniform(3.0, 5.5));
      const float rot = static_cast<float>(s.uniform(0.0, 3.14159265));
      sh.cosr = std::cos(rot);
      sh.sinr = std::sin(rot);
      sh.opacity = static_cast<float>(s.uniform(0.7, 0.95));
    }
    sh.bar_freq = static_cast<float>(s.uniform(1.0, 1.4));
    sh.color = jitter(pal.fg, s, 0.04f);
  }

  for (int y = 0; y < kImageHeight; ++y) {
    for (int x = 0; x < kImageWidth; ++x) {
      const float t =
          clamp01(((x - 16.0f) * gx + (y - 16.0f) * gy) / 32.0f + 0.5f);
      Rgb c = lerp(bg0, bg1, t);
      float wave =
          tex_scale * signature[static_cast<std::size_t>(y) * kImageWidth + x];
      for (int k = 0; k < kClutterComponents; ++k) {
        wave += camp[k] * std::sin(cu[k] * static_cast<float>(x) +
                                   cv[k] * static_cast<float>(y) + cphase[k]);
      }
      c.r += wave;
      c.g += wave;
      c.b += wave;
      for (const Shape& sh : shapes) {
        const float a =
            coverage(sh, static_cast<float>(x), static_cast<float>(y)) *
            sh.opacity;
        c = lerp(c, sh.color, a);
      }
      const int idx = y * kImageWidth + x;
      out[idx] = static_cast<std::uint8_t>(std::lround(clamp01(c.r) * 255.0f));
      out[kImageHeight * kImageWidth + idx] =
          static_cast<std::uint8_t>(std::lround(clamp01(c.g) * 255.0f));
      out[2 * kImageHeight * kImageWidth + idx] =
          static_cast<std::uint8_t>(std::lround(clamp01(c.b) * 255.0f));
    }
  }
}

// Balanced labels (1000 per class) in a per-shard deterministic shuffle.
std::vector<int> shard_labels(std::uint64_t seed, int shard) {
  std::vector<int> labels(kRecordsPerShard);
  for (int i = 0; i < kRecordsPerShard; ++i) {
    labels[i] = i % kNumClasses;
  }
  rng::Stream s(rng::derive(seed, "procgen/labels", static_cast<std::uint64_t>(shard)));
  rng::shuffle(std::span<int>(labels), s);
  return labels;
}

}  // namespace

int render_record(std::uint64_t seed, int shard, int record, std::uint8_t* out) {
  if (shard < 0 || shard >= kShardCount || record < 0 ||
      record >= kRecordsPerShard) {
    throw std::out_of_range("render_record: shard or record out of range");
  }
  const int label = shard_labels(seed, shard)[record];
  rng::Stream s(rng::derive(seed, "procgen/image",
                            static_cast<std::uint64_t>(shard),
                            static_cast<std::uint64_t>(record)));
  render_image(label, s, out);
  return label;
}

std::vector<std::uint8_t> make_shard(std::uint64_t seed, int shard) {
  if (shard < 0 || shard >= kShardCount) {
    throw std::out_of_range("make_shard: shard out of range");
  }
  const std::vector<int> labels = shard_labels(seed, shard);
  std::vector<std::uint8_t> bytes(kShardBytes);
  for (int r = 0; r < kRecordsPerShard; ++r) {
    std::uint8_t* rec = bytes.data() + static_cast<std::size_t>(r) * kRecordBytes;
    rec[0] = static_cast<std::uint8_t>(labels[r]);
    rng::Stream s(rng::derive(seed, "procgen/image",
                              static_cast<std::uint64_t>(shard),
                              static_cast<std::uint64_t>(r)));
    render_image(labels[r], s, rec + 1);
  }
  return bytes;
}

std::filesystem::path write_archive(const std::filesystem::path& dest,
                                    std::uint64_t seed) {
  std::vector<TarEntry> entries;
  entries.reserve(kShardCount);
  for (int shard = 0; shard < kShardCount; ++shard) {
    TarEntry e;
    e.name = std::string(kShardDirName) + "/" +
             (shard < 5 ? "data_batch_" + std::to_string(shard + 1) + ".bin"
                        : std::string("test_batch.bin"));
    e.bytes = make_shard(seed, shard);
    entries.push_back(std::move(e));
  }
  write_tar_gz(dest, entries);
  return dest;
}

}  // namespace semcomm::procgen
