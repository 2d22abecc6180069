#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cbsa/bits.hpp"
#include "cbsa/error.hpp"

namespace cbsa {

/// Matching score in [0, 1]; 1 means identical. Every matcher in the library
/// converts its native distance into this type at its own boundary.
class Similarity {
 public:
  explicit Similarity(double v) : value_(v) {
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorCode::InvalidParams,
            "similarity out of [0,1]: " + std::to_string(v));
  }

  double value() const noexcept { return value_; }
  double distance() const noexcept { return 1.0 - value_; }

  friend auto operator<=>(const Similarity&, const Similarity&) = default;

 private:
  double value_;
};

/// Real-valued biometric feature (e.g. a face embedding).
class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(std::vector<double> values) : values_(std::move(values)) {
    require(!values_.empty(), ErrorCode::InvalidParams, "feature vector must have dim > 0");
    for (double v : values_) require(std::isfinite(v), ErrorCode::InvalidParams, "feature vector has non-finite entry");
  }

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  double norm() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::vector<double> values_;
};

/// W x H binary matrix (IrisCode-style), column-major: (c, r) -> bit c*H + r.
class BitTemplate {
 public:
  BitTemplate() = default;
  BitTemplate(std::size_t width, std::size_t height) : width_(width), height_(height), bits_(width * height) {
    require(width > 0 && height > 0, ErrorCode::ShapeMismatch, "bit template needs W > 0 and H > 0");
  }
  BitTemplate(std::size_t width, std::size_t height, BitVector bits)
      : width_(width), height_(height), bits_(std::move(bits)) {
    require(width > 0 && height > 0, ErrorCode::ShapeMismatch, "bit template needs W > 0 and H > 0");
    require(bits_.size() == width * height, ErrorCode::ShapeMismatch, "bit template payload is not W*H bits");
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  static constexpr std::size_t index(std::size_t col, std::size_t row, std::size_t height) { return col * height + row; }

  bool get(std::size_t col, std::size_t row) const noexcept { return bits_.get(index(col, row, height_)); }
  void set(std::size_t col, std::size_t row, bool v = true) noexcept { bits_.set(index(col, row, height_), v); }

  const BitVector& bits() const noexcept { return bits_; }
  BitVector& bits() noexcept { return bits_; }

  friend bool operator==(const BitTemplate&, const BitTemplate&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  BitVector bits_;
};

enum class Scheme { BioHashing, BloomFilter };

inline std::string to_string(Scheme s) { return s == Scheme::BioHashing ? "biohashing" : "bloomfilter"; }

struct BioHashParams {
  std::size_t input_dim = 0;    // N
  std::size_t code_length = 0;  // l
  double threshold = 0.0;       // tau
  bool orthonormalize = true;
  friend bool operator==(const BioHashParams&, const BioHashParams&) = default;
};

enum class BloomDistance {
  PopcountNormalized,  // |a^b| / (|a|+|b|), averaged over blocks
  Hamming,             // |a^b| / 2^w, averaged over blocks
};

struct BloomParams {
  unsigned word_size = 8;              // w, in [1, 16]
  std::size_t block_count = 8;         // K
  std::size_t columns_per_block = 64;  // l_b
  std::size_t height = 20;             // H of the templates it applies to
  std::size_t row_offset = 0;          // first row of the codeword window
  BloomDistance distance = BloomDistance::PopcountNormalized;

  std::size_t filter_bits() const noexcept { return std::size_t{1} << word_size; }
  std::size_t width() const noexcept { return block_count * columns_per_block; }
  friend bool operator==(const BloomParams&, const BloomParams&) = default;
};

/// Transform parameters of one application (its "token").
struct HelperData {
  Scheme scheme = Scheme::BioHashing;
  std::uint64_t seed = 0;
  BioHashParams biohash{};
  BloomParams bloom{};

  static HelperData biohashing(std::uint64_t seed, std::size_t input_dim, std::size_t code_length,
                               double threshold = 0.0, bool orthonormalize = true) {
    HelperData h;
    h.scheme = Scheme::BioHashing;
    h.seed = seed;
    h.biohash = {input_dim, code_length, threshold, orthonormalize};
    return h;
  }

  static HelperData bloom_filter(unsigned word_size, std::size_t block_count, std::size_t columns_per_block,
                                 std::size_t height, std::uint64_t seed = 0) {
    HelperData h;
    h.scheme = Scheme::BloomFilter;
    h.seed = seed;
    h.bloom.word_size = word_size;
    h.bloom.block_count = block_count;
    h.bloom.columns_per_block = columns_per_block;
    h.bloom.height = height;
    return h;
  }

  friend bool operator==(const HelperData&, const HelperData&) = default;
};

struct BioHashCode {
  BitVector bits;
  friend bool operator==(const BioHashCode&, const BioHashCode&) = default;
};

struct BloomFilterSet {
  std::vector<BitVector> filters;
  BloomParams params;
  friend bool operator==(const BloomFilterSet&, const BloomFilterSet&) = default;
};

enum class TemplateKind { BioHashCode, BloomFilterSet };

/// Output of a cancellable transform.
using ProtectedTemplate = std::variant<BioHashCode, BloomFilterSet>;

inline TemplateKind kind_of(const ProtectedTemplate& t) {
  return std::holds_alternative<BioHashCode>(t) ? TemplateKind::BioHashCode : TemplateKind::BloomFilterSet;
}

inline Similarity normalized_hamming_similarity(const BitVector& a, const BitVector& b) {
  require(a.size() == b.size(), ErrorCode::LengthMismatch, "similarity of bit strings with different lengths");
  require(!a.empty(), ErrorCode::EmptyTemplate, "similarity of empty bit strings");
  return Similarity(1.0 - static_cast<double>(hamming_distance(a, b)) / static_cast<double>(a.size()));
}

/// Circular column shift: result(c, r) = t((c + shift) mod W, r).
inline BitTemplate shift_columns(const BitTemplate& t, long shift) {
  const auto w = static_cast<long>(t.width());
  const std::size_t h = t.height();
  BitTemplate out(t.width(), h);
  for (long c = 0; c < w; ++c) {
    const auto src = static_cast<std::size_t>(((c + shift) % w + w) % w);
    for (std::size_t r = 0; r < h; ++r)
      if (t.get(src, r)) out.set(static_cast<std::size_t>(c), r);
  }
  return out;
}

/// Best normalized Hamming similarity over circular column shifts of b in
/// [-max_shift, +max_shift].
inline Similarity shifted_match(const BitTemplate& a, const BitTemplate& b, std::size_t max_shift) {
  require(a.width() == b.width() && a.height() == b.height(), ErrorCode::ShapeMismatch,
          "shifted_match of templates with different shapes");
  require(max_shift < a.width(), ErrorCode::ShapeMismatch, "max_shift must be below the template width");
  double best = normalized_hamming_similarity(a.bits(), b.bits()).value();
  const auto m = static_cast<long>(max_shift);
  for (long s = -m; s <= m; ++s) {
    if (s == 0) continue;
    best = std::max(best, normalized_hamming_similarity(a.bits(), shift_columns(b, s).bits()).value());
  }
  return Similarity(best);
}

// ---------------------------------------------------------------------------
// CBT1 bit template records.
//
//   offset 0   "CBT1"
//   offset 4   u32 W   (little-endian)
//   offset 8   u32 H
//   offset 12  u32 reserved (0)
//   offset 16  ceil(W*H/8) payload bytes; logical bit i is bit (i % 8) of byte i / 8
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline void write_cbt(std::ostream& os, const BitTemplate& t) {
  require(t.width() <= UINT32_MAX && t.height() <= UINT32_MAX, ErrorCode::ShapeMismatch, "template too large for CBT1");
  os.write("CBT1", 4);
  detail::put_u32(os, static_cast<std::uint32_t>(t.width()));
  detail::put_u32(os, static_cast<std::uint32_t>(t.height()));
  detail::put_u32(os, 0);
  const std::size_t n_bytes = (t.bits().size() + 7) / 8;
  const auto words = t.bits().words();
  for (std::size_t i = 0; i < n_bytes; ++i) {
    const auto byte = static_cast<char>((words[i / 8] >> (8 * (i % 8))) & 0xff);
    os.put(byte);
  }
  require(static_cast<bool>(os), ErrorCode::IoError, "failed writing CBT1 record");
}

inline BitTemplate read_cbt(std::istream& is) {
  std::array<unsigned char, 16> header{};
  is.read(reinterpret_cast<char*>(header.data()), 16);
  require(is.gcount() == 16, ErrorCode::ParseError, "truncated CBT1 header");
  require(std::memcmp(header.data(), "CBT1", 4) == 0, ErrorCode::ParseError, "bad CBT1 magic");
  const std::uint32_t w = detail::get_u32(header.data() + 4);
  const std::uint32_t h = detail::get_u32(header.data() + 8);
  require(w > 0 && h > 0, ErrorCode::ParseError, "CBT1 record with zero dimension");
  const std::size_t n_bits = std::size_t{w} * h;
  const std::size_t n_bytes = (n_bits + 7) / 8;
  std::vector<unsigned char> payload(n_bytes);
  is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(n_bytes));
  require(static_cast<std::size_t>(is.gcount()) == n_bytes, ErrorCode::ParseError, "truncated CBT1 payload");
  BitVector bits(n_bits);
  auto words = bits.words();
  for (std::size_t i = 0; i < n_bytes; ++i) words[i / 8] |= static_cast<std::uint64_t>(payload[i]) << (8 * (i % 8));
  const auto tail = bits;
  bits.trim();
  require(bits == tail, ErrorCode::ParseError, "CBT1 padding bits must be zero");
  return BitTemplate(w, h, std::move(bits));
}

inline void save_cbt(const std::filesystem::path& path, const BitTemplate& t) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  write_cbt(os, t);
}

inline BitTemplate load_cbt(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::IoError, "cannot open " + path.string());
  return read_cbt(is);
}

}  // namespace cbsa
