#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbsa/error.hpp"

namespace cbsa {

/// Packed bit string. Logical bit i lives in word i/64 at position i%64
/// (little-endian within the word). Bits past size() are always zero.
class BitVector {
 public:
  using word_type = std::uint64_t;
  static constexpr std::size_t word_bits = 64;

  BitVector() = default;
  explicit BitVector(std::size_t n_bits) : size_(n_bits), words_(word_count(n_bits), 0) {}

  /// Parses a string of '0'/'1' characters, leftmost character = bit 0.
  static BitVector from_string(std::string_view s) {
    BitVector v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      require(s[i] == '0' || s[i] == '1', ErrorCode::ParseError, "bit string may only contain 0/1");
      v.set(i, s[i] == '1');
    }
    return v;
  }

  std::string to_string() const {
    std::string s(size_, '0');
    for (std::size_t i = 0; i < size_; ++i)
      if (get(i)) s[i] = '1';
    return s;
  }

  static constexpr std::size_t word_count(std::size_t n_bits) { return (n_bits + word_bits - 1) / word_bits; }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  bool get(std::size_t i) const noexcept { return (words_[i / word_bits] >> (i % word_bits)) & 1U; }

  void set(std::size_t i, bool v = true) noexcept {
    const word_type mask = word_type{1} << (i % word_bits);
    if (v)
      words_[i / word_bits] |= mask;
    else
      words_[i / word_bits] &= ~mask;
  }

  void flip(std::size_t i) noexcept { words_[i / word_bits] ^= word_type{1} << (i % word_bits); }

  void reset() noexcept { std::fill(words_.begin(), words_.end(), word_type{0}); }

  std::size_t popcount() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  std::span<const word_type> words() const noexcept { return words_; }
  std::span<word_type> words() noexcept { return words_; }

  /// Clears any bits beyond size() in the last word; call after raw word writes.
  void trim() noexcept {
    if (const auto rem = size_ % word_bits; rem != 0 && !words_.empty())
      words_.back() &= (word_type{1} << rem) - 1;
  }

  BitVector& operator^=(const BitVector& o) {
    require(o.size_ == size_, ErrorCode::LengthMismatch, "xor of bit strings with different lengths");
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= o.words_[w];
    return *this;
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<word_type> words_;
};

/// popcount(a XOR b).
inline std::size_t hamming_distance(const BitVector& a, const BitVector& b) {
  require(a.size() == b.size(), ErrorCode::LengthMismatch,
          "hamming_distance: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " bits");
  std::size_t d = 0;
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t w = 0; w < wa.size(); ++w) d += static_cast<std::size_t>(std::popcount(wa[w] ^ wb[w]));
  return d;
}

}  // namespace cbsa
