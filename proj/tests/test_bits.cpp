#include <sstream>

#include <gtest/gtest.h>

#include "cbsa/bits.hpp"
#include "cbsa/rng.hpp"
#include "cbsa/templates.hpp"
#include "oracles.hpp"

using namespace cbsa;

TEST(Hamming, Examples) {
  EXPECT_EQ(hamming_distance(BitVector::from_string("1010"), BitVector::from_string("1010")), 0u);
  EXPECT_EQ(hamming_distance(BitVector::from_string("1111"), BitVector::from_string("0000")), 4u);
  EXPECT_EQ(hamming_distance(BitVector::from_string("1010"), BitVector::from_string("0110")),
            oracle::xor_count("1010", "0110"));
}

TEST(Hamming, LengthMismatch) {
  try {
    hamming_distance(BitVector(3), BitVector(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
}

TEST(Hamming, MatchesStringOracleAcrossWordBoundaries) {
  Rng rng(5);
  for (std::size_t n : {1, 63, 64, 65, 130, 500}) {
    std::string a, b;
    for (std::size_t i = 0; i < n; ++i) {
      a += rng.bernoulli(0.5) ? '1' : '0';
      b += rng.bernoulli(0.5) ? '1' : '0';
    }
    EXPECT_EQ(hamming_distance(BitVector::from_string(a), BitVector::from_string(b)), oracle::xor_count(a, b));
    EXPECT_EQ(BitVector::from_string(a).to_string(), a);
  }
}

TEST(Similarity, Examples) {
  BitVector a(500);
  for (std::size_t i = 0; i < 500; i += 3) a.set(i);
  EXPECT_DOUBLE_EQ(normalized_hamming_similarity(a, a).value(), 1.0);
  BitVector c = a;
  for (std::size_t i = 0; i < 500; ++i) c.flip(i);
  EXPECT_DOUBLE_EQ(normalized_hamming_similarity(a, c).value(), 0.0);
  BitVector d = a;
  for (std::size_t i = 0; i < 125; ++i) d.flip(i * 4);
  EXPECT_DOUBLE_EQ(normalized_hamming_similarity(a, d).value(), 1.0 - 125.0 / 500.0);
}

TEST(Similarity, EmptyAndRange) {
  EXPECT_THROW(normalized_hamming_similarity(BitVector(0), BitVector(0)), Error);
  EXPECT_THROW(Similarity(1.5), Error);
  EXPECT_THROW(Similarity(-0.1), Error);
  EXPECT_DOUBLE_EQ(Similarity(0.3).distance(), 0.7);
}

namespace {
BitTemplate random_template(std::size_t w, std::size_t h, Rng& rng) {
  BitTemplate t(w, h);
  for (std::size_t c = 0; c < w; ++c)
    for (std::size_t r = 0; r < h; ++r)
      if (rng.bernoulli(0.5)) t.set(c, r);
  return t;
}
}  // namespace

TEST(ShiftedMatch, Examples) {
  Rng rng(11);
  const auto a = random_template(32, 4, rng);
  EXPECT_DOUBLE_EQ(shifted_match(a, a, 8).value(), 1.0);
  const auto b = shift_columns(a, 3);
  EXPECT_DOUBLE_EQ(shifted_match(a, b, 8).value(), 1.0);
  const double direct = normalized_hamming_similarity(a.bits(), b.bits()).value();
  EXPECT_DOUBLE_EQ(shifted_match(a, b, 0).value(), direct);
  EXPECT_LT(direct, 1.0);
}

TEST(ShiftedMatch, ShapeMismatch) {
  EXPECT_THROW(shifted_match(BitTemplate(4, 2), BitTemplate(4, 3), 1), Error);
}

TEST(BitTemplate, ColumnMajorAddressing) {
  BitTemplate t(3, 2);
  t.set(1, 1);
  EXPECT_TRUE(t.bits().get(1 * 2 + 1));
  EXPECT_EQ(t.bits().popcount(), 1u);
  EXPECT_THROW(BitTemplate(3, 2, BitVector(5)), Error);
}

TEST(Cbt, RoundTripAndLayout) {
  BitTemplate t(5, 3);
  t.set(0, 0);
  t.set(4, 2);  // bit index 14
  std::stringstream ss;
  write_cbt(ss, t);
  const std::string raw = ss.str();
  ASSERT_EQ(raw.size(), 16u + 2u);
  EXPECT_EQ(raw.substr(0, 4), "CBT1");
  EXPECT_EQ(static_cast<unsigned char>(raw[4]), 5);
  EXPECT_EQ(static_cast<unsigned char>(raw[8]), 3);
  EXPECT_EQ(static_cast<unsigned char>(raw[16]), 0x01);
  EXPECT_EQ(static_cast<unsigned char>(raw[17]), 0x40);
  std::stringstream in(raw);
  EXPECT_EQ(read_cbt(in), t);
}

TEST(Cbt, RejectsBadMagicAndTruncation) {
  std::stringstream bad("XXXX");
  EXPECT_THROW(read_cbt(bad), Error);
  BitTemplate t(16, 2);
  std::stringstream ss;
  write_cbt(ss, t);
  std::stringstream cut(ss.str().substr(0, 18));
  EXPECT_THROW(read_cbt(cut), Error);
}
