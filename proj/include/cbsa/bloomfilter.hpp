#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbsa/error.hpp"
#include "cbsa/templates.hpp"

namespace cbsa {

inline void validate_bloom_params(const BloomParams& p) {
  require(p.word_size >= 1 && p.word_size <= 16, ErrorCode::InvalidParams, "word size must be in [1, 16]");
  require(p.block_count > 0 && p.columns_per_block > 0, ErrorCode::InvalidParams, "K and l_b must be positive");
  require(p.row_offset + p.word_size <= p.height, ErrorCode::ShapeMismatch,
          "codeword window exceeds template height");
}

inline void check_bloom_shape(const BitTemplate& t, const BloomParams& p) {
  validate_bloom_params(p);
  require(t.width() == p.width(), ErrorCode::ShapeMismatch,
          "template width " + std::to_string(t.width()) + " != K*l_b " + std::to_string(p.width()));
  require(t.height() == p.height, ErrorCode::ShapeMismatch, "template height does not match helper data");
}

/// Codeword of every column, block-major (index k*l_b + j is column j of
/// block k). Rows row_offset .. row_offset+w-1 form the word, first row = MSB.
inline std::vector<std::uint32_t> extract_codewords(const BitTemplate& t, const HelperData& helper) {
  require(helper.scheme == Scheme::BloomFilter, ErrorCode::InvalidParams, "helper data is not Bloom-filter");
  const auto& p = helper.bloom;
  check_bloom_shape(t, p);
  std::vector<std::uint32_t> words(t.width());
  for (std::size_t c = 0; c < t.width(); ++c) {
    std::uint32_t v = 0;
    for (unsigned r = 0; r < p.word_size; ++r) v = (v << 1) | static_cast<std::uint32_t>(t.get(c, p.row_offset + r));
    words[c] = v;
  }
  return words;
}

/// Builds the K filters from block-major codewords.
inline BloomFilterSet filters_from_codewords(std::span<const std::uint32_t> codewords, const BloomParams& p) {
  require(codewords.size() == p.width(), ErrorCode::ShapeMismatch, "codeword count != K*l_b");
  BloomFilterSet set{std::vector<BitVector>(p.block_count, BitVector(p.filter_bits())), p};
  for (std::size_t k = 0; k < p.block_count; ++k)
    for (std::size_t j = 0; j < p.columns_per_block; ++j) set.filters[k].set(codewords[k * p.columns_per_block + j]);
  return set;
}

inline ProtectedTemplate bloom_transform(const BitTemplate& t, const HelperData& helper) {
  return filters_from_codewords(extract_codewords(t, helper), helper.bloom);
}

namespace detail {

inline double bloom_block_distance(const BitVector& a, const BitVector& b, BloomDistance measure) {
  const auto diff = static_cast<double>(hamming_distance(a, b));
  if (measure == BloomDistance::Hamming) return diff / static_cast<double>(a.size());
  const auto total = static_cast<double>(a.popcount() + b.popcount());
  return total == 0.0 ? 0.0 : diff / total;
}

}  // namespace detail

/// Mean per-block distance, as a similarity.
inline Similarity match_bloom(const BloomFilterSet& a, const BloomFilterSet& b) {
  require(a.params == b.params, ErrorCode::ParamMismatch, "Bloom-filter sets built with different parameters");
  require(a.filters.size() == a.params.block_count && b.filters.size() == b.params.block_count,
          ErrorCode::ParamMismatch, "Bloom-filter set does not hold K filters");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.filters.size(); ++k)
    sum += detail::bloom_block_distance(a.filters[k], b.filters[k], a.params.distance);
  const double d = sum / static_cast<double>(a.filters.size());
  return Similarity(std::clamp(1.0 - d, 0.0, 1.0));
}

inline Similarity match_bloom(const ProtectedTemplate& t1, const ProtectedTemplate& t2) {
  const auto* a = std::get_if<BloomFilterSet>(&t1);
  const auto* b = std::get_if<BloomFilterSet>(&t2);
  require(a != nullptr && b != nullptr, ErrorCode::KindMismatch, "match_bloom needs two Bloom-filter sets");
  return match_bloom(*a, *b);
}

// Serialization: `path` holds K concatenated CBT1 records (W = 2^w, H = 1) and
// `path` + ".json" holds the parameters.

inline nlohmann::json to_json(const BloomParams& p) {
  return {{"word_size", p.word_size},
          {"block_count", p.block_count},
          {"columns_per_block", p.columns_per_block},
          {"height", p.height},
          {"row_offset", p.row_offset},
          {"distance", p.distance == BloomDistance::Hamming ? "hamming" : "popcount_normalized"}};
}

inline BloomParams bloom_params_from_json(const nlohmann::json& j) {
  try {
    BloomParams p;
    p.word_size = j.at("word_size").get<unsigned>();
    p.block_count = j.at("block_count").get<std::size_t>();
    p.columns_per_block = j.at("columns_per_block").get<std::size_t>();
    p.height = j.at("height").get<std::size_t>();
    p.row_offset = j.value("row_offset", std::size_t{0});
    const auto dist = j.value("distance", std::string("popcount_normalized"));
    require(dist == "hamming" || dist == "popcount_normalized", ErrorCode::ParseError, "unknown distance " + dist);
    p.distance = dist == "hamming" ? BloomDistance::Hamming : BloomDistance::PopcountNormalized;
    validate_bloom_params(p);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("Bloom-filter sidecar: ") + e.what());
  }
}

inline void save_bloom_set(const std::filesystem::path& path, const BloomFilterSet& set) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  for (const auto& f : set.filters) write_cbt(os, BitTemplate(f.size(), 1, f));
  std::ofstream js(path.string() + ".json");
  require(static_cast<bool>(js), ErrorCode::IoError, "cannot write Bloom-filter sidecar");
  js << to_json(set.params).dump(2) << '\n';
}

inline BloomFilterSet load_bloom_set(const std::filesystem::path& path) {
  std::ifstream js(path.string() + ".json");
  require(static_cast<bool>(js), ErrorCode::IoError, "missing Bloom-filter sidecar for " + path.string());
  nlohmann::json j;
  try {
    js >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("Bloom-filter sidecar: ") + e.what());
  }
  BloomFilterSet set{{}, bloom_params_from_json(j)};
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::IoError, "cannot open " + path.string());
  for (std::size_t k = 0; k < set.params.block_count; ++k) {
    auto rec = read_cbt(is);
    require(rec.width() == set.params.filter_bits() && rec.height() == 1, ErrorCode::ParseError,
            "Bloom-filter record has wrong shape");
    set.filters.push_back(rec.bits());
  }
  return set;
}

}  // namespace cbsa
