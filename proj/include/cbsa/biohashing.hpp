#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cbsa/error.hpp"
#include "cbsa/rng.hpp"
#include "cbsa/templates.hpp"

namespace cbsa {

/// l x N random projection, row-major. Regenerated from the helper seed on
/// demand; never persisted.
class ProjectionMatrix {
 public:
  ProjectionMatrix(std::size_t rows, std::size_t cols, std::uint64_t seed, std::vector<double> data)
      : rows_(rows), cols_(cols), seed_(seed), data_(std::move(data)) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
  double at(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  friend bool operator==(const ProjectionMatrix&, const ProjectionMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::uint64_t seed_;
  std::vector<double> data_;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

constexpr std::uint64_t kProjectionStream = 0x62696f68617368ULL;  // "biohash"

}  // namespace detail

/// Standard-normal entries drawn row by row from Rng(derive_seed(seed, {"biohash", l, N})).
///
/// With orthonormalization on, rows are orthonormalized with modified
/// Gram-Schmidt. When l > N, rows are processed in consecutive groups of N
/// (row g*N + i is orthogonal to the other rows of group g), so every group is
/// an orthonormal basis and different groups are independent.
inline ProjectionMatrix generate_projection(const HelperData& helper) {
  require(helper.scheme == Scheme::BioHashing, ErrorCode::InvalidParams, "helper data is not BioHashing");
  const auto& p = helper.biohash;
  require(p.code_length > 0, ErrorCode::InvalidParams, "code length l must be positive");
  require(p.input_dim > 0, ErrorCode::InvalidParams, "input dimension N must be positive");
  require(std::isfinite(p.threshold), ErrorCode::InvalidParams, "threshold must be finite");

  const std::size_t l = p.code_length;
  const std::size_t n = p.input_dim;
  Rng rng(derive_seed(helper.seed, {detail::kProjectionStream, l, n}));
  std::vector<double> m(l * n);

  for (std::size_t i = 0; i < l; ++i) {
    std::span<double> row(m.data() + i * n, n);
    for (;;) {
      for (auto& v : row) v = rng.normal();
      if (!p.orthonormalize) break;
      const std::size_t group_start = (i / n) * n;
      for (std::size_t k = group_start; k < i; ++k) {
        std::span<const double> prev(m.data() + k * n, n);
        const double proj = detail::dot(row, prev);
        for (std::size_t j = 0; j < n; ++j) row[j] -= proj * prev[j];
      }
      const double norm = std::sqrt(detail::dot(row, row));
      if (norm > 1e-8) {
        for (auto& v : row) v /= norm;
        break;
      }
    }
  }
  return ProjectionMatrix(l, n, helper.seed, std::move(m));
}

/// BioHashing with a pre-generated projection: bit i = 1 iff <x, b_i> > tau.
class BioHasher {
 public:
  explicit BioHasher(const HelperData& helper)
      : matrix_(generate_projection(helper)), threshold_(helper.biohash.threshold) {}
  BioHasher(ProjectionMatrix matrix, double threshold) : matrix_(std::move(matrix)), threshold_(threshold) {}

  std::size_t input_dim() const noexcept { return matrix_.cols(); }
  std::size_t code_length() const noexcept { return matrix_.rows(); }
  const ProjectionMatrix& matrix() const noexcept { return matrix_; }

  BitVector hash_bits(std::span<const double> x) const {
    require(x.size() == matrix_.cols(), ErrorCode::DimMismatch,
            "feature dim " + std::to_string(x.size()) + " != N " + std::to_string(matrix_.cols()));
    BitVector code(matrix_.rows());
    for (std::size_t i = 0; i < matrix_.rows(); ++i)
      if (detail::dot(x, matrix_.row(i)) > threshold_) code.set(i);
    return code;
  }

  ProtectedTemplate hash(const FeatureVector& x) const { return BioHashCode{hash_bits(x.values())}; }

 private:
  ProjectionMatrix matrix_;
  double threshold_;
};

inline ProtectedTemplate biohash(const FeatureVector& x, const HelperData& helper) {
  return BioHasher(helper).hash(x);
}

inline Similarity match_biohash(const ProtectedTemplate& t1, const ProtectedTemplate& t2) {
  const auto* a = std::get_if<BioHashCode>(&t1);
  const auto* b = std::get_if<BioHashCode>(&t2);
  require(a != nullptr && b != nullptr, ErrorCode::KindMismatch, "match_biohash needs two BioHash codes");
  return normalized_hamming_similarity(a->bits, b->bits);
}

/// A BioHash code as a CBT1 template with W = l, H = 1.
inline BitTemplate to_bit_template(const BioHashCode& code) { return BitTemplate(code.bits.size(), 1, code.bits); }

}  // namespace cbsa
