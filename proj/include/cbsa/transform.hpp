#pragma once

#include <optional>

#include "cbsa/biohashing.hpp"
#include "cbsa/bloomfilter.hpp"
#include "cbsa/error.hpp"
#include "cbsa/templates.hpp"

namespace cbsa {

/// Applies the cancellable transform named by a HelperData value. The
/// BioHashing projection is generated once at construction.
class Transformer {
 public:
  explicit Transformer(const HelperData& helper) : helper_(helper) {
    if (helper.scheme == Scheme::BioHashing)
      hasher_.emplace(helper);
    else
      validate_bloom_params(helper.bloom);
  }

  const HelperData& helper() const noexcept { return helper_; }

  ProtectedTemplate operator()(const FeatureVector& x) const {
    require(hasher_.has_value(), ErrorCode::KindMismatch, "feature vectors are protected with BioHashing only");
    return hasher_->hash(x);
  }

  ProtectedTemplate operator()(const BitTemplate& t) const {
    require(helper_.scheme == Scheme::BloomFilter, ErrorCode::KindMismatch,
            "bit templates are protected with Bloom-filters only");
    return bloom_transform(t, helper_);
  }

 private:
  HelperData helper_;
  std::optional<BioHasher> hasher_;
};

/// Transform-domain comparison of two protected templates of the same kind.
inline Similarity match(const ProtectedTemplate& a, const ProtectedTemplate& b) {
  require(a.index() == b.index(), ErrorCode::KindMismatch, "cannot match templates of different kinds");
  if (std::holds_alternative<BioHashCode>(a)) return match_biohash(a, b);
  return match_bloom(a, b);
}

}  // namespace cbsa
