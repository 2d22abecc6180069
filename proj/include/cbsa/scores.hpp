#pragma once

#include <map>
#include <span>
#include <vector>

#include "cbsa/data.hpp"
#include "cbsa/error.hpp"
#include "cbsa/metrics.hpp"
#include "cbsa/transform.hpp"

namespace cbsa {

/// A recovered preimage and the victim samples it is matched against in the
/// target system.
template <typename T>
struct Preimage {
  std::size_t subject = 0;
  T value;
  std::vector<std::size_t> probe_samples;
};

inline void check_same_structure(const HelperData& a, const HelperData& b) {
  require(a.scheme == b.scheme, ErrorCode::ParamMismatch, "enrolment and target systems use different schemes");
  if (a.scheme == Scheme::BioHashing)
    require(a.biohash.input_dim == b.biohash.input_dim && a.biohash.code_length == b.biohash.code_length,
            ErrorCode::ParamMismatch, "enrolment and target BioHashing shapes differ");
  else
    require(a.bloom == b.bloom, ErrorCode::ParamMismatch, "enrolment and target Bloom-filter parameters differ");
}

/// Scores of the target system (helper_target, shared by all users):
///   genuine   - every same-subject sample pair,
///   imposter  - every cross-subject sample pair,
///   mated-SA  - transform(preimage) vs transform(probe sample) per preimage and probe.
/// With no preimages the mated-SA set stays empty; otherwise every subject needs one.
template <typename T>
ScoreSet assemble_scores(const Dataset<T>& dataset, const HelperData& helper_enroll, const HelperData& helper_target,
                         std::span<const Preimage<T>> attacks) {
  check_same_structure(helper_enroll, helper_target);
  const Transformer target(helper_target);

  std::vector<ProtectedTemplate> enrolled;
  enrolled.reserve(dataset.size());
  for (const auto& s : dataset) enrolled.push_back(target(s.value));

  ScoreSet scores;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    for (std::size_t j = i + 1; j < dataset.size(); ++j) {
      const double s = match(enrolled[i], enrolled[j]).value();
      (dataset[i].subject == dataset[j].subject ? scores.genuine : scores.imposter).push_back(s);
    }

  if (attacks.empty()) return scores;

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
  for (std::size_t i = 0; i < dataset.size(); ++i) index[{dataset[i].subject, dataset[i].sample}] = i;
  std::map<std::size_t, const Preimage<T>*> by_subject;
  for (const auto& a : attacks) by_subject[a.subject] = &a;

  for (const auto& group : group_by_subject(dataset)) {
    const std::size_t subject = dataset[group.front()].subject;
    const auto it = by_subject.find(subject);
    require(it != by_subject.end(), ErrorCode::MissingAttackResult,
            "no attack result for subject " + std::to_string(subject));
    const auto forged = target(it->second->value);
    for (std::size_t probe : it->second->probe_samples) {
      const auto pos = index.find({subject, probe});
      require(pos != index.end(), ErrorCode::MissingAttackResult,
              "subject " + std::to_string(subject) + " has no sample " + std::to_string(probe));
      scores.mated_sa_imposter.push_back(match(forged, enrolled[pos->second]).value());
    }
  }
  return scores;
}

template <typename T>
ScoreSet assemble_scores(const Dataset<T>& dataset, const HelperData& helper_enroll, const HelperData& helper_target,
                         const std::vector<Preimage<T>>& attacks) {
  return assemble_scores(dataset, helper_enroll, helper_target, std::span<const Preimage<T>>(attacks));
}

}  // namespace cbsa
