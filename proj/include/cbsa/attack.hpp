#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cbsa/biohashing.hpp"
#include "cbsa/bloomfilter.hpp"
#include "cbsa/error.hpp"
#include "cbsa/ga.hpp"
#include "cbsa/templates.hpp"

namespace cbsa {

struct AttackResult {
  Genome best_genome;
  double best_fitness = 0.0;
  std::size_t generations_run = 0;
  std::vector<GenerationStats> convergence_log;
  StopReason stop_reason = StopReason::MaxGenerations;
  double wall_time_seconds = 0.0;
};

/// Arithmetic mean of (1 - match(candidate, target)) over the targets.
template <typename T, typename MatchFn>
double mean_target_distance(const T& candidate, std::span<const T> targets, MatchFn&& match) {
  require(!targets.empty(), ErrorCode::EmptyTargets, "no compromised templates to attack");
  double sum = 0.0;
  for (const auto& t : targets) sum += 1.0 - static_cast<double>(match(candidate, t));
  return sum / static_cast<double>(targets.size());
}

// ---------------------------------------------------------------------------
// Bloom-filter genomes: W*w bits, column c's codeword in bits c*w .. c*w+w-1,
// most significant bit first.
// ---------------------------------------------------------------------------

inline std::size_t bloom_genome_bits(const BloomParams& p) { return p.width() * p.word_size; }

inline std::vector<std::uint32_t> bloom_genome_codewords(const BitGenome& g, const BloomParams& p) {
  require(g.bits.size() == bloom_genome_bits(p), ErrorCode::IncompatibleGenome, "bit genome is not W*w bits");
  std::vector<std::uint32_t> words(p.width());
  std::size_t i = 0;
  for (auto& w : words) {
    std::uint32_t v = 0;
    for (unsigned r = 0; r < p.word_size; ++r) v = (v << 1) | static_cast<std::uint32_t>(g.bits.get(i++));
    w = v;
  }
  return words;
}

/// Template whose codeword window holds the genome; all other rows are zero.
inline BitTemplate decode_bloom_genome(const BitGenome& g, const BloomParams& p) {
  const auto words = bloom_genome_codewords(g, p);
  BitTemplate t(p.width(), p.height);
  for (std::size_t c = 0; c < words.size(); ++c)
    for (unsigned r = 0; r < p.word_size; ++r)
      if ((words[c] >> (p.word_size - 1 - r)) & 1U) t.set(c, p.row_offset + r);
  return t;
}

inline BitGenome encode_bloom_genome(const BitTemplate& t, const BloomParams& p) {
  check_bloom_shape(t, p);
  BitGenome g{BitVector(bloom_genome_bits(p))};
  std::size_t i = 0;
  for (std::size_t c = 0; c < t.width(); ++c)
    for (unsigned r = 0; r < p.word_size; ++r) g.bits.set(i++, t.get(c, p.row_offset + r));
  return g;
}

namespace detail {

inline void check_targets(std::span<const ProtectedTemplate> targets, const HelperData& helper) {
  require(!targets.empty(), ErrorCode::EmptyTargets, "no compromised templates to attack");
  for (const auto& t : targets) {
    if (helper.scheme == Scheme::BioHashing) {
      const auto* c = std::get_if<BioHashCode>(&t);
      require(c != nullptr, ErrorCode::KindMismatch, "BioHashing attack needs BioHash code targets");
      require(c->bits.size() == helper.biohash.code_length, ErrorCode::LengthMismatch,
              "target code length differs from helper data");
    } else {
      const auto* b = std::get_if<BloomFilterSet>(&t);
      require(b != nullptr, ErrorCode::KindMismatch, "Bloom-filter attack needs Bloom-filter targets");
      require(b->params == helper.bloom, ErrorCode::ParamMismatch, "target parameters differ from helper data");
    }
  }
}

/// Transform-domain distance of a candidate preimage to the compromised templates.
class AttackObjective {
 public:
  AttackObjective(std::span<const ProtectedTemplate> targets, const HelperData& helper) : helper_(helper) {
    check_targets(targets, helper);
    if (helper.scheme == Scheme::BioHashing) {
      hasher_.emplace(helper);
      for (const auto& t : targets) codes_.push_back(std::get<BioHashCode>(t).bits);
    } else {
      validate_bloom_params(helper.bloom);
      for (const auto& t : targets) sets_.push_back(std::get<BloomFilterSet>(t));
    }
  }

  double operator()(const RealGenome& g) const {
    require(helper_.scheme == Scheme::BioHashing, ErrorCode::IncompatibleGenome,
            "real genomes attack BioHashing only");
    require(g.values.size() == helper_.biohash.input_dim, ErrorCode::IncompatibleGenome,
            "real genome dim differs from N");
    const BitVector code = hasher_->hash_bits(g.values);
    return mean_target_distance<BitVector>(code, codes_, [](const BitVector& a, const BitVector& b) {
      return normalized_hamming_similarity(a, b).value();
    });
  }

  double operator()(const BitGenome& g) const {
    require(helper_.scheme == Scheme::BloomFilter, ErrorCode::IncompatibleGenome,
            "bit genomes attack Bloom-filter only");
    require(g.bits.size() == bloom_genome_bits(helper_.bloom), ErrorCode::IncompatibleGenome,
            "bit genome is not W*w bits");
    const auto set = filters_from_codewords(bloom_genome_codewords(g, helper_.bloom), helper_.bloom);
    return mean_target_distance<BloomFilterSet>(set, sets_, [](const BloomFilterSet& a, const BloomFilterSet& b) {
      return match_bloom(a, b).value();
    });
  }

  double operator()(const Genome& g) const {
    return std::visit([this](const auto& x) { return (*this)(x); }, g);
  }

 private:
  HelperData helper_;
  std::optional<BioHasher> hasher_;
  std::vector<BitVector> codes_;
  std::vector<BloomFilterSet> sets_;
};

}  // namespace detail

/// Mean normalized transform-domain distance between transform(genome) and
/// each target. 0 means an exact transform-domain match.
inline double fitness(const Genome& genome, std::span<const ProtectedTemplate> targets, const HelperData& helper) {
  const bool compatible = (helper.scheme == Scheme::BioHashing) == std::holds_alternative<RealGenome>(genome);
  require(compatible, ErrorCode::IncompatibleGenome, "genome kind does not match the helper scheme");
  return detail::AttackObjective(targets, helper)(genome);
}

/// Runs the genetic search for a preimage of the compromised templates.
inline AttackResult run_attack(std::span<const ProtectedTemplate> targets, const HelperData& helper,
                               const GaConfig& config) {
  validate(config);
  const detail::AttackObjective objective(targets, helper);

  auto pack = [](auto&& r) {
    return AttackResult{Genome(std::move(r.best_genome)), r.best_fitness, r.generations_run,
                        std::move(r.convergence_log), r.stop_reason, r.wall_time_seconds};
  };

  if (helper.scheme == Scheme::BioHashing) {
    const std::size_t dim = helper.biohash.input_dim;
    return pack(evolve<RealGenome>(
        config,
        [&](Rng& rng) { return random_real_genome(dim, config.real_lower_bound, config.real_upper_bound, rng); },
        [&](const RealGenome& g) { return objective(g); },
        [](const RealGenome& a, const RealGenome& b, Rng& rng) { return crossover(a, b, rng); },
        [&](RealGenome g, Rng& rng) { return mutate(std::move(g), config, rng); }));
  }
  const std::size_t n_bits = bloom_genome_bits(helper.bloom);
  return pack(evolve<BitGenome>(
      config, [&](Rng& rng) { return random_bit_genome(n_bits, rng); },
      [&](const BitGenome& g) { return objective(g); },
      [](const BitGenome& a, const BitGenome& b, Rng& rng) { return crossover(a, b, rng); },
      [&](BitGenome g, Rng& rng) { return mutate(std::move(g), config, rng); }));
}

inline AttackResult run_attack(const ProtectedTemplate& target, const HelperData& helper, const GaConfig& config) {
  return run_attack(std::span<const ProtectedTemplate>(&target, 1), helper, config);
}

}  // namespace cbsa
