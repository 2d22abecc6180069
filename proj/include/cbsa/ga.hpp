#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cbsa/bits.hpp"
#include "cbsa/error.hpp"
#include "cbsa/rng.hpp"

namespace cbsa {

struct RealGenome {
  std::vector<double> values;
  double lower_bound = -1.0;
  double upper_bound = 1.0;
  friend bool operator==(const RealGenome&, const RealGenome&) = default;
};

struct BitGenome {
  BitVector bits;
  friend bool operator==(const BitGenome&, const BitGenome&) = default;
};

using Genome = std::variant<RealGenome, BitGenome>;

enum class GenomeKind { RealVector, BitString };

struct GaConfig {
  std::size_t population_size = 100;
  std::size_t elite_count = 2;
  double crossover_rate = 0.8;
  /// Unset means the genome default: 0.01 for bit strings, 0.05 for reals.
  std::optional<double> mutation_rate;
  double mutation_scale = 0.1;
  std::size_t max_generations = 2000;
  std::size_t stall_generations = 50;
  double stall_tolerance = 1e-6;
  double fitness_target = 0.0;
  std::uint64_t seed = 1;
  std::size_t tournament_size = 3;
  double real_lower_bound = -1.0;
  double real_upper_bound = 1.0;

  double effective_mutation_rate(GenomeKind kind) const {
    if (mutation_rate) return *mutation_rate;
    return kind == GenomeKind::BitString ? 0.01 : 0.05;
  }
};

inline void validate(const GaConfig& c) {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  require(c.population_size >= 2, ErrorCode::InvalidConfig, "population_size must be >= 2");
  require(c.elite_count < c.population_size, ErrorCode::InvalidConfig, "elite_count must be < population_size");
  require(in01(c.crossover_rate), ErrorCode::InvalidConfig, "crossover_rate must be in [0,1]");
  require(!c.mutation_rate || in01(*c.mutation_rate), ErrorCode::InvalidConfig, "mutation_rate must be in [0,1]");
  require(c.mutation_scale > 0.0, ErrorCode::InvalidConfig, "mutation_scale must be positive");
  require(c.max_generations > 0, ErrorCode::InvalidConfig, "max_generations must be positive");
  require(c.stall_generations > 0, ErrorCode::InvalidConfig, "stall_generations must be positive");
  require(c.stall_tolerance > 0.0, ErrorCode::InvalidConfig, "stall_tolerance must be positive");
  require(c.fitness_target >= 0.0, ErrorCode::InvalidConfig, "fitness_target must be nonnegative");
  require(c.tournament_size >= 1, ErrorCode::InvalidConfig, "tournament_size must be >= 1");
  require(c.real_lower_bound < c.real_upper_bound, ErrorCode::InvalidConfig, "real genome bounds are empty");
}

// ---------------------------------------------------------------------------
// Variation operators
// ---------------------------------------------------------------------------

/// Uniform crossover: every position is swapped between the parents with probability 1/2.
inline std::pair<BitGenome, BitGenome> crossover(const BitGenome& a, const BitGenome& b, Rng& rng) {
  require(a.bits.size() == b.bits.size(), ErrorCode::ShapeMismatch, "crossover of bit genomes with different lengths");
  BitGenome c1 = a;
  BitGenome c2 = b;
  auto w1 = c1.bits.words();
  auto w2 = c2.bits.words();
  for (std::size_t w = 0; w < w1.size(); ++w) {
    const std::uint64_t swap = rng.next_u64();
    const std::uint64_t diff = (w1[w] ^ w2[w]) & swap;
    w1[w] ^= diff;
    w2[w] ^= diff;
  }
  c1.bits.trim();
  c2.bits.trim();
  return {std::move(c1), std::move(c2)};
}

/// Whole-arithmetic blend with a given mixing weight.
inline std::pair<RealGenome, RealGenome> blend(const RealGenome& a, const RealGenome& b, double alpha) {
  require(a.values.size() == b.values.size() && a.lower_bound == b.lower_bound && a.upper_bound == b.upper_bound,
          ErrorCode::ShapeMismatch, "crossover of real genomes with different shapes");
  RealGenome c1 = a;
  RealGenome c2 = b;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    c1.values[i] = std::clamp(alpha * a.values[i] + (1.0 - alpha) * b.values[i], a.lower_bound, a.upper_bound);
    c2.values[i] = std::clamp((1.0 - alpha) * a.values[i] + alpha * b.values[i], a.lower_bound, a.upper_bound);
  }
  return {std::move(c1), std::move(c2)};
}

inline std::pair<RealGenome, RealGenome> crossover(const RealGenome& a, const RealGenome& b, Rng& rng) {
  return blend(a, b, rng.uniform01());
}

inline std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, Rng& rng) {
  require(a.index() == b.index(), ErrorCode::ShapeMismatch, "crossover of genomes of different kinds");
  if (const auto* ra = std::get_if<RealGenome>(&a)) {
    auto [x, y] = crossover(*ra, std::get<RealGenome>(b), rng);
    return {Genome(std::move(x)), Genome(std::move(y))};
  }
  auto [x, y] = crossover(std::get<BitGenome>(a), std::get<BitGenome>(b), rng);
  return {Genome(std::move(x)), Genome(std::move(y))};
}

/// Flips each bit independently with probability `rate`. Positions are
/// visited by geometric skips so the cost scales with the number of flips.
inline BitGenome mutate(BitGenome g, double rate, Rng& rng) {
  const std::size_t n = g.bits.size();
  if (rate <= 0.0 || n == 0) return g;
  if (rate >= 1.0) {
    for (auto& w : g.bits.words()) w = ~w;
    g.bits.trim();
    return g;
  }
  for (std::size_t i = rng.geometric(rate); i < n; i += 1 + rng.geometric(rate)) g.bits.flip(i);
  return g;
}

/// Each coordinate receives N(0, scale^2) noise with probability `rate`, then is clamped.
inline RealGenome mutate(RealGenome g, double rate, double scale, Rng& rng) {
  if (rate <= 0.0) return g;
  for (auto& v : g.values)
    if (rate >= 1.0 || rng.bernoulli(rate)) v = std::clamp(v + rng.normal(0.0, scale), g.lower_bound, g.upper_bound);
  return g;
}

inline BitGenome mutate(BitGenome g, const GaConfig& cfg, Rng& rng) {
  return mutate(std::move(g), cfg.effective_mutation_rate(GenomeKind::BitString), rng);
}

inline RealGenome mutate(RealGenome g, const GaConfig& cfg, Rng& rng) {
  return mutate(std::move(g), cfg.effective_mutation_rate(GenomeKind::RealVector), cfg.mutation_scale, rng);
}

inline Genome mutate(Genome g, const GaConfig& cfg, Rng& rng) {
  if (auto* r = std::get_if<RealGenome>(&g)) return mutate(std::move(*r), cfg, rng);
  return mutate(std::get<BitGenome>(std::move(g)), cfg, rng);
}

inline BitGenome random_bit_genome(std::size_t n_bits, Rng& rng) {
  BitGenome g{BitVector(n_bits)};
  for (auto& w : g.bits.words()) w = rng.next_u64();
  g.bits.trim();
  return g;
}

inline RealGenome random_real_genome(std::size_t dim, double lower, double upper, Rng& rng) {
  RealGenome g{std::vector<double>(dim), lower, upper};
  for (auto& v : g.values) v = rng.uniform(lower, upper);
  return g;
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

enum class StopReason { TargetReached, Stalled, MaxGenerations };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::TargetReached: return "target_reached";
    case StopReason::Stalled: return "stalled";
    case StopReason::MaxGenerations: return "max_generations";
  }
  return "unknown";
}

struct GenerationStats {
  std::size_t generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  friend bool operator==(const GenerationStats&, const GenerationStats&) = default;
};

template <typename G>
struct EvolutionResult {
  G best_genome;
  double best_fitness = 0.0;
  std::size_t generations_run = 0;
  std::vector<GenerationStats> convergence_log;
  StopReason stop_reason = StopReason::MaxGenerations;
  double wall_time_seconds = 0.0;
};

namespace detail {

constexpr std::uint64_t kInitStream = 0x696e6974ULL;   // "init"
constexpr std::uint64_t kBreedStream = 0x62726564ULL;  // "bred"

template <typename G>
struct Scored {
  G genome;
  double fitness;
};

template <typename G>
std::size_t tournament(const std::vector<Scored<G>>& pop, std::size_t size, Rng& rng) {
  std::size_t best = rng.below(pop.size());
  for (std::size_t t = 1; t < size; ++t) {
    const std::size_t cand = rng.below(pop.size());
    if (pop[cand].fitness < pop[best].fitness || (pop[cand].fitness == pop[best].fitness && cand < best)) best = cand;
  }
  return best;
}

}  // namespace detail

/// Generational GA with elitism, minimizing `fitness`.
///
/// Generation 0 is the random initial population. Every later generation
/// keeps the elite_count best individuals and replaces the rest with
/// children: two tournament-selected parents, crossover with probability
/// crossover_rate, then mutation. Randomness for initial individual i comes
/// from stream (seed, "init", i) and for child pair k of generation g from
/// stream (seed, "bred", g, k), so results do not depend on evaluation order.
///
/// Stops when best <= fitness_target, when the best fitness improved by less
/// than stall_tolerance per generation averaged over the last
/// stall_generations, or after max_generations.
template <typename G, typename RandomFn, typename FitnessFn, typename CrossoverFn, typename MutateFn>
EvolutionResult<G> evolve(const GaConfig& cfg, RandomFn&& random_individual, FitnessFn&& fitness,
                          CrossoverFn&& cross, MutateFn&& mutate_fn) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  using detail::Scored;

  std::vector<Scored<G>> pop;
  pop.reserve(cfg.population_size);
  for (std::size_t i = 0; i < cfg.population_size; ++i) {
    Rng rng(derive_seed(cfg.seed, {detail::kInitStream, i}));
    G g = random_individual(rng);
    const double f = fitness(g);
    pop.push_back({std::move(g), f});
  }

  auto rank = [](std::vector<Scored<G>>& p) {
    std::stable_sort(p.begin(), p.end(), [](const auto& a, const auto& b) { return a.fitness < b.fitness; });
  };
  auto mean_of = [](const std::vector<Scored<G>>& p) {
    double s = 0.0;
    for (const auto& x : p) s += x.fitness;
    return s / static_cast<double>(p.size());
  };

  rank(pop);
  EvolutionResult<G> result{pop.front().genome, pop.front().fitness, 0, {}, StopReason::MaxGenerations, 0.0};
  result.convergence_log.push_back({0, result.best_fitness, mean_of(pop)});

  auto stop_reason = [&](std::size_t gen) -> std::optional<StopReason> {
    if (result.best_fitness <= cfg.fitness_target) return StopReason::TargetReached;
    if (gen >= cfg.stall_generations) {
      const double before = result.convergence_log[gen - cfg.stall_generations].best_fitness;
      const double gain = (before - result.best_fitness) / static_cast<double>(cfg.stall_generations);
      if (gain < cfg.stall_tolerance) return StopReason::Stalled;
    }
    if (gen >= cfg.max_generations) return StopReason::MaxGenerations;
    return std::nullopt;
  };

  std::size_t gen = 0;
  auto reason = stop_reason(gen);
  std::vector<Scored<G>> next;
  while (!reason) {
    ++gen;
    next.clear();
    next.reserve(cfg.population_size);
    for (std::size_t e = 0; e < cfg.elite_count; ++e) next.push_back(pop[e]);

    for (std::size_t k = 0; next.size() < cfg.population_size; ++k) {
      Rng rng(derive_seed(cfg.seed, {detail::kBreedStream, gen, k}));
      const auto& p1 = pop[detail::tournament(pop, cfg.tournament_size, rng)].genome;
      const auto& p2 = pop[detail::tournament(pop, cfg.tournament_size, rng)].genome;
      G c1 = p1;
      G c2 = p2;
      if (rng.bernoulli(cfg.crossover_rate)) std::tie(c1, c2) = cross(p1, p2, rng);
      c1 = mutate_fn(std::move(c1), rng);
      c2 = mutate_fn(std::move(c2), rng);
      const double f1 = fitness(c1);
      next.push_back({std::move(c1), f1});
      if (next.size() < cfg.population_size) {
        const double f2 = fitness(c2);
        next.push_back({std::move(c2), f2});
      }
    }
    std::swap(pop, next);
    rank(pop);

    if (pop.front().fitness < result.best_fitness) {
      result.best_fitness = pop.front().fitness;
      result.best_genome = pop.front().genome;
    }
    result.convergence_log.push_back({gen, result.best_fitness, mean_of(pop)});
    reason = stop_reason(gen);
  }

  result.generations_run = gen;
  result.stop_reason = *reason;
  result.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace cbsa
