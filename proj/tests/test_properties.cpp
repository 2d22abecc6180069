// Randomized invariants; every property runs kCases generated inputs.

#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "cbsa/cbsa.hpp"

using namespace cbsa;

namespace {

constexpr int kCases = 1000;

// Seed of case i of a named property, so failures are reproducible in isolation.
Rng case_rng(std::uint64_t property, int i) { return Rng(derive_seed(0xC0FFEE, {property, static_cast<std::uint64_t>(i)})); }

BitVector gen_bits(Rng& r, std::size_t n) {
  BitVector v(n);
  for (std::size_t i = 0; i < n; ++i)
    if (r.bernoulli(0.5)) v.set(i);
  return v;
}

BitTemplate gen_template(Rng& r, std::size_t w, std::size_t h) { return BitTemplate(w, h, gen_bits(r, w * h)); }

std::vector<double> gen_vec(Rng& r, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = r.normal();
  return v;
}

std::vector<double> gen_scores(Rng& r, std::size_t max_n) {
  std::vector<double> v(1 + r.below(max_n));
  for (auto& x : v) x = std::round(r.uniform01() * 40) / 40;  // ties on purpose
  return v;
}

}  // namespace

TEST(Property, HammingIsAMetric) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(1, i);
    const std::size_t n = 1 + r.below(200);
    const auto a = gen_bits(r, n), b = gen_bits(r, n), c = gen_bits(r, n);
    ASSERT_EQ(hamming_distance(a, a), 0u);
    ASSERT_EQ(hamming_distance(a, b), hamming_distance(b, a));
    ASSERT_LE(hamming_distance(a, c), hamming_distance(a, b) + hamming_distance(b, c));
    ASSERT_EQ(hamming_distance(a, b) == 0, a == b);
  }
}

TEST(Property, SimilarityPlusDistanceIsOne) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(2, i);
    const std::size_t n = 1 + r.below(300);
    const auto a = gen_bits(r, n), b = gen_bits(r, n);
    const auto s = normalized_hamming_similarity(a, b);
    ASSERT_DOUBLE_EQ(s.value() + static_cast<double>(hamming_distance(a, b)) / n, 1.0);
    ASSERT_GE(s.value(), 0.0);
    ASSERT_LE(s.value(), 1.0);
  }
}

TEST(Property, ShiftedMatchMonotoneInMaxShift) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(3, i);
    const std::size_t w = 2 + r.below(24), h = 1 + r.below(4);
    const auto a = gen_template(r, w, h), b = gen_template(r, w, h);
    double prev = -1;
    for (std::size_t m = 0; m <= std::min<std::size_t>(4, w - 1); ++m) {
      const double s = shifted_match(a, b, m).value();
      ASSERT_GE(s, prev);
      prev = s;
    }
    const long k = static_cast<long>(r.below(w));
    ASSERT_DOUBLE_EQ(shifted_match(a, shift_columns(a, k), w - 1).value(), 1.0);
  }
}

TEST(Property, BitTemplateAddressing) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(4, i);
    const std::size_t w = 1 + r.below(40), h = 1 + r.below(25);
    BitTemplate t(w, h);
    const std::size_t c = r.below(w), row = r.below(h);
    t.set(c, row);
    ASSERT_EQ(t.bits().popcount(), 1u);
    ASSERT_TRUE(t.bits().get(c * h + row));
    ASSERT_TRUE(t.get(c, row));
  }
}

TEST(Property, CbtRoundTrip) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(5, i);
    const auto t = gen_template(r, 1 + r.below(70), 1 + r.below(21));
    std::stringstream ss;
    write_cbt(ss, t);
    ASSERT_EQ(read_cbt(ss), t);
  }
}

TEST(Property, BioHashTieMapsToZero) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(6, i);
    // rows e_i scaled by powers of two keep <x, b_i> exact
    const std::size_t n = 1 + r.below(16);
    const double tau = std::ldexp(static_cast<double>(r.below(64)) - 32.0, -3);
    std::vector<double> m(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) m[k * n + k] = 1.0;
    const BioHasher h(ProjectionMatrix(n, n, 0, m), tau);
    std::vector<double> x(n);
    std::string want;
    for (std::size_t k = 0; k < n; ++k) {
      const int mode = static_cast<int>(r.below(3));
      x[k] = tau + (mode - 1) * 0.125;  // below, exactly at, above tau
      want += mode == 2 ? '1' : '0';
    }
    ASSERT_EQ(h.hash_bits(x).to_string(), want);
  }
}

TEST(Property, BioHashMatchSymmetric) {
  const BioHasher h(HelperData::biohashing(1, 12, 40));
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(7, i);
    const auto a = h.hash(FeatureVector(gen_vec(r, 12))), b = h.hash(FeatureVector(gen_vec(r, 12)));
    ASSERT_EQ(match(a, b).value(), match(b, a).value());
    ASSERT_EQ(match(a, a).value(), 1.0);
  }
}

TEST(Property, BloomInvariantToInBlockPermutation) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(8, i);
    const unsigned w = 1 + static_cast<unsigned>(r.below(5));
    const std::size_t k = 1 + r.below(3), lb = 1 + r.below(8);
    const auto helper = HelperData::bloom_filter(w, k, lb, w);
    const auto t = gen_template(r, k * lb, w);
    BitTemplate p(k * lb, w);
    for (std::size_t b = 0; b < k; ++b) {
      std::vector<std::size_t> perm(lb);
      for (std::size_t j = 0; j < lb; ++j) perm[j] = j;
      for (std::size_t j = lb; j > 1; --j) std::swap(perm[j - 1], perm[r.below(j)]);
      for (std::size_t j = 0; j < lb; ++j)
        for (std::size_t row = 0; row < w; ++row)
          if (t.get(b * lb + perm[j], row)) p.set(b * lb + j, row);
    }
    ASSERT_EQ(bloom_transform(t, helper), bloom_transform(p, helper));
  }
}

TEST(Property, BloomSingleBitFlipChangesAtMostTwoBits) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(9, i);
    const unsigned w = 1 + static_cast<unsigned>(r.below(6));
    const std::size_t k = 1 + r.below(3), lb = 1 + r.below(10);
    const auto helper = HelperData::bloom_filter(w, k, lb, w);
    const auto t = gen_template(r, k * lb, w);
    auto u = t;
    u.bits().flip(r.below(u.bits().size()));
    const auto a = std::get<BloomFilterSet>(bloom_transform(t, helper));
    const auto b = std::get<BloomFilterSet>(bloom_transform(u, helper));
    std::size_t changed = 0;
    for (std::size_t j = 0; j < k; ++j) changed += hamming_distance(a.filters[j], b.filters[j]);
    ASSERT_LE(changed, 2u);
  }
}

TEST(Property, BloomMatchSymmetricAndBounded) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(10, i);
    const unsigned w = 1 + static_cast<unsigned>(r.below(5));
    const std::size_t k = 1 + r.below(4), lb = 1 + r.below(8);
    const auto helper = HelperData::bloom_filter(w, k, lb, w);
    const auto a = bloom_transform(gen_template(r, k * lb, w), helper);
    const auto b = bloom_transform(gen_template(r, k * lb, w), helper);
    const double s = match(a, b).value();
    ASSERT_EQ(s, match(b, a).value());
    ASSERT_GE(s, 0.0);
    ASSERT_LE(s, 1.0);
    ASSERT_EQ(match(a, a).value(), 1.0);
  }
}

TEST(Property, RealOperatorsPreserveBounds) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(11, i);
    const double lo = -r.uniform(0.1, 3), hi = r.uniform(0.1, 3);
    const std::size_t n = 1 + r.below(20);
    const auto a = random_real_genome(n, lo, hi, r), b = random_real_genome(n, lo, hi, r);
    auto [c1, c2] = crossover(a, b, r);
    c1 = mutate(c1, r.uniform01(), r.uniform(0, 5), r);
    c2 = mutate(c2, r.uniform01(), r.uniform(0, 5), r);
    for (const RealGenome* g : std::initializer_list<const RealGenome*>{&a, &b, &c1, &c2})
      for (double v : g->values) {
        ASSERT_GE(v, lo);
        ASSERT_LE(v, hi);
      }
  }
}

TEST(Property, BitOperatorsPreserveLength) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(12, i);
    const std::size_t n = 1 + r.below(300);
    const auto a = random_bit_genome(n, r), b = random_bit_genome(n, r);
    const auto [c1, c2] = crossover(a, b, r);
    ASSERT_EQ(c1.bits.size(), n);
    // uniform crossover: each position comes from one parent, the other child gets the other
    for (std::size_t k = 0; k < n; ++k) {
      ASSERT_TRUE((c1.bits.get(k) == a.bits.get(k) && c2.bits.get(k) == b.bits.get(k)) ||
                  (c1.bits.get(k) == b.bits.get(k) && c2.bits.get(k) == a.bits.get(k)));
    }
    ASSERT_EQ(mutate(a, r.uniform01(), r).bits.size(), n);
  }
}

TEST(Property, BestSoFarIsMonotoneAndRunsAreDeterministic) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(13, i);
    const std::size_t n = 4 + r.below(20);
    const auto target = gen_bits(r, n);
    GaConfig cfg;
    cfg.population_size = 4 + r.below(8);
    cfg.elite_count = 1 + r.below(2);
    cfg.max_generations = 1 + r.below(10);
    cfg.stall_generations = 3;
    cfg.seed = r.next_u64();
    auto fit = [&](const BitGenome& g) { return static_cast<double>(hamming_distance(g.bits, target)) / n; };
    auto run = [&] {
      return evolve<BitGenome>(
          cfg, [&](Rng& rr) { return random_bit_genome(n, rr); }, fit,
          [](const BitGenome& a, const BitGenome& b, Rng& rr) { return crossover(a, b, rr); },
          [&](BitGenome g, Rng& rr) { return mutate(std::move(g), cfg, rr); });
    };
    const auto res = run();
    for (std::size_t g = 1; g < res.convergence_log.size(); ++g)
      ASSERT_LE(res.convergence_log[g].best_fitness, res.convergence_log[g - 1].best_fitness);
    ASSERT_EQ(res.best_fitness, fit(res.best_genome));
    ASSERT_EQ(res.best_fitness, res.convergence_log.back().best_fitness);
    const auto again = run();
    ASSERT_EQ(again.best_genome, res.best_genome);
    ASSERT_EQ(again.convergence_log, res.convergence_log);
  }
}

TEST(Property, FitnessInvariantToTargetOrder) {
  const auto helper = HelperData::biohashing(4, 10, 24);
  const BioHasher h(helper);
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(14, i);
    std::vector<ProtectedTemplate> t;
    for (std::size_t k = 0, n = 1 + r.below(5); k < n; ++k) t.push_back(h.hash(FeatureVector(gen_vec(r, 10))));
    const Genome g = random_real_genome(10, -1, 1, r);
    const double f = fitness(g, t, helper);
    std::reverse(t.begin(), t.end());
    ASSERT_NEAR(fitness(g, t, helper), f, 1e-15);
    ASSERT_GE(f, 0.0);
    ASSERT_LE(f, 1.0);
  }
}

TEST(Property, FarMonotoneInThreshold) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(15, i);
    const auto s = gen_scores(r, 30);
    double a = r.uniform01(), b = r.uniform01();
    if (a > b) std::swap(a, b);
    ASSERT_GE(far_at_threshold(s, a), far_at_threshold(s, b));
    ASSERT_DOUBLE_EQ(far_at_threshold(s, a) + frr_at_threshold(s, a), 100.0);
  }
}

TEST(Property, EerInRangeAndInvariantToMonotoneMaps) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(16, i);
    const auto g = gen_scores(r, 20), im = gen_scores(r, 20);
    const auto e = compute_eer_threshold(g, im);
    ASSERT_GE(e.eer, 0.0);
    ASSERT_LE(e.eer, 50.0 + 1e-9);
    auto warp = [](std::vector<double> v) {
      for (auto& x : v) x = std::exp(3 * x) - 7;
      return v;
    };
    ASSERT_NEAR(compute_eer_threshold(warp(g), warp(im)).eer, e.eer, 1e-9);
  }
}

TEST(Property, OverlapBoundedAndDecreasingWithSeparation) {
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(17, i);
    const GaussianFit a{r.uniform(-1, 1), r.uniform(0.05, 2)};
    const double s2 = r.uniform(0.05, 2);
    const double d1 = r.uniform(0.01, 3), d2 = d1 + r.uniform(0.01, 3);
    const auto o1 = overlap_area(a, GaussianFit{a.mu + d1, s2});
    const auto o2 = overlap_area(a, GaussianFit{a.mu + d2, s2});
    ASSERT_GE(o1.ol, 0.0);
    ASSERT_LE(o1.ol, 100.0);
    ASSERT_GE(o1.c, a.mu);
    ASSERT_LE(o1.c, a.mu + d1);
    if (std::abs(a.sigma - s2) < 1e-9 * s2) ASSERT_GE(o1.ol, o2.ol);
    else ASSERT_GE(o1.ol + 1e-9, o2.ol);
  }
}

TEST(Property, FeatureCsvRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "cbsa_prop_csv";
  std::filesystem::create_directories(dir);
  for (int i = 0; i < kCases; ++i) {
    auto r = case_rng(18, i);
    FaceDataset ds;
    const std::size_t dim = 1 + r.below(6);
    for (std::size_t s = 0, n = 1 + r.below(4); s < n; ++s) {
      auto v = gen_vec(r, dim);
      for (auto& x : v) x *= std::ldexp(1.0, static_cast<int>(r.below(40)) - 20);
      ds.push_back({s / 2, s % 2, FeatureVector(v)});
    }
    save_feature_csv(dir / "p.csv", ds);
    ASSERT_EQ(load_feature_csv(dir / "p.csv"), ds);
  }
  std::filesystem::remove_all(dir);
}
