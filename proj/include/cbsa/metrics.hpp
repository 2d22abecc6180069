#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbsa/error.hpp"

namespace cbsa {

/// Labeled similarity scores of one system.
struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> imposter;
  std::vector<double> mated_sa_imposter;
};

struct EerPoint {
  double theta = 0.0;  // decision threshold, accept iff score >= theta
  double eer = 0.0;    // percent
};

/// Percentage of scores accepted at theta (score >= theta).
inline double far_at_threshold(std::span<const double> scores, double theta) {
  require(!scores.empty(), ErrorCode::EmptyScores, "far_at_threshold on an empty score set");
  const auto accepted = std::count_if(scores.begin(), scores.end(), [theta](double s) { return s >= theta; });
  return 100.0 * static_cast<double>(accepted) / static_cast<double>(scores.size());
}

/// Percentage of scores rejected at theta (score < theta).
inline double frr_at_threshold(std::span<const double> scores, double theta) {
  return 100.0 - far_at_threshold(scores, theta);
}

/// Equal error rate and its threshold.
///
/// Operating points (FAR(t), FRR(t)) are taken at every distinct score t and
/// just above the largest score. The EER is where the lower convex hull of
/// those points crosses FAR == FRR; theta is interpolated between the
/// thresholds of the two hull vertices around the crossing with the same
/// weight. Both rates use the accept-iff-score>=theta convention.
inline EerPoint compute_eer_threshold(std::span<const double> genuine, std::span<const double> imposter) {
  require(!genuine.empty() && !imposter.empty(), ErrorCode::EmptyScores, "EER needs genuine and imposter scores");

  std::vector<double> g(genuine.begin(), genuine.end());
  std::vector<double> im(imposter.begin(), imposter.end());
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());

  std::vector<double> thresholds;
  thresholds.reserve(g.size() + im.size() + 1);
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::nextafter(thresholds.back(), INFINITY));

  struct Point {
    double far, frr, t;
  };
  const auto ng = static_cast<double>(g.size());
  const auto ni = static_cast<double>(im.size());
  std::vector<Point> pts;
  pts.reserve(thresholds.size());
  // Walk from the highest threshold down so FAR is nondecreasing.
  for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
    const double t = *it;
    const auto accepted_imp = static_cast<double>(im.end() - std::lower_bound(im.begin(), im.end(), t));
    const auto rejected_gen = static_cast<double>(std::lower_bound(g.begin(), g.end(), t) - g.begin());
    pts.push_back({accepted_imp / ni, rejected_gen / ng, t});
  }

  // Andrew's monotone chain, lower hull; points are sorted by FAR ascending,
  // ties by FRR ascending after the stable sort.
  std::stable_sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a.far < b.far || (a.far == b.far && a.frr < b.frr);
  });
  std::vector<Point> hull;
  for (const auto& p : pts) {
    if (!hull.empty() && hull.back().far == p.far) continue;
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double cross = (b.far - a.far) * (p.frr - a.frr) - (b.frr - a.frr) * (p.far - a.far);
      if (cross > 0.0) break;
      hull.pop_back();
    }
    hull.push_back(p);
  }

  auto gap = [](const Point& p) { return p.far - p.frr; };
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point& a = hull[i];
    if (gap(a) == 0.0) return {a.t, 100.0 * a.far};
    if (i + 1 < hull.size() && gap(a) < 0.0 && gap(hull[i + 1]) > 0.0) {
      const Point& b = hull[i + 1];
      const double w = gap(a) / (gap(a) - gap(b));
      return {a.t + w * (b.t - a.t), 100.0 * (a.far + w * (b.far - a.far))};
    }
  }
  // Unreachable: the hull runs from FAR = 0 (gap <= 0) to FAR = 1 (gap >= 0).
  throw Error(ErrorCode::EmptyScores, "EER crossing not found");
}

struct GaussianFit {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Sample mean and sample standard deviation (n - 1 denominator).
inline GaussianFit fit_gaussian(std::span<const double> xs) {
  require(xs.size() >= 2, ErrorCode::DegenerateDistribution, "Gaussian fit needs at least two scores");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  // rounding leaves a tiny spread when all scores are equal
  require(sd > 1e-12 * std::max(1.0, std::abs(mean)), ErrorCode::DegenerateDistribution, "scores have zero variance");
  return {mean, sd};
}

inline double normal_pdf(double x, const GaussianFit& f) {
  const double z = (x - f.mu) / f.sigma;
  return std::exp(-0.5 * z * z) / (f.sigma * std::sqrt(2.0 * std::numbers::pi));
}

inline double normal_cdf(double x, const GaussianFit& f) {
  return 0.5 * std::erfc(-(x - f.mu) / (f.sigma * std::numbers::sqrt2));
}

struct Overlap {
  double ol = 0.0;  // percent
  double c = 0.0;   // density intersection between the means
};

/// Point c in [mu1, mu2] where the two densities cross.
///
/// Equal variances give the midpoint. Otherwise the log-density equation is a
/// quadratic; its root inside (mu1, mu2) is used, falling back to bisection on
/// pdf1 - pdf2 (decreasing on the interval) when no root lies there.
inline double gaussian_intersection(const GaussianFit& s1, const GaussianFit& s2) {
  const double v1 = s1.sigma * s1.sigma;
  const double v2 = s2.sigma * s2.sigma;
  if (std::abs(v1 - v2) <= 1e-12 * std::max(v1, v2)) return 0.5 * (s1.mu + s2.mu);

  const double a = v2 - v1;
  const double b = -2.0 * (v2 * s1.mu - v1 * s2.mu);
  const double c = v2 * s1.mu * s1.mu - v1 * s2.mu * s2.mu + 2.0 * v1 * v2 * std::log(s1.sigma / s2.sigma);
  const double disc = b * b - 4.0 * a * c;
  if (disc >= 0.0) {
    const double sq = std::sqrt(disc);
    // Numerically stable pair of roots.
    const double q = -0.5 * (b + std::copysign(sq, b));
    const double r1 = q / a;
    const double r2 = q != 0.0 ? c / q : r1;
    for (double r : {r1, r2})
      if (r > s1.mu && r < s2.mu) return r;
  }

  auto diff = [&](double x) { return normal_pdf(x, s1) - normal_pdf(x, s2); };
  double lo = s1.mu;
  double hi = s2.mu;
  if (diff(lo) <= 0.0 || diff(hi) >= 0.0) return std::abs(diff(lo)) <= std::abs(diff(hi)) ? lo : hi;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (diff(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// OL = P(S1 > c) + P(S2 < c) for Gaussian fits of the imposter (S1) and
/// mated-SA-imposter (S2) scores, in percent.
inline Overlap overlap_area(const GaussianFit& s1, const GaussianFit& s2) {
  require(s1.sigma > 0.0 && s2.sigma > 0.0, ErrorCode::DegenerateDistribution, "Gaussian fit with sigma <= 0");
  const double scale = std::max({1.0, std::abs(s1.mu), std::abs(s2.mu)});
  const bool same_mean = std::abs(s1.mu - s2.mu) <= 1e-12 * scale;
  if (same_mean && std::abs(s1.sigma - s2.sigma) <= 1e-12 * std::max(s1.sigma, s2.sigma)) return {100.0, s1.mu};
  require(s1.mu < s2.mu && !same_mean, ErrorCode::MeanOrderViolation,
          "imposter mean " + std::to_string(s1.mu) + " is not below mated-SA-imposter mean " + std::to_string(s2.mu));
  const double c = gaussian_intersection(s1, s2);
  const double ol = (1.0 - normal_cdf(c, s1)) + normal_cdf(c, s2);
  return {100.0 * std::clamp(ol, 0.0, 1.0), c};
}

inline Overlap overlap_area(std::span<const double> imposter, std::span<const double> mated_sa_imposter) {
  return overlap_area(fit_gaussian(imposter), fit_gaussian(mated_sa_imposter));
}

/// Nonparametric overlap of two score samples on [0, 1]: sum of the bin-wise
/// minimum of the two normalized histograms, in percent.
inline double histogram_overlap(std::span<const double> a, std::span<const double> b, std::size_t bins = 50) {
  require(!a.empty() && !b.empty(), ErrorCode::EmptyScores, "histogram overlap of an empty sample");
  auto hist = [bins](std::span<const double> xs) {
    std::vector<double> h(bins, 0.0);
    for (double x : xs) {
      const auto k = static_cast<std::size_t>(std::clamp(x, 0.0, 1.0) * static_cast<double>(bins));
      h[std::min(k, bins - 1)] += 1.0 / static_cast<double>(xs.size());
    }
    return h;
  };
  const auto ha = hist(a);
  const auto hb = hist(b);
  double s = 0.0;
  for (std::size_t k = 0; k < bins; ++k) s += std::min(ha[k], hb[k]);
  return 100.0 * std::min(s, 1.0);
}

struct EvaluationResult {
  double theta = 0.0;
  double eer = 0.0;
  double far_at_et_normal = 0.0;
  std::optional<double> far_at_et_attack;
  std::optional<double> ol;
  std::optional<double> intersection_c;
  std::optional<double> histogram_ol;
  std::string ol_error;  // why ol is absent, when it is
};

/// Threshold from genuine/imposter, then FAR@ET of imposters (normal) and of
/// mated-SA-imposters (attack) plus the overlap of their distributions.
inline EvaluationResult evaluate(const ScoreSet& s) {
  EvaluationResult r;
  const auto eer = compute_eer_threshold(s.genuine, s.imposter);
  r.theta = eer.theta;
  r.eer = eer.eer;
  r.far_at_et_normal = far_at_threshold(s.imposter, r.theta);
  if (s.mated_sa_imposter.empty()) return r;
  r.far_at_et_attack = far_at_threshold(s.mated_sa_imposter, r.theta);
  r.histogram_ol = histogram_overlap(s.imposter, s.mated_sa_imposter);
  try {
    const auto o = overlap_area(s.imposter, s.mated_sa_imposter);
    r.ol = o.ol;
    r.intersection_c = o.c;
  } catch (const Error& e) {
    r.ol_error = std::string(to_string(e.code()));
  }
  return r;
}

}  // namespace cbsa
