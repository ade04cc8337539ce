#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "quantpool/grid.hpp"
#include "quantpool/types.hpp"

namespace quantpool {

// Consistent score for a theta-quantile forecast q against observation y:
//   (theta - 1{y <= q}) * (y - q)
// Nonnegative, zero exactly when y = q, and minimized in expectation by the
// true quantile.
inline double quantile_score(double theta, double q, double y) {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw std::invalid_argument("quantile level must lie in (0,1)");
  }
  const double indicator = (y <= q) ? 1.0 : 0.0;
  return (theta - indicator) * (y - q);
}

// Winkler's interval score for a central (1-alpha) interval [l, u]:
// width plus a one-sided penalty of (2/alpha) times the amount by which the
// observation escapes the interval. Equals the sum of the two bound quantile
// scores divided by alpha/2.
inline double interval_score(double alpha, double lower, double upper,
                             double y) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("interval alpha must lie in (0,1)");
  }
  if (lower > upper) {
    throw std::invalid_argument(
        "interval score requires lower <= upper; aggregation should have "
        "repaired crossing bounds");
  }
  double score = upper - lower;
  if (y <= lower) score += (2.0 / alpha) * (lower - y);
  if (y >= upper) score += (2.0 / alpha) * (y - upper);
  return score;
}

// CRPS approximated on the 23-level grid: the sum of the quantile scores of
// all 23 quantile forecasts. Also expressible as the median quantile score
// plus the weighted sum of the 11 central interval scores; the tests verify
// that decomposition.
inline double crps_23(const QuantileCurve& curve, double y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumLevels; ++i) {
    sum += quantile_score(kProbabilityLevels[i], curve[i], y);
  }
  return sum;
}

inline double mae(std::span<const double> point_forecasts,
                  std::span<const double> observations) {
  if (point_forecasts.empty() || point_forecasts.size() != observations.size()) {
    throw std::invalid_argument("MAE needs equal, nonempty input lists");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < point_forecasts.size(); ++i) {
    sum += std::fabs(point_forecasts[i] - observations[i]);
  }
  return sum / static_cast<double>(point_forecasts.size());
}

// Percentage of observations falling at or below the quantile forecast.
// Ties count as hits, matching the indicator in the quantile score. A
// calibrated theta-quantile forecast scores close to 100 * theta.
inline double hit_percentage(std::span<const double> quantile_forecasts,
                             std::span<const double> observations) {
  if (quantile_forecasts.empty() ||
      quantile_forecasts.size() != observations.size()) {
    throw std::invalid_argument(
        "hit percentage needs equal, nonempty input lists");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < quantile_forecasts.size(); ++i) {
    if (observations[i] <= quantile_forecasts[i]) ++hits;
  }
  return 100.0 * static_cast<double>(hits) /
         static_cast<double>(quantile_forecasts.size());
}

// One (method, benchmark) score pair for a single series.
struct ScorePair {
  double method_score;
  double benchmark_score;
};

struct SkillResult {
  double skill_pct;      // 100 * (1 - geometric mean of score ratios)
  int excluded_series;   // series dropped because either score was zero
};

// Skill versus a benchmark: geometric mean of the per-series score ratios,
// subtracted from one, times 100. Positive means better than the benchmark.
// A zero score on either side makes the ratio degenerate; such series are
// excluded and counted so callers can surface a warning.
inline SkillResult skill_score(std::span<const ScorePair> pairs) {
  if (pairs.empty()) {
    throw std::invalid_argument("skill score needs at least one series");
  }
  double log_sum = 0.0;
  int used = 0;
  int excluded = 0;
  for (const auto& p : pairs) {
    if (p.method_score < 0.0 || p.benchmark_score < 0.0) {
      throw std::invalid_argument("scores must be nonnegative");
    }
    if (p.method_score == 0.0 || p.benchmark_score == 0.0) {
      ++excluded;
      continue;
    }
    log_sum += std::log(p.method_score / p.benchmark_score);
    ++used;
  }
  if (used == 0) {
    throw std::runtime_error(
        "skill score undefined: every series had a zero score");
  }
  const double geo_mean = std::exp(log_sum / static_cast<double>(used));
  return SkillResult{100.0 * (1.0 - geo_mean), excluded};
}

// Competition ranking by ascending mean score: ties share the smaller rank
// and the following ranks are skipped ("1,1,3").
inline std::map<std::string, int> rank_methods(
    const std::map<std::string, double>& mean_scores) {
  if (mean_scores.empty()) {
    throw std::invalid_argument("cannot rank an empty method set");
  }
  std::map<std::string, int> ranks;
  for (const auto& [method, score] : mean_scores) {
    int better = 0;
    for (const auto& [other, other_score] : mean_scores) {
      (void)other;
      if (other_score < score) ++better;
    }
    ranks[method] = better + 1;
  }
  return ranks;
}

// A single scored slot, tagged with where it came from. The harness gathers
// these and reduces them into tables.
struct ScoreSample {
  double value = 0.0;
  std::string location;
  int origin_week = 0;
  int horizon = 0;
  std::string method;
};

}  // namespace quantpool
