#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "quantpool/stats.hpp"
#include "quantpool/types.hpp"

namespace quantpool {

// A pool of member interval forecasts for one (location, origin, horizon)
// slot. Each bound of the interval is aggregated separately.
class IntervalPool {
 public:
  IntervalPool(IntervalSpec spec, std::vector<double> lowers,
               std::vector<double> uppers)
      : spec_(spec), lowers_(std::move(lowers)), uppers_(std::move(uppers)) {
    if (lowers_.empty() || lowers_.size() != uppers_.size()) {
      throw std::invalid_argument(
          "interval pool needs equal, nonempty bound lists");
    }
    for (std::size_t i = 0; i < lowers_.size(); ++i) {
      if (!(lowers_[i] >= 0.0) || !(uppers_[i] >= 0.0)) {
        throw std::invalid_argument("interval pool bounds must be nonnegative");
      }
      if (lowers_[i] > uppers_[i]) {
        throw std::invalid_argument("member " + std::to_string(i) +
                                    " has lower bound above upper bound");
      }
    }
  }

  static IntervalPool from_curves(const std::vector<QuantileCurve>& curves,
                                  IntervalSpec spec) {
    std::vector<double> lowers, uppers;
    lowers.reserve(curves.size());
    uppers.reserve(curves.size());
    for (const auto& c : curves) {
      lowers.push_back(c[spec.lower_index()]);
      uppers.push_back(c[spec.upper_index()]);
    }
    return IntervalPool(spec, std::move(lowers), std::move(uppers));
  }

  IntervalSpec spec() const { return spec_; }
  int size() const { return static_cast<int>(lowers_.size()); }
  const std::vector<double>& lowers() const { return lowers_; }
  const std::vector<double>& uppers() const { return uppers_; }

 private:
  IntervalSpec spec_;
  std::vector<double> lowers_;
  std::vector<double> uppers_;
};

// Per-bound simple average.
inline IntervalForecast agg_simple_average(const IntervalPool& pool) {
  return IntervalForecast(pool.spec(), sorted_mean(pool.lowers()),
                          sorted_mean(pool.uppers()));
}

// The hub-style ensemble is the simple average applied to a pool restricted
// to ensemble-eligible members; the restriction happens where the pool is
// built, so the aggregation rule itself is identical.
inline IntervalForecast agg_ensemble(const IntervalPool& pool) {
  return agg_simple_average(pool);
}

// Per-bound sample median.
inline IntervalForecast agg_median(const IntervalPool& pool) {
  return IntervalForecast(pool.spec(), sample_median(pool.lowers()),
                          sample_median(pool.uppers()));
}

// Per bound independently: drop the N lowest and N highest values,
// N = trim_count(beta, M), and average the rest. N = 0 reduces to the
// simple average, bit for bit.
inline IntervalForecast agg_symmetric_trim(const IntervalPool& pool,
                                           double beta) {
  const int n = trim_count(beta, pool.size());
  auto trimmed = [&](std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return mean_of_sorted_range(values, static_cast<std::size_t>(n),
                                values.size() - static_cast<std::size_t>(n));
  };
  return IntervalForecast(pool.spec(), trimmed(pool.lowers()),
                          trimmed(pool.uppers()));
}

// Exterior trim: drop the N lowest-valued lower bounds and the N
// highest-valued upper bounds, then average each side. The trimming can push
// the lower mean above the upper mean, in which case both bounds collapse to
// their midpoint (a zero-width interval).
inline IntervalForecast agg_asym_exterior_trim(const IntervalPool& pool,
                                               double beta) {
  const auto n = static_cast<std::size_t>(trim_count(beta, pool.size()));
  std::vector<double> lowers = pool.lowers();
  std::vector<double> uppers = pool.uppers();
  std::sort(lowers.begin(), lowers.end());
  std::sort(uppers.begin(), uppers.end());
  double lo = mean_of_sorted_range(lowers, n, lowers.size());
  double up = mean_of_sorted_range(uppers, 0, uppers.size() - n);
  if (lo > up) {
    const double mid = (lo + up) / 2.0;
    lo = up = mid;
  }
  return IntervalForecast(pool.spec(), lo, up);
}

// Interior trim: drop the N highest-valued lower bounds and the N
// lowest-valued upper bounds, then average each side. Widens the interval;
// the result is ordered because each retained lower mean can only fall and
// each retained upper mean can only rise relative to the plain averages.
inline IntervalForecast agg_asym_interior_trim(const IntervalPool& pool,
                                               double beta) {
  const auto n = static_cast<std::size_t>(trim_count(beta, pool.size()));
  std::vector<double> lowers = pool.lowers();
  std::vector<double> uppers = pool.uppers();
  std::sort(lowers.begin(), lowers.end());
  std::sort(uppers.begin(), uppers.end());
  const double lo = mean_of_sorted_range(lowers, 0, lowers.size() - n);
  const double up = mean_of_sorted_range(uppers, n, uppers.size());
  return IntervalForecast(pool.spec(), lo, up);
}

// Widest aggregate: lowest lower bound to highest upper bound.
inline IntervalForecast agg_envelope(const IntervalPool& pool) {
  const double lo = *std::min_element(pool.lowers().begin(),
                                      pool.lowers().end());
  const double up = *std::max_element(pool.uppers().begin(),
                                      pool.uppers().end());
  return IntervalForecast(pool.spec(), lo, up);
}

// Dispatch by trim descriptor for the three bound-trimming families.
inline IntervalForecast agg_trim(const IntervalPool& pool, TrimSpec spec) {
  switch (spec.kind) {
    case TrimKind::kSymmetricBounds:
      return agg_symmetric_trim(pool, spec.beta);
    case TrimKind::kAsymExterior:
      return agg_asym_exterior_trim(pool, spec.beta);
    case TrimKind::kAsymInterior:
      return agg_asym_interior_trim(pool, spec.beta);
    default:
      throw std::invalid_argument(
          "trim kind operates on whole curves, not interval bounds");
  }
}

}  // namespace quantpool
