#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "quantpool/stats.hpp"
#include "quantpool/types.hpp"

namespace quantpool {

// A pool of member quantile curves for one (location, origin, horizon) slot.
class CurvePool {
 public:
  explicit CurvePool(std::vector<QuantileCurve> members)
      : members_(std::move(members)) {
    if (members_.empty()) {
      throw std::invalid_argument("curve pool must be nonempty");
    }
  }

  int size() const { return static_cast<int>(members_.size()); }
  const std::vector<QuantileCurve>& members() const { return members_; }

  // Values of all members at one grid level, in member order.
  std::vector<double> level_values(std::size_t level) const {
    std::vector<double> v;
    v.reserve(members_.size());
    for (const auto& m : members_) v.push_back(m[level]);
    return v;
  }

 private:
  std::vector<QuantileCurve> members_;
};

namespace detail {

// The per-member location surrogate used by the whole-forecast (MA) trims:
// the average of the member's 23 quantile values. A valid curve is already
// sorted ascending, so summing in index order keeps the summation-order
// contract shared by every mean in this library.
inline double surrogate_mean(const QuantileCurve& curve) {
  double sum = 0.0;
  for (double v : curve.values()) sum += v;
  return sum / static_cast<double>(kNumLevels);
}

// Member indices ordered by surrogate mean. stable_sort keeps pool order on
// ties, which pins down results when members coincide.
inline std::vector<std::size_t> order_by_surrogate(const CurvePool& pool) {
  std::vector<std::size_t> idx(pool.members().size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> keys(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    keys[i] = surrogate_mean(pool.members()[i]);
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return idx;
}

// Elementwise mean across a member subset, each level summed in value order.
inline QuantileCurve mean_of_members(const CurvePool& pool,
                                     const std::vector<std::size_t>& subset) {
  QuantileCurve::Values out{};
  std::vector<double> values(subset.size());
  for (std::size_t level = 0; level < kNumLevels; ++level) {
    for (std::size_t k = 0; k < subset.size(); ++k) {
      values[k] = pool.members()[subset[k]][level];
    }
    std::sort(values.begin(), values.end());
    out[level] = mean_of_sorted_range(values, 0, values.size());
  }
  return QuantileCurve(out);
}

[[noreturn]] inline void throw_degenerate_interior(double beta, int m) {
  throw std::invalid_argument(
      "interior trim is degenerate: keep count is zero for beta " +
      std::to_string(beta) + " on a pool of " + std::to_string(m) +
      " members");
}

}  // namespace detail

// Levelwise simple average. The mean of nondecreasing vectors is
// nondecreasing, so the result is always a valid curve.
inline QuantileCurve agg_curve_mean(const CurvePool& pool) {
  QuantileCurve::Values out{};
  for (std::size_t level = 0; level < kNumLevels; ++level) {
    out[level] = sorted_mean(pool.level_values(level));
  }
  return QuantileCurve(out);
}

// Levelwise sample median, which coincides with the median taken in CDF
// space (Hora's result); the test suite checks that equivalence against a
// step-CDF oracle.
inline QuantileCurve agg_curve_median(const CurvePool& pool) {
  QuantileCurve::Values out{};
  for (std::size_t level = 0; level < kNumLevels; ++level) {
    out[level] = sample_median(pool.level_values(level));
  }
  return QuantileCurve(out);
}

// CDF-approach exterior trim: at each level independently, drop the N lowest
// and N highest values, N = trim_count(beta, M), and average the rest. The
// retained order-statistic ranks are fixed across levels, so monotonicity is
// preserved.
inline QuantileCurve agg_ca_exterior(const CurvePool& pool, double beta) {
  const auto n = static_cast<std::size_t>(trim_count(beta, pool.size()));
  QuantileCurve::Values out{};
  for (std::size_t level = 0; level < kNumLevels; ++level) {
    std::vector<double> values = pool.level_values(level);
    std::sort(values.begin(), values.end());
    out[level] = mean_of_sorted_range(values, n, values.size() - n);
  }
  return QuantileCurve(out);
}

// CDF-approach interior trim: at each level, keep only the N lowest and N
// highest values, N = interior_keep_count(beta, M), and average those 2N.
// N = 0 means the pool is too small for the requested beta; that is a hard
// error rather than a silent fallback.
inline QuantileCurve agg_ca_interior(const CurvePool& pool, double beta) {
  const int n = interior_keep_count(beta, pool.size());
  if (n == 0) detail::throw_degenerate_interior(beta, pool.size());
  const auto keep = static_cast<std::size_t>(n);
  const auto m = static_cast<std::size_t>(pool.size());
  assert(2 * keep <= m);
  QuantileCurve::Values out{};
  for (std::size_t level = 0; level < kNumLevels; ++level) {
    std::vector<double> values = pool.level_values(level);
    std::sort(values.begin(), values.end());
    std::vector<double> kept;
    kept.reserve(2 * keep);
    kept.insert(kept.end(), values.begin(), values.begin() + keep);
    kept.insert(kept.end(), values.end() - keep, values.end());
    out[level] = mean_of_sorted_range(kept, 0, kept.size());
  }
  return QuantileCurve(out);
}

// Mean-approach exterior trim: rank whole members by surrogate mean, drop the
// N lowest-mean and N highest-mean members, and average the survivors
// elementwise.
inline QuantileCurve agg_ma_exterior(const CurvePool& pool, double beta) {
  const auto n = static_cast<std::size_t>(trim_count(beta, pool.size()));
  auto order = detail::order_by_surrogate(pool);
  std::vector<std::size_t> kept(order.begin() + n, order.end() - n);
  return detail::mean_of_members(pool, kept);
}

// Mean-approach interior trim: keep the N lowest-mean and N highest-mean
// members, N = interior_keep_count(beta, M), and average those elementwise.
// When 2N = M every member survives and the result is the plain mean.
inline QuantileCurve agg_ma_interior(const CurvePool& pool, double beta) {
  const int n = interior_keep_count(beta, pool.size());
  if (n == 0) detail::throw_degenerate_interior(beta, pool.size());
  const auto keep = static_cast<std::size_t>(n);
  auto order = detail::order_by_surrogate(pool);
  assert(2 * keep <= order.size());
  std::vector<std::size_t> kept;
  kept.reserve(2 * keep);
  kept.insert(kept.end(), order.begin(), order.begin() + keep);
  kept.insert(kept.end(), order.end() - keep, order.end());
  return detail::mean_of_members(pool, kept);
}

// Dispatch by trim descriptor for the four curve-trimming families.
inline QuantileCurve agg_trim(const CurvePool& pool, TrimSpec spec) {
  switch (spec.kind) {
    case TrimKind::kCaExterior: return agg_ca_exterior(pool, spec.beta);
    case TrimKind::kCaInterior: return agg_ca_interior(pool, spec.beta);
    case TrimKind::kMaExterior: return agg_ma_exterior(pool, spec.beta);
    case TrimKind::kMaInterior: return agg_ma_interior(pool, spec.beta);
    default:
      throw std::invalid_argument(
          "trim kind operates on interval bounds, not whole curves");
  }
}

// Extracts the central (1-alpha) interval from a curve by grid lookup.
inline IntervalForecast curve_to_interval(const QuantileCurve& curve,
                                          IntervalSpec spec) {
  return IntervalForecast(spec, curve[spec.lower_index()],
                          curve[spec.upper_index()]);
}

}  // namespace quantpool
