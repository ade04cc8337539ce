#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "quantpool/grid.hpp"

namespace quantpool {

// A distributional forecast: one quantile value per grid level, nondecreasing
// and nonnegative. Instances are immutable once constructed, so they can be
// shared freely across threads.
class QuantileCurve {
 public:
  using Values = std::array<double, kNumLevels>;

  explicit QuantileCurve(const Values& values) : values_(values) {
    for (std::size_t i = 0; i < kNumLevels; ++i) {
      if (!(values_[i] >= 0.0)) {
        throw std::invalid_argument("quantile curve value at level index " +
                                    std::to_string(i) + " is negative or NaN");
      }
      if (i > 0 && values_[i] < values_[i - 1]) {
        throw std::invalid_argument(
            "quantile curve is not nondecreasing at level index " +
            std::to_string(i));
      }
    }
  }

  // Minimal monotone repair: sorting ascending is order-preserving on curves
  // that are already valid.
  static QuantileCurve sort_repair(Values values) {
    std::sort(values.begin(), values.end());
    return QuantileCurve(values);
  }

  const Values& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double at_level(double theta) const { return values_[level_index(theta)]; }
  double median() const { return values_[kMedianIndex]; }

  bool operator==(const QuantileCurve& other) const = default;

 private:
  Values values_;
};

// A central (1-alpha) interval forecast in deaths.
struct IntervalForecast {
  IntervalSpec spec;
  double lower;
  double upper;

  IntervalForecast(IntervalSpec s, double lo, double up)
      : spec(s), lower(lo), upper(up) {
    if (!(lower >= 0.0) || !(upper >= 0.0)) {
      throw std::invalid_argument("interval bounds must be nonnegative");
    }
    if (lower > upper) {
      throw std::invalid_argument("interval lower bound exceeds upper bound");
    }
  }

  double width() const { return upper - lower; }
};

enum class TeamCategory { kCompartmental, kOther };

enum class Target { kCumulativeDeaths };

// One team x location x origin week x horizon record.
struct ForecastSubmission {
  std::string team;
  TeamCategory category = TeamCategory::kOther;
  std::string location;
  int origin_week = 0;  // weeks since the week ending 2019-12-21
  int horizon = 1;      // 1..4 weeks ahead
  Target target = Target::kCumulativeDeaths;
  QuantileCurve curve;
  std::optional<double> point_forecast;

  int target_week() const { return origin_week + horizon; }
};

inline void validate_horizon(int horizon) {
  if (horizon < 1 || horizon > 4) {
    throw std::invalid_argument("horizon must lie in 1..4, got " +
                                std::to_string(horizon));
  }
}

// Observed weekly cumulative deaths for one location. Monotonicity is
// deliberately not enforced: reported cumulative counts get revised downward.
struct TruthSeries {
  std::string location;
  std::map<int, double> observations;  // week index -> cumulative deaths

  void add(int week, double value) {
    if (!(value >= 0.0)) {
      throw std::invalid_argument("truth value for week " +
                                  std::to_string(week) + " is negative");
    }
    auto [it, inserted] = observations.emplace(week, value);
    if (!inserted && it->second != value) {
      throw std::invalid_argument("conflicting truth values for location " +
                                  location + " week " + std::to_string(week));
    }
  }

  std::optional<double> at(int week) const {
    auto it = observations.find(week);
    if (it == observations.end()) return std::nullopt;
    return it->second;
  }
};

enum class MortalityGroup { kLow, kMedium, kHigh };

inline std::string group_name(MortalityGroup g) {
  switch (g) {
    case MortalityGroup::kLow: return "Low";
    case MortalityGroup::kMedium: return "Medium";
    case MortalityGroup::kHigh: return "High";
  }
  return "";
}

// Series grouping by final-week cumulative mortality. The boundaries are
// half-open so every value lands in exactly one group: [0,1000) low,
// [1000,10000) medium, [10000,inf) high.
inline MortalityGroup classify_group(const TruthSeries& truth,
                                     int final_week) {
  auto value = truth.at(final_week);
  if (!value) {
    throw std::runtime_error("truth series for location " + truth.location +
                             " has no observation at final week " +
                             std::to_string(final_week));
  }
  if (*value < 1000.0) return MortalityGroup::kLow;
  if (*value < 10000.0) return MortalityGroup::kMedium;
  return MortalityGroup::kHigh;
}

// Number of forecasts removed from EACH end for symmetric and exterior
// trimming: the largest integer <= (beta/2) * M. The small guard keeps
// decimal trim fractions on their intended integer boundaries (0.7/2*180 is
// 62.999... in binary floating point); the clamp preserves M - 2N >= 1 for
// beta pathologically close to 1.
inline int trim_count(double beta, int pool_size) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("trim fraction must lie in (0,1)");
  }
  if (pool_size < 1) throw std::invalid_argument("pool must be nonempty");
  int n = static_cast<int>(
      std::floor(beta / 2.0 * static_cast<double>(pool_size) + 1e-9));
  return std::min(n, (pool_size - 1) / 2);
}

// Number of forecasts KEPT on each end for interior trimming: the largest
// integer <= ((1-beta)/2) * M. May be zero for small pools and large beta;
// callers treat that as a degenerate trim.
inline int interior_keep_count(double beta, int pool_size) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("trim fraction must lie in (0,1)");
  }
  if (pool_size < 1) throw std::invalid_argument("pool must be nonempty");
  int n = static_cast<int>(std::floor(
      (1.0 - beta) / 2.0 * static_cast<double>(pool_size) + 1e-9));
  return std::min(n, pool_size / 2);
}

enum class TrimKind {
  kSymmetricBounds,
  kAsymExterior,
  kAsymInterior,
  kCaExterior,
  kCaInterior,
  kMaExterior,
  kMaInterior,
};

struct TrimSpec {
  double beta;
  TrimKind kind;
};

}  // namespace quantpool
