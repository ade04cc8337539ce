#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace quantpool {

// Every distributional forecast in this library lives on the same fixed grid
// of 23 probability levels. The grid is symmetric about 0.50: level j and
// level 22-j always sum to one, so the levels below the median pair off into
// eleven central intervals plus the median itself.
inline constexpr std::size_t kNumLevels = 23;

inline constexpr std::array<double, kNumLevels> kProbabilityLevels = {
    0.01, 0.025, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50,
    0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 0.975, 0.99};

inline constexpr std::size_t kMedianIndex = 11;
inline constexpr std::size_t kNumCentralPairs = 11;

// Grid lookup with an absolute tolerance far below the smallest level
// spacing (0.005), so decimal text like "0.025" always lands on its level.
inline std::optional<std::size_t> find_level(double theta) {
  constexpr double tol = 1e-9;
  for (std::size_t i = 0; i < kNumLevels; ++i) {
    if (std::fabs(theta - kProbabilityLevels[i]) < tol) return i;
  }
  return std::nullopt;
}

inline std::size_t level_index(double theta) {
  if (auto i = find_level(theta)) return *i;
  throw std::invalid_argument("probability level " + std::to_string(theta) +
                              " is not on the 23-level grid");
}

inline bool on_grid(double theta) { return find_level(theta).has_value(); }

// A central (1-alpha) interval, bounded by the alpha/2 and 1-alpha/2
// quantiles. Both bounds must be grid levels, which admits exactly the
// eleven alphas formed by the symmetric level pairs (0.05 and 0.50 are the
// two used for reporting).
class IntervalSpec {
 public:
  explicit IntervalSpec(double alpha)
      : alpha_(alpha),
        lower_index_(level_index(alpha / 2.0)),
        upper_index_(level_index(1.0 - alpha / 2.0)) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw std::invalid_argument("interval alpha must lie in (0,1)");
    }
  }

  double alpha() const { return alpha_; }
  std::size_t lower_index() const { return lower_index_; }
  std::size_t upper_index() const { return upper_index_; }

  // Nominal coverage as a percent, e.g. 95 for alpha = 0.05.
  int coverage_percent() const {
    return static_cast<int>(std::lround((1.0 - alpha_) * 100.0));
  }

 private:
  double alpha_;
  std::size_t lower_index_;
  std::size_t upper_index_;
};

}  // namespace quantpool
