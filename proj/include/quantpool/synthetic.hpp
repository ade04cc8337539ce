#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "quantpool/curve_agg.hpp"
#include "quantpool/rng.hpp"
#include "quantpool/scoring.hpp"
#include "quantpool/types.hpp"

namespace quantpool {

// Parameterized artificial forecaster crowd with known ground truth. Each
// forecaster reports the truth distribution's quantile function, shifted by a
// personal bias and widened or narrowed by a personal scale multiplier:
// multipliers above one make the crowd underconfident (intervals too wide),
// below one overconfident. A fraction of member curves are replaced by
// outliers shifted far from the truth.
struct CrowdSpec {
  int crowd_size = 10;
  LogisticDistribution truth{1000.0, 50.0};
  double bias_mean = 0.0;
  double bias_scale = 0.0;        // logistic scale of per-forecaster offsets
  double confidence_center = 1.0; // multiplier when confidence_log_scale = 0
  double confidence_log_scale = 0.0;
  double outlier_rate = 0.0;      // fraction of (member, period) slots
  double outlier_shift = 500.0;   // magnitude of the outlier offset
  std::uint64_t seed = 0;
  std::string location = "US";
  int first_week = 19;            // week index of the first period

  void validate() const {
    if (crowd_size < 1) throw std::invalid_argument("crowd_size must be >= 1");
    if (!(truth.scale > 0.0)) {
      throw std::invalid_argument("truth scale must be positive");
    }
    if (!(outlier_rate >= 0.0 && outlier_rate < 1.0)) {
      throw std::invalid_argument("outlier_rate must lie in [0,1)");
    }
    if (!(confidence_center > 0.0)) {
      throw std::invalid_argument("confidence multiplier must be positive");
    }
  }
};

struct SyntheticCrowd {
  std::vector<CurvePool> pools;  // one pool per period
  TruthSeries truth;             // one observation per period
  int first_week = 0;

  int week_of_period(std::size_t period) const {
    return first_week + static_cast<int>(period);
  }
};

namespace detail {

struct ForecasterTraits {
  double bias;
  double multiplier;
};

// Each forecaster's stream draws its traits first and then two draws per
// period (outlier flag, outlier sign), in that fixed order. Draws are
// consumed even when a parameter is degenerate so that turning a knob never
// shifts the rest of the stream.
inline ForecasterTraits draw_traits(const CrowdSpec& spec, SplitMix64& rng) {
  ForecasterTraits t{};
  const double u_bias = rng.next_open01();
  const double u_conf = rng.next_open01();
  t.bias = spec.bias_mean;
  if (spec.bias_scale > 0.0) {
    t.bias += spec.bias_scale * std::log(u_bias / (1.0 - u_bias));
  }
  t.multiplier = spec.confidence_center;
  if (spec.confidence_log_scale > 0.0) {
    t.multiplier *= std::exp(spec.confidence_log_scale *
                             std::log(u_conf / (1.0 - u_conf)));
  }
  return t;
}

// Written so that a neutral forecaster (zero bias and offset, unit
// multiplier) reproduces the truth quantiles bit for bit.
inline QuantileCurve member_curve(const CrowdSpec& spec,
                                  const ForecasterTraits& traits,
                                  double outlier_offset) {
  QuantileCurve::Values values{};
  const double center = spec.truth.location;
  for (std::size_t i = 0; i < kNumLevels; ++i) {
    const double base = spec.truth.quantile(kProbabilityLevels[i]);
    const double v = base + traits.bias + outlier_offset +
                     (traits.multiplier - 1.0) * (base - center);
    values[i] = std::max(0.0, v);
  }
  return QuantileCurve(values);
}

}  // namespace detail

// Builds one pool per period plus the matching truth series, fully
// deterministic for a given seed.
inline SyntheticCrowd generate_crowd(const CrowdSpec& spec, int n_periods) {
  spec.validate();
  if (n_periods < 1) throw std::invalid_argument("n_periods must be >= 1");

  SplitMix64 truth_stream = derive_stream(spec.seed, 0);
  TruthSeries truth;
  truth.location = spec.location;
  for (int p = 0; p < n_periods; ++p) {
    const double draw = spec.truth.sample(truth_stream);
    truth.add(spec.first_week + p, std::round(std::max(0.0, draw)));
  }

  // Curves per member first (each member owns one stream), then regrouped
  // into per-period pools.
  std::vector<std::vector<QuantileCurve>> by_member(
      static_cast<std::size_t>(spec.crowd_size));
  for (int m = 0; m < spec.crowd_size; ++m) {
    SplitMix64 stream =
        derive_stream(spec.seed, static_cast<std::uint64_t>(m) + 1);
    const auto traits = detail::draw_traits(spec, stream);
    auto& curves = by_member[static_cast<std::size_t>(m)];
    curves.reserve(static_cast<std::size_t>(n_periods));
    for (int p = 0; p < n_periods; ++p) {
      const bool outlier = stream.next_open01() < spec.outlier_rate;
      const double sign = stream.next_open01() < 0.5 ? -1.0 : 1.0;
      const double offset = outlier ? sign * spec.outlier_shift : 0.0;
      curves.push_back(detail::member_curve(spec, traits, offset));
    }
  }

  SyntheticCrowd crowd{.pools = {}, .truth = std::move(truth),
                       .first_week = spec.first_week};
  crowd.pools.reserve(static_cast<std::size_t>(n_periods));
  for (int p = 0; p < n_periods; ++p) {
    std::vector<QuantileCurve> members;
    members.reserve(static_cast<std::size_t>(spec.crowd_size));
    for (int m = 0; m < spec.crowd_size; ++m) {
      members.push_back(
          by_member[static_cast<std::size_t>(m)][static_cast<std::size_t>(p)]);
    }
    crowd.pools.emplace_back(std::move(members));
  }
  return crowd;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Empirical mean of an arbitrary score under repeated truth draws, with the
// standard error of the mean alongside. Used to estimate expected scores
// when the truth distribution is known.
template <typename Scorer>
MonteCarloEstimate monte_carlo_score(const LogisticDistribution& truth,
                                     int n_draws, std::uint64_t seed,
                                     Scorer&& score_of) {
  if (n_draws < 1) throw std::invalid_argument("n_draws must be >= 1");
  SplitMix64 rng = derive_stream(seed, 0);
  double mean = 0.0;
  double m2 = 0.0;
  for (int i = 1; i <= n_draws; ++i) {
    const double y = truth.sample(rng);
    const double s = score_of(y);
    const double d1 = s - mean;
    mean += d1 / static_cast<double>(i);
    m2 += d1 * (s - mean);
  }
  const double variance =
      n_draws > 1 ? m2 / static_cast<double>(n_draws - 1) : 0.0;
  return MonteCarloEstimate{
      mean, std::sqrt(variance / static_cast<double>(n_draws))};
}

inline MonteCarloEstimate expected_crps(const QuantileCurve& curve,
                                        const LogisticDistribution& truth,
                                        int n_draws, std::uint64_t seed) {
  return monte_carlo_score(truth, n_draws, seed,
                           [&](double y) { return crps_23(curve, y); });
}

}  // namespace quantpool
