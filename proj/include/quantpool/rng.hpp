#pragma once

#include <cmath>
#include <cstdint>

namespace quantpool {

// SplitMix64: tiny, portable, and plenty for simulation fixtures. All draws
// in this library go through it so corpora are reproducible bit for bit on
// any platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform draw strictly inside (0,1): 53 significant bits, offset by half
  // a step so neither endpoint is reachable.
  double next_open01() {
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Derives an independent child stream from a master seed. Forecaster m uses
// stream id m + 1 and the truth process uses stream id 0, so enlarging a
// crowd never perturbs the draws of existing members.
inline SplitMix64 derive_stream(std::uint64_t seed, std::uint64_t stream_id) {
  SplitMix64 mixer(seed ^ (0x9E3779B97F4A7C15ULL * (stream_id + 1)));
  return SplitMix64(mixer.next_u64());
}

// Location-scale logistic distribution. The closed-form quantile function
// keeps sampling free of any libm special functions beyond log/exp.
struct LogisticDistribution {
  double location = 0.0;
  double scale = 1.0;

  double quantile(double p) const {
    return location + scale * std::log(p / (1.0 - p));
  }

  double cdf(double x) const {
    return 1.0 / (1.0 + std::exp(-(x - location) / scale));
  }

  double sample(SplitMix64& rng) const { return quantile(rng.next_open01()); }
};

}  // namespace quantpool
