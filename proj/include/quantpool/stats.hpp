#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace quantpool {

// Every mean in the aggregation code runs over value-sorted inputs, summed
// left to right. Fixing the summation order this way makes a trimmed mean
// with zero trim bit-identical to the plain average, and lets reference
// implementations in tests reproduce results exactly.

inline double mean_of_sorted_range(const std::vector<double>& sorted,
                                   std::size_t first, std::size_t last) {
  if (first >= last || last > sorted.size()) {
    throw std::invalid_argument("empty or out-of-range mean");
  }
  // All-equal ranges return the value itself, so averaging is exactly
  // idempotent (a running sum of n copies of v need not round back to n*v).
  if (sorted[first] == sorted[last - 1]) return sorted[first];
  double sum = 0.0;
  for (std::size_t i = first; i < last; ++i) sum += sorted[i];
  return sum / static_cast<double>(last - first);
}

inline double sorted_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return mean_of_sorted_range(values, 0, values.size());
}

// Sample median of a pre-sorted vector; even sizes take the mean of the two
// central order statistics.
inline double median_of_sorted(const std::vector<double>& sorted) {
  const std::size_t n = sorted.size();
  if (n == 0) throw std::invalid_argument("median of empty sample");
  if (n % 2 == 1) return sorted[n / 2];
  return (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
}

inline double sample_median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return median_of_sorted(values);
}

}  // namespace quantpool
