#pragma once

#include <cstddef>
#include <span>

namespace curveball::bench {

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1). Zero for fewer than two values.
double sample_std(std::span<const double> values);
/// Median of a copy; the mean of the middle pair for even counts. NaN when empty.
double median(std::span<const double> values);

/// Table-1 style statistics over converged runs only.
struct Summary {
  double mean_iterations = 0.0;
  double std_iterations = 0.0;
  std::size_t converged = 0;
  std::size_t total = 0;

  double convergence_rate() const {
    return total == 0 ? 0.0 : static_cast<double>(converged) / static_cast<double>(total);
  }
};

}  // namespace curveball::bench
