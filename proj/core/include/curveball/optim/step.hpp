#pragma once

#include <limits>

namespace curveball::optim {

inline constexpr double kNotComputed = std::numeric_limits<double>::quiet_NaN();

/// What one optimizer step reports. Fields an optimizer does not use stay NaN.
struct StepInfo {
  double loss = kNotComputed;       ///< objective on the step's batch, before the update
  double step_norm = 0.0;           ///< |w_new - w|
  double beta = kNotComputed;
  double rho = kNotComputed;
  double lambda = kNotComputed;
  double gamma = kNotComputed;
  bool rejected = false;            ///< step discarded or optimizer state reset
};

}  // namespace curveball::optim
