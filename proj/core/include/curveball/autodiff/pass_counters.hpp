#pragma once

#include <cstdint>

namespace curveball::autodiff {

/// Number of differentiation passes executed on the current thread.
///
/// primal:  objective evaluations (one recorded forward pass each)
/// tangent: forward-mode (JVP) passes
/// reverse: reverse-mode (VJP) passes
struct PassCounters {
  std::uint64_t primal = 0;
  std::uint64_t tangent = 0;
  std::uint64_t reverse = 0;

  friend PassCounters operator-(const PassCounters& a, const PassCounters& b) {
    return {a.primal - b.primal, a.tangent - b.tangent, a.reverse - b.reverse};
  }
  friend bool operator==(const PassCounters&, const PassCounters&) = default;
};

/// Thread-local counters. Each experiment run executes on one thread, so
/// differences of snapshots give per-run or per-step counts.
PassCounters& pass_counters();

}  // namespace curveball::autodiff
