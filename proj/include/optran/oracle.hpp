#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "optran/transport.hpp"

namespace optran {

/// Raised when an instance cannot be posed exactly (non-integral scaled
/// masses, supply/demand mismatch, oversized enumeration).
struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PlanEntry {
  int terminal = 0;
  int station = 0;
  double mass = 0.0;
};

struct OracleResult {
  double cost = 0.0;                       // in original (unscaled) units
  std::vector<PlanEntry> plan;             // positive-mass entries only
  bool integral = false;                   // every terminal sent to one station
  std::vector<double> station_potentials;  // duals; heights h_j = potentials[j]
                                           // make every assigned terminal power-closest

  /// Whole-terminal assignment view; only available when integral.
  std::optional<Assignment> as_assignment(std::span<const Terminal> terminals,
                                          std::span<const Point> stations,
                                          double alpha) const;
};

/// Globally optimal transport plan by successive-shortest-path min-cost flow
/// on integer-scaled masses. With unit masses and integer capacities the plan
/// is integral.
OracleResult exact_assignment(std::span<const Terminal> terminals,
                              std::span<const Point> stations,
                              std::span<const double> caps, double alpha,
                              std::int64_t scale = 1000000);

struct BruteForceResult {
  Assignment assignment;
  double cost = 0.0;
};

/// Exhaustive minimum over all capacity-feasible whole-terminal assignments.
/// Requires equal masses, integer scaled capacities, and at most ~1e7
/// distinct assignments.
BruteForceResult brute_force_enumerate(std::span<const Terminal> terminals,
                                       std::span<const Point> stations,
                                       std::span<const double> caps, double alpha);

}  // namespace optran
