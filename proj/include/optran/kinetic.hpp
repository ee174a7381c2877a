#pragma once

#include <span>
#include <utility>
#include <vector>

#include "optran/transport.hpp"

namespace optran {

/// Motion model for a terminal or station over normalized time t in [0, 1].
struct Trajectory {
  enum class Kind { Static, Linear, Waypoints };

  Kind kind = Kind::Static;
  Point from{};  // Linear: position at t=0
  Point to{};    // Linear: position at t=1
  std::vector<std::pair<double, Point>> waypoints;  // strictly increasing times

  Point eval(double t) const;

  static Trajectory fixed() { return {}; }
  static Trajectory linear(Point p, Point q) {
    Trajectory tr;
    tr.kind = Kind::Linear;
    tr.from = p;
    tr.to = q;
    return tr;
  }
};

struct MovingTerminal {
  Point position;  // at t = 0
  double mass = 0.0;
  Trajectory trajectory;
};

struct MovingStation {
  Point position;  // at t = 0
  double cap = 0.0;
  Trajectory trajectory;
};

struct Scenario {
  ConvexPolygon domain;
  std::vector<MovingStation> stations;
  std::vector<MovingTerminal> terminals;
  int snapshots = 1;
  double tolerance = 0.0;  // fractional overload allowed before re-clustering
  SolverConfig solver;
};

struct SnapshotPositions {
  std::vector<Point> terminals;
  std::vector<Point> stations;
};

/// Every trajectory evaluated at t in [0, 1]; throws on out-of-range t.
SnapshotPositions snapshot_at(const Scenario& scenario, double t);

struct SnapshotResult {
  double t = 0.0;
  std::vector<double> heights;
  Assignment assignment;
  SolveTrace trace;
  bool resolved = false;       // solver ran (vs. previous clustering kept)
  int changed_terminals = 0;   // owners differing from the previous snapshot
  double max_overload = 0.0;   // max_j loads_j / cap_j - 1
  double wall_ms = 0.0;        // nondeterministic, reporting only
};

struct KineticOptions {
  bool warm_start = true;  // reuse the previous snapshot's final heights
};

/// Snapshot 0 solves cold; later snapshots either keep the carried-over
/// clustering (when every load stays within (1+tolerance)*cap) or re-solve,
/// warm-started from the previous heights.
std::vector<SnapshotResult> kinetic_solve(const Scenario& scenario,
                                          const KineticOptions& options = {});

struct ChangeCounts {
  long total = 0;
  std::vector<int> per_snapshot;
};

ChangeCounts count_changes(std::span<const SnapshotResult> results);

}  // namespace optran
