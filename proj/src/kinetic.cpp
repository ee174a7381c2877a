#include "optran/kinetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace optran {

Point Trajectory::eval(double t) const {
  switch (kind) {
    case Kind::Static:
      return from;
    case Kind::Linear:
      return from + t * (to - from);
    case Kind::Waypoints: {
      if (waypoints.empty()) return from;
      if (t <= waypoints.front().first) return waypoints.front().second;
      if (t >= waypoints.back().first) return waypoints.back().second;
      for (size_t s = 1; s < waypoints.size(); ++s) {
        if (t <= waypoints[s].first) {
          const auto& [t0, p0] = waypoints[s - 1];
          const auto& [t1, p1] = waypoints[s];
          const double u = (t - t0) / (t1 - t0);
          return p0 + u * (p1 - p0);
        }
      }
      return waypoints.back().second;
    }
  }
  return from;
}

SnapshotPositions snapshot_at(const Scenario& scenario, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    std::ostringstream msg;
    msg << "snapshot time " << t << " outside [0, 1]";
    throw std::invalid_argument(msg.str());
  }
  SnapshotPositions out;
  out.terminals.reserve(scenario.terminals.size());
  for (const MovingTerminal& m : scenario.terminals)
    out.terminals.push_back(m.trajectory.kind == Trajectory::Kind::Static
                                ? m.position
                                : m.trajectory.eval(t));
  out.stations.reserve(scenario.stations.size());
  for (const MovingStation& m : scenario.stations)
    out.stations.push_back(m.trajectory.kind == Trajectory::Kind::Static
                               ? m.position
                               : m.trajectory.eval(t));
  return out;
}

namespace {

void validate_scenario(const Scenario& scenario) {
  if (scenario.snapshots < 1) throw std::invalid_argument("scenario needs >= 1 snapshot");
  if (!(scenario.tolerance >= 0.0 && scenario.tolerance < 1.0))
    throw std::invalid_argument("capacity tolerance must lie in [0, 1)");
  if (scenario.terminals.empty() || scenario.stations.empty())
    throw std::invalid_argument("scenario needs terminals and stations");
}

std::vector<Terminal> terminals_at(const Scenario& scenario,
                                   const SnapshotPositions& pos) {
  std::vector<Terminal> out(scenario.terminals.size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = {pos.terminals[i], scenario.terminals[i].mass};
  return out;
}

int owner_diff(const std::vector<int>& a, const std::vector<int>& b) {
  int changed = 0;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) ++changed;
  return changed;
}

double max_overload(const Assignment& asg, std::span<const double> caps) {
  double worst = -1.0;
  for (size_t j = 0; j < caps.size(); ++j)
    worst = std::max(worst, asg.loads[j] / caps[j] - 1.0);
  return worst;
}

}  // namespace

std::vector<SnapshotResult> kinetic_solve(const Scenario& scenario,
                                          const KineticOptions& options) {
  validate_scenario(scenario);
  const int S = scenario.snapshots;
  std::vector<double> caps(scenario.stations.size());
  for (size_t j = 0; j < caps.size(); ++j) caps[j] = scenario.stations[j].cap;

  std::vector<SnapshotResult> results;
  results.reserve(static_cast<size_t>(S));

  for (int s = 0; s < S; ++s) {
    const auto t_start = std::chrono::steady_clock::now();
    const double t = S == 1 ? 0.0 : static_cast<double>(s) / static_cast<double>(S - 1);
    const SnapshotPositions pos = snapshot_at(scenario, t);
    const std::vector<Terminal> terminals = terminals_at(scenario, pos);

    SnapshotResult snap;
    snap.t = t;

    bool keep_previous = false;
    if (s > 0 && scenario.tolerance > 0.0) {
      const SnapshotResult& prev = results.back();
      keep_previous = true;
      for (size_t j = 0; j < caps.size(); ++j)
        if (prev.assignment.loads[j] > (1.0 + scenario.tolerance) * caps[j]) {
          keep_previous = false;
          break;
        }
    }

    if (keep_previous) {
      const SnapshotResult& prev = results.back();
      snap.resolved = false;
      snap.heights = prev.heights;
      snap.assignment.owner = prev.assignment.owner;
      snap.assignment.loads.assign(caps.size(), 0.0);
      for (size_t i = 0; i < terminals.size(); ++i)
        snap.assignment.loads[static_cast<size_t>(snap.assignment.owner[i])] += terminals[i].mass;
      snap.assignment.cost =
          transport_cost(snap.assignment, terminals, pos.stations, scenario.solver.alpha);
    } else {
      std::span<const double> warm;
      if (s > 0 && options.warm_start) warm = results.back().heights;
      try {
        SolveResult solved =
            solve(terminals, pos.stations, caps, scenario.domain, scenario.solver, warm);
        snap.resolved = true;
        snap.heights = std::move(solved.heights);
        snap.assignment = std::move(solved.assignment);
        snap.trace = std::move(solved.trace);
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "snapshot " << s << " (t=" << t << "): " << e.what();
        throw std::runtime_error(msg.str());
      }
    }

    snap.changed_terminals =
        s == 0 ? 0 : owner_diff(results.back().assignment.owner, snap.assignment.owner);
    snap.max_overload = max_overload(snap.assignment, caps);
    snap.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
            .count();
    results.push_back(std::move(snap));
  }
  return results;
}

ChangeCounts count_changes(std::span<const SnapshotResult> results) {
  if (results.empty()) throw std::invalid_argument("count_changes: no results");
  ChangeCounts out;
  out.per_snapshot.reserve(results.size());
  for (const SnapshotResult& r : results) {
    out.per_snapshot.push_back(r.changed_terminals);
    out.total += r.changed_terminals;
  }
  return out;
}

}  // namespace optran
