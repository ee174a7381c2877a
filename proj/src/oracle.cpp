#include "optran/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace optran {

namespace {

double arc_cost(Point x, Point y, double alpha) {
  const double d2 = dist2(x, y);
  return alpha == 2.0 ? d2 : std::pow(d2, 0.5 * alpha);
}

// Successive shortest paths with Johnson potentials. Costs are nonnegative
// reals, capacities integral.
class MinCostFlow {
 public:
  explicit MinCostFlow(int nodes) : adj_(static_cast<size_t>(nodes)), pot_(static_cast<size_t>(nodes), 0.0) {}

  int add_arc(int from, int to, std::int64_t cap, double cost) {
    const int id = static_cast<int>(arcs_.size());
    arcs_.push_back({to, cap, cost});
    arcs_.push_back({from, 0, -cost});
    adj_[static_cast<size_t>(from)].push_back(id);
    adj_[static_cast<size_t>(to)].push_back(id + 1);
    return id;
  }

  std::int64_t flow_on(int id) const { return arcs_[static_cast<size_t>(id) ^ 1].cap; }

  double potential(int node) const { return pot_[static_cast<size_t>(node)]; }

  // Sends up to `amount` units from source to sink; returns (flow, cost).
  std::pair<std::int64_t, double> run(int source, int sink, std::int64_t amount) {
    std::int64_t sent = 0;
    double total_cost = 0.0;
    const size_t n = adj_.size();
    std::vector<double> dist(n);
    std::vector<int> parent_arc(n);
    std::vector<char> settled(n);

    while (sent < amount) {
      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(settled.begin(), settled.end(), 0);
      dist[static_cast<size_t>(source)] = 0.0;
      std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                          std::greater<>> heap;
      heap.push({0.0, source});
      while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (settled[static_cast<size_t>(u)]) continue;
        settled[static_cast<size_t>(u)] = 1;
        if (u == sink) break;
        for (int id : adj_[static_cast<size_t>(u)]) {
          const Arc& a = arcs_[static_cast<size_t>(id)];
          if (a.cap <= 0) continue;
          // Reduced cost; clamp the ~1-ulp negatives rounding can produce.
          const double rc = std::max(0.0, a.cost + pot_[static_cast<size_t>(u)] - pot_[static_cast<size_t>(a.to)]);
          const double nd = d + rc;
          if (nd < dist[static_cast<size_t>(a.to)] - 1e-15) {
            dist[static_cast<size_t>(a.to)] = nd;
            parent_arc[static_cast<size_t>(a.to)] = id;
            heap.push({nd, a.to});
          }
        }
      }
      if (!settled[static_cast<size_t>(sink)]) return {sent, total_cost};

      // Capped potential update keeps reduced costs valid for nodes the
      // early-terminated Dijkstra never reached.
      const double d_sink = dist[static_cast<size_t>(sink)];
      for (size_t v = 0; v < n; ++v) pot_[v] += std::min(dist[v], d_sink);

      std::int64_t push = amount - sent;
      for (int v = sink; v != source;) {
        const Arc& a = arcs_[static_cast<size_t>(parent_arc[static_cast<size_t>(v)])];
        push = std::min(push, a.cap);
        v = arcs_[static_cast<size_t>(parent_arc[static_cast<size_t>(v)]) ^ 1].to;
      }
      for (int v = sink; v != source;) {
        const int id = parent_arc[static_cast<size_t>(v)];
        arcs_[static_cast<size_t>(id)].cap -= push;
        arcs_[static_cast<size_t>(id) ^ 1].cap += push;
        total_cost += static_cast<double>(push) * arcs_[static_cast<size_t>(id)].cost;
        v = arcs_[static_cast<size_t>(id) ^ 1].to;
      }
      sent += push;
    }
    return {sent, total_cost};
  }

 private:
  struct Arc {
    int to;
    std::int64_t cap;  // residual capacity
    double cost;
  };
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adj_;
  std::vector<double> pot_;
};

std::int64_t scaled_integer(double value, std::int64_t scale, double tol_units,
                            const char* what, int index) {
  const double scaled = value * static_cast<double>(scale);
  const double rounded = std::nearbyint(scaled);
  if (std::abs(scaled - rounded) > tol_units) {
    std::ostringstream msg;
    msg << what << " " << index << " = " << value << " is not integral at scale " << scale;
    throw OracleError(msg.str());
  }
  return static_cast<std::int64_t>(rounded);
}

}  // namespace

std::optional<Assignment> OracleResult::as_assignment(std::span<const Terminal> terminals,
                                                      std::span<const Point> stations,
                                                      double alpha) const {
  if (!integral) return std::nullopt;
  Assignment out;
  out.owner.assign(terminals.size(), -1);
  out.loads.assign(stations.size(), 0.0);
  for (const PlanEntry& e : plan) {
    out.owner[static_cast<size_t>(e.terminal)] = e.station;
    out.loads[static_cast<size_t>(e.station)] += e.mass;
  }
  out.cost = transport_cost(out, terminals, stations, alpha);
  return out;
}

OracleResult exact_assignment(std::span<const Terminal> terminals,
                              std::span<const Point> stations,
                              std::span<const double> caps, double alpha,
                              std::int64_t scale) {
  const int n = static_cast<int>(terminals.size());
  const int k = static_cast<int>(stations.size());
  if (n == 0 || k == 0) throw OracleError("oracle: empty instance");
  if (static_cast<int>(caps.size()) != k) throw OracleError("oracle: capacity length mismatch");

  // Per-value rounding tolerance: 1e-9 of the total scaled mass.
  const double tol_units = 1e-9 * static_cast<double>(scale);
  std::vector<std::int64_t> supply(static_cast<size_t>(n));
  std::vector<std::int64_t> demand(static_cast<size_t>(k));
  std::int64_t total_supply = 0, total_demand = 0;
  for (int i = 0; i < n; ++i) {
    supply[static_cast<size_t>(i)] = scaled_integer(terminals[static_cast<size_t>(i)].mass,
                                                    scale, tol_units, "terminal mass", i);
    total_supply += supply[static_cast<size_t>(i)];
  }
  for (int j = 0; j < k; ++j) {
    demand[static_cast<size_t>(j)] = scaled_integer(caps[static_cast<size_t>(j)], scale,
                                                    tol_units, "capacity", j);
    total_demand += demand[static_cast<size_t>(j)];
  }
  if (total_supply != total_demand) {
    std::ostringstream msg;
    msg << "oracle: infeasible, scaled supply " << total_supply << " != demand " << total_demand;
    throw OracleError(msg.str());
  }

  const int source = 0;
  const int sink = n + k + 1;
  MinCostFlow mcf(n + k + 2);
  for (int i = 0; i < n; ++i) mcf.add_arc(source, 1 + i, supply[static_cast<size_t>(i)], 0.0);
  std::vector<int> plan_arc(static_cast<size_t>(n) * static_cast<size_t>(k));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j)
      plan_arc[static_cast<size_t>(i) * static_cast<size_t>(k) + static_cast<size_t>(j)] =
          mcf.add_arc(1 + i, 1 + n + j, supply[static_cast<size_t>(i)],
                      arc_cost(terminals[static_cast<size_t>(i)].position,
                               stations[static_cast<size_t>(j)], alpha));
  for (int j = 0; j < k; ++j) mcf.add_arc(1 + n + j, sink, demand[static_cast<size_t>(j)], 0.0);

  const auto [flow, scaled_cost] = mcf.run(source, sink, total_supply);
  if (flow != total_supply) throw OracleError("oracle: max flow below total supply");

  OracleResult out;
  out.cost = scaled_cost / static_cast<double>(scale);
  out.integral = true;
  for (int i = 0; i < n; ++i) {
    int pieces = 0;
    for (int j = 0; j < k; ++j) {
      const std::int64_t f =
          mcf.flow_on(plan_arc[static_cast<size_t>(i) * static_cast<size_t>(k) + static_cast<size_t>(j)]);
      if (f > 0) {
        out.plan.push_back({i, j, static_cast<double>(f) / static_cast<double>(scale)});
        ++pieces;
      }
    }
    if (pieces != 1) out.integral = false;
  }
  out.station_potentials.resize(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) out.station_potentials[static_cast<size_t>(j)] = mcf.potential(1 + n + j);
  return out;
}

BruteForceResult brute_force_enumerate(std::span<const Terminal> terminals,
                                       std::span<const Point> stations,
                                       std::span<const double> caps, double alpha) {
  const int n = static_cast<int>(terminals.size());
  const int k = static_cast<int>(stations.size());
  if (n == 0 || k == 0) throw OracleError("brute force: empty instance");
  const double unit = terminals[0].mass;
  for (const Terminal& t : terminals)
    if (std::abs(t.mass - unit) > 1e-12 * std::max(1.0, std::abs(unit)))
      throw OracleError("brute force: requires equal (unit) masses");
  std::vector<int> cap_counts(static_cast<size_t>(k));
  int total = 0;
  for (int j = 0; j < k; ++j) {
    const double c = caps[static_cast<size_t>(j)] / unit;
    const double r = std::nearbyint(c);
    if (std::abs(c - r) > 1e-6) throw OracleError("brute force: capacities not integral in units");
    cap_counts[static_cast<size_t>(j)] = static_cast<int>(r);
    total += cap_counts[static_cast<size_t>(j)];
  }
  if (total != n) throw OracleError("brute force: capacities do not sum to terminal count");

  double combos = 1.0;  // multinomial n! / prod(cap_j!)
  {
    int used = 0;
    for (int j = 0; j < k; ++j)
      for (int c = 1; c <= cap_counts[static_cast<size_t>(j)]; ++c)
        combos *= static_cast<double>(++used) / static_cast<double>(c);
  }
  if (combos > 1e7) throw OracleError("brute force: instance too large to enumerate");

  std::vector<std::vector<double>> cost(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(k)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j)
      cost[static_cast<size_t>(i)][static_cast<size_t>(j)] =
          unit * arc_cost(terminals[static_cast<size_t>(i)].position, stations[static_cast<size_t>(j)], alpha);

  std::vector<int> owner(static_cast<size_t>(n), -1);
  std::vector<int> remaining = cap_counts;
  std::vector<int> best_owner;
  double best_cost = std::numeric_limits<double>::infinity();

  auto recurse = [&](auto&& self, int i, double acc) -> void {
    if (acc >= best_cost) return;
    if (i == n) {
      best_cost = acc;
      best_owner = owner;
      return;
    }
    for (int j = 0; j < k; ++j) {
      if (remaining[static_cast<size_t>(j)] == 0) continue;
      --remaining[static_cast<size_t>(j)];
      owner[static_cast<size_t>(i)] = j;
      self(self, i + 1, acc + cost[static_cast<size_t>(i)][static_cast<size_t>(j)]);
      ++remaining[static_cast<size_t>(j)];
    }
    owner[static_cast<size_t>(i)] = -1;
  };
  recurse(recurse, 0, 0.0);

  BruteForceResult out;
  out.assignment.owner = best_owner;
  out.assignment.loads.assign(static_cast<size_t>(k), 0.0);
  for (int i = 0; i < n; ++i)
    out.assignment.loads[static_cast<size_t>(best_owner[static_cast<size_t>(i)])] += unit;
  out.assignment.cost = best_cost;
  out.cost = best_cost;
  return out;
}

}  // namespace optran
