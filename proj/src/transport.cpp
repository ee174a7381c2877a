#include "optran/transport.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace optran {

namespace {

constexpr double kMinDampStep = 0x1p-20;
constexpr double kJacobiOmega = 0.5;
constexpr int kMaxReconnectDamps = 64;

double pow_alpha(double squared_dist, double alpha) {
  if (alpha == 2.0) return squared_dist;
  return std::pow(squared_dist, 0.5 * alpha);
}

void gauge_fix(std::vector<double>& h) {
  const double h0 = h.empty() ? 0.0 : h[0];
  for (double& v : h) v -= h0;
}

std::vector<WeightedSite> make_sites(std::span<const Point> positions,
                                     std::span<const double> heights) {
  std::vector<WeightedSite> sites(positions.size());
  for (size_t j = 0; j < positions.size(); ++j)
    sites[j] = {positions[j], heights[j]};
  return sites;
}

// Union-find connectivity over the nonzero off-diagonal pattern of H.
bool laplacian_connected(const Eigen::SparseMatrix<double>& H) {
  const int k = static_cast<int>(H.rows());
  if (k <= 1) return true;
  std::vector<int> parent(static_cast<size_t>(k));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[static_cast<size_t>(a)] != a) {
      parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
      a = parent[static_cast<size_t>(a)];
    }
    return a;
  };
  for (int c = 0; c < H.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(H, c); it; ++it)
      if (it.row() != it.col() && it.value() != 0.0)
        parent[static_cast<size_t>(find(static_cast<int>(it.row())))] = find(c);
  const int root = find(0);
  for (int a = 1; a < k; ++a)
    if (find(a) != root) return false;
  return true;
}

bool diagram_has_empty_cell(const PowerDiagram& diagram) {
  for (double a : diagram.areas)
    if (!(a > 0.0)) return true;
  return false;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::NewtonDirect: return "newton-direct";
    case Method::NewtonJacobi: return "newton-jacobi";
    case Method::GradientDescent: return "gradient-descent";
  }
  return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
  if (name == "newton-direct") return Method::NewtonDirect;
  if (name == "newton-jacobi") return Method::NewtonJacobi;
  if (name == "gradient-descent") return Method::GradientDescent;
  return std::nullopt;
}

std::string direction_source_name(DirectionSource s) {
  switch (s) {
    case DirectionSource::NewtonDirect: return "newton-direct";
    case DirectionSource::NewtonJacobi: return "newton-jacobi";
    case DirectionSource::Gradient: return "gradient";
    case DirectionSource::GradientFallback: return "gradient-fallback";
  }
  return "unknown";
}

double power_distance(Point x, const WeightedSite& site, double alpha) {
  return pow_alpha(dist2(x, site.position), alpha) - site.height;
}

Assignment assign(std::span<const Terminal> terminals,
                  std::span<const WeightedSite> sites, double alpha) {
  if (terminals.empty() || sites.empty())
    throw std::invalid_argument("assign: empty terminal or site list");
  const size_t k = sites.size();
  Assignment out;
  out.owner.resize(terminals.size());
  out.loads.assign(k, 0.0);
  double cost = 0.0;
  for (size_t i = 0; i < terminals.size(); ++i) {
    const Point x = terminals[i].position;
    int best = 0;
    double best_pow = power_distance(x, sites[0], alpha);
    for (size_t j = 1; j < k; ++j) {
      const double p = power_distance(x, sites[j], alpha);
      if (p < best_pow) {
        best_pow = p;
        best = static_cast<int>(j);
      }
    }
    out.owner[i] = best;
    out.loads[static_cast<size_t>(best)] += terminals[i].mass;
    cost += terminals[i].mass * pow_alpha(dist2(x, sites[static_cast<size_t>(best)].position), alpha);
  }
  out.cost = cost;
  return out;
}

std::vector<double> residual(const Assignment& assignment, std::span<const double> caps) {
  if (assignment.loads.size() != caps.size())
    throw std::invalid_argument("residual: capacity/load length mismatch");
  std::vector<double> g(caps.size());
  for (size_t j = 0; j < caps.size(); ++j) g[j] = caps[j] - assignment.loads[j];
  return g;
}

double residual_mse(std::span<const double> g) {
  if (g.empty()) return 0.0;
  double s = 0.0;
  for (double v : g) s += v * v;
  return s / static_cast<double>(g.size());
}

Eigen::SparseMatrix<double> hessian(const PowerDiagram& diagram) {
  const int k = diagram.site_count();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(diagram.edges.size() * 4 + static_cast<size_t>(k));
  std::vector<double> diag(static_cast<size_t>(k), 0.0);
  for (const DiagramEdge& e : diagram.edges) {
    entries.emplace_back(e.i, e.j, -e.weight);
    entries.emplace_back(e.j, e.i, -e.weight);
    diag[static_cast<size_t>(e.i)] += e.weight;
    diag[static_cast<size_t>(e.j)] += e.weight;
  }
  for (int j = 0; j < k; ++j) entries.emplace_back(j, j, diag[static_cast<size_t>(j)]);
  Eigen::SparseMatrix<double> H(k, k);
  H.setFromTriplets(entries.begin(), entries.end());
  return H;
}

std::optional<std::vector<double>> newton_direction_direct(
    const Eigen::SparseMatrix<double>& H, std::span<const double> g) {
  const int k = static_cast<int>(H.rows());
  if (static_cast<int>(g.size()) != k)
    throw std::invalid_argument("newton direction: gradient length mismatch");
  if (!laplacian_connected(H)) return std::nullopt;
  if (k == 1) return std::vector<double>{0.0};

  // Gauge reduction: delete row/column 0, pin x[0] = 0.
  Eigen::SparseMatrix<double> R(k - 1, k - 1);
  {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<size_t>(H.nonZeros()));
    for (int c = 0; c < H.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(H, c); it; ++it)
        if (it.row() > 0 && it.col() > 0)
          entries.emplace_back(static_cast<int>(it.row()) - 1, it.col() - 1, it.value());
    R.setFromTriplets(entries.begin(), entries.end());
  }
  Eigen::VectorXd rhs(k - 1);
  for (int j = 1; j < k; ++j) rhs[j - 1] = g[static_cast<size_t>(j)];

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(R);
  if (solver.info() != Eigen::Success) return std::nullopt;
  Eigen::VectorXd x = solver.solve(rhs);
  if (solver.info() != Eigen::Success) return std::nullopt;

  const double g_inf = rhs.size() == 0 ? 0.0 : rhs.cwiseAbs().maxCoeff();
  const double err = (R * x - rhs).cwiseAbs().maxCoeff();
  if (err > 1e-10 * std::max(g_inf, 1e-300)) return std::nullopt;

  std::vector<double> out(static_cast<size_t>(k), 0.0);
  for (int j = 1; j < k; ++j) out[static_cast<size_t>(j)] = x[j - 1];
  return out;
}

std::optional<JacobiResult> newton_direction_jacobi(const Eigen::SparseMatrix<double>& H,
                                                    std::span<const double> g,
                                                    double inner_tol, int max_inner) {
  const int k = static_cast<int>(H.rows());
  if (static_cast<int>(g.size()) != k)
    throw std::invalid_argument("newton direction: gradient length mismatch");
  if (!laplacian_connected(H)) return std::nullopt;

  JacobiResult result;
  result.x.assign(static_cast<size_t>(k), 0.0);
  if (k == 1) {
    result.converged = true;
    return result;
  }

  // Neighbor lists with weights, plus the weighted degree per station.
  std::vector<std::vector<std::pair<int, double>>> nbrs(static_cast<size_t>(k));
  std::vector<double> degree(static_cast<size_t>(k), 0.0);
  for (int c = 0; c < H.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(H, c); it; ++it) {
      if (it.row() == it.col()) {
        degree[static_cast<size_t>(it.row())] = it.value();
      } else if (it.value() != 0.0) {
        nbrs[static_cast<size_t>(it.row())].emplace_back(c, -it.value());
      }
    }

  std::vector<double> next(static_cast<size_t>(k), 0.0);
  auto linf_residual = [&](const std::vector<double>& x) {
    double worst = 0.0;
    for (int i = 0; i < k; ++i) {
      double hx = degree[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
      for (const auto& [j, w] : nbrs[static_cast<size_t>(i)]) hx -= w * x[static_cast<size_t>(j)];
      worst = std::max(worst, std::abs(hx - g[static_cast<size_t>(i)]));
    }
    return worst;
  };

  for (int sweep = 0; sweep < max_inner; ++sweep) {
    for (int i = 0; i < k; ++i) {
      double acc = g[static_cast<size_t>(i)];
      for (const auto& [j, w] : nbrs[static_cast<size_t>(i)]) acc += w * result.x[static_cast<size_t>(j)];
      const double jac = acc / degree[static_cast<size_t>(i)];
      next[static_cast<size_t>(i)] =
          (1.0 - kJacobiOmega) * result.x[static_cast<size_t>(i)] + kJacobiOmega * jac;
    }
    const double anchor = next[0];
    for (int i = 0; i < k; ++i) next[static_cast<size_t>(i)] -= anchor;
    result.x.swap(next);
    result.sweeps = sweep + 1;
    result.residual_inf = linf_residual(result.x);
    if (result.residual_inf <= inner_tol) {
      result.converged = true;
      return result;
    }
  }
  result.converged = false;
  return result;
}

std::vector<double> gradient_step(std::span<const double> heights,
                                  std::span<const double> g, double eps) {
  if (heights.size() != g.size())
    throw std::invalid_argument("gradient step: length mismatch");
  std::vector<double> h(heights.begin(), heights.end());
  for (size_t j = 0; j < h.size(); ++j) h[j] += eps * g[j];
  gauge_fix(h);
  return h;
}

DampedUpdateResult damped_update(std::span<const double> heights,
                                 std::span<const double> direction, double eps,
                                 std::span<const Point> station_positions,
                                 std::span<const Terminal> terminals,
                                 const ConvexPolygon& domain,
                                 std::span<const double> caps, double alpha,
                                 double current_mse) {
  if (heights.size() != direction.size() || heights.size() != station_positions.size())
    throw std::invalid_argument("damped update: length mismatch");
  DampedUpdateResult result;
  result.heights.assign(heights.begin(), heights.end());

  const Assignment base = assign(terminals, make_sites(station_positions, result.heights), alpha);

  // Largest strictly improving step wins. Equal-MSE steps are kept as
  // fallbacks (the load vector is quantized, so plateaus are normal), with
  // flip-free drift preferred: a full step that swaps a terminal pair at
  // unchanged MSE just reverses the residual and cycles with period 2.
  struct Trial {
    std::vector<double> heights;
    double step = 0.0;
    PowerDiagram diagram;
    Assignment assignment;
    bool valid = false;
  };
  Trial drift;
  Trial plateau;

  for (double s = 1.0; s >= kMinDampStep; s *= 0.5) {
    std::vector<double> trial(heights.begin(), heights.end());
    for (size_t j = 0; j < trial.size(); ++j) trial[j] += s * eps * direction[j];
    gauge_fix(trial);
    PowerDiagram diagram = build_power_diagram(make_sites(station_positions, trial), domain);
    if (diagram_has_empty_cell(diagram)) {
      ++result.halvings;
      continue;
    }
    Assignment asg = assign(terminals, make_sites(station_positions, trial), alpha);
    const double mse = residual_mse(residual(asg, caps));
    if (mse < current_mse) {
      result.heights = std::move(trial);
      result.step = s;
      result.accepted = true;
      result.diagram = std::move(diagram);
      result.assignment = std::move(asg);
      return result;
    }
    if (mse == current_mse) {
      Trial& slot = asg.owner == base.owner ? drift : plateau;
      if (!slot.valid) {
        slot.heights = std::move(trial);
        slot.step = s;
        slot.diagram = std::move(diagram);
        slot.assignment = std::move(asg);
        slot.valid = true;
      }
    }
  }

  Trial& fallback = drift.valid ? drift : plateau;
  if (fallback.valid) {
    result.heights = std::move(fallback.heights);
    result.step = fallback.step;
    result.accepted = true;
    result.diagram = std::move(fallback.diagram);
    result.assignment = std::move(fallback.assignment);
  }
  return result;
}

SolveResult solve(std::span<const Terminal> terminals,
                  std::span<const Point> station_positions,
                  std::span<const double> caps, const ConvexPolygon& domain,
                  const SolverConfig& config,
                  std::span<const double> initial_heights) {
  const size_t k = station_positions.size();
  if (k == 0 || terminals.empty())
    throw std::invalid_argument("solve: empty stations or terminals");
  if (caps.size() != k) throw std::invalid_argument("solve: capacity length mismatch");
  {
    double mass_sum = 0.0, mass_c = 0.0;
    for (const Terminal& t : terminals) {
      if (!(t.mass > 0.0)) throw std::invalid_argument("solve: terminal mass must be > 0");
      const double y = t.mass - mass_c;
      const double s = mass_sum + y;
      mass_c = (s - mass_sum) - y;
      mass_sum = s;
    }
    if (std::abs(mass_sum - 1.0) > 1e-12)
      throw std::invalid_argument("solve: terminal masses must sum to 1");
    double cap_sum = 0.0;
    for (double c : caps) {
      if (!(c > 0.0)) throw std::invalid_argument("solve: capacities must be > 0");
      cap_sum += c;
    }
    if (std::abs(cap_sum - 1.0) > 1e-12)
      throw std::invalid_argument("solve: capacities must sum to 1");
    for (size_t a = 0; a < k; ++a)
      for (size_t b = a + 1; b < k; ++b)
        if (dist(station_positions[a], station_positions[b]) < 1e-12) {
          std::ostringstream msg;
          msg << "solve: coincident stations " << a << " and " << b;
          throw std::invalid_argument(msg.str());
        }
    for (size_t a = 0; a < k; ++a)
      if (!point_in_polygon(station_positions[a], domain)) {
        std::ostringstream msg;
        msg << "solve: station " << a << " lies outside the domain";
        throw std::invalid_argument(msg.str());
      }
  }

  std::vector<double> h;
  if (initial_heights.empty()) {
    h.assign(k, 0.0);
  } else {
    if (initial_heights.size() != k)
      throw std::invalid_argument("solve: initial height length mismatch");
    h.assign(initial_heights.begin(), initial_heights.end());
    gauge_fix(h);
  }

  SolveResult out;
  Assignment asg = assign(terminals, make_sites(station_positions, h), config.alpha);
  std::vector<double> g = residual(asg, caps);
  double mse = residual_mse(g);

  std::vector<double> best_h = h;
  Assignment best_asg = asg;
  double best_mse = mse;

  PowerDiagram diagram;
  bool diagram_fresh = false;

  for (int iter = 1; iter <= config.max_outer && mse > config.stop_dw; ++iter) {
    IterationRecord rec;
    rec.iteration = iter;

    bool stepped = false;
    if (config.method != Method::GradientDescent) {
      if (!diagram_fresh) {
        diagram = build_power_diagram(make_sites(station_positions, h), domain);
        diagram_fresh = true;
      }
      // A warm start can hand us heights whose diagram has empty cells and a
      // disconnected adjacency; pull the heights toward Voronoi until every
      // station has a cell again.
      int reconnect = 0;
      while ((diagram_has_empty_cell(diagram) ||
              !laplacian_connected(hessian(diagram))) &&
             reconnect < kMaxReconnectDamps) {
        for (double& v : h) v *= 0.5;
        gauge_fix(h);
        diagram = build_power_diagram(make_sites(station_positions, h), domain);
        ++reconnect;
      }
      if (reconnect > 0) {
        out.trace.reconnect_damps += reconnect;
        asg = assign(terminals, make_sites(station_positions, h), config.alpha);
        g = residual(asg, caps);
        mse = residual_mse(g);
        if (mse <= config.stop_dw) {
          // Rare: the damped heights alone already meet the tolerance.
          break;
        }
      }

      const Eigen::SparseMatrix<double> H = hessian(diagram);
      std::optional<std::vector<double>> direction;
      DirectionSource source = DirectionSource::NewtonDirect;
      if (config.method == Method::NewtonDirect) {
        direction = newton_direction_direct(H, g);
      } else {
        source = DirectionSource::NewtonJacobi;
        auto jac = newton_direction_jacobi(H, g, config.jacobi_tol, config.jacobi_max_inner);
        if (jac) direction = std::move(jac->x);  // best effort even when not converged
      }
      if (direction) {
        // The edge-weight Laplacian is the area Jacobian in affine-plane
        // height units; power heights are twice those, so the full Newton
        // step doubles the solved direction.
        for (double& v : *direction) v *= 2.0;
        DampedUpdateResult du =
            damped_update(h, *direction, config.step, station_positions, terminals,
                          domain, caps, config.alpha, mse);
        rec.damp_halvings = du.halvings;
        if (du.accepted) {
          h = std::move(du.heights);
          diagram = std::move(du.diagram);
          asg = std::move(du.assignment);
          diagram_fresh = true;
          rec.source = source;
          rec.step = du.step * config.step;
          stepped = true;
        }
      }
      if (!stepped) rec.source = DirectionSource::GradientFallback;
    } else {
      rec.source = DirectionSource::Gradient;
    }

    if (!stepped) {
      h = gradient_step(h, g, config.step);
      asg = assign(terminals, make_sites(station_positions, h), config.alpha);
      diagram_fresh = false;
      rec.step = config.step;
    }

    g = residual(asg, caps);
    mse = residual_mse(g);
    rec.mse = mse;
    rec.cost = asg.cost;
    out.trace.iterations.push_back(rec);

    if (mse < best_mse) {
      best_mse = mse;
      best_h = h;
      best_asg = asg;
    }
  }

  if (mse <= config.stop_dw) {
    out.trace.status = SolveStatus::Converged;
    out.heights = std::move(h);
    out.assignment = std::move(asg);
  } else {
    out.trace.status = SolveStatus::MaxIterations;
    out.heights = std::move(best_h);
    out.assignment = std::move(best_asg);
  }
  return out;
}

double transport_cost(const Assignment& assignment,
                      std::span<const Terminal> terminals,
                      std::span<const Point> station_positions, double alpha) {
  if (assignment.owner.size() != terminals.size())
    throw std::invalid_argument("transport cost: owner length mismatch");
  double cost = 0.0;
  for (size_t i = 0; i < terminals.size(); ++i) {
    const Point y = station_positions[static_cast<size_t>(assignment.owner[i])];
    cost += terminals[i].mass * pow_alpha(dist2(terminals[i].position, y), alpha);
  }
  return cost;
}

}  // namespace optran
