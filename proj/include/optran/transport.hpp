#pragma once

#include <Eigen/SparseCore>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optran/geom.hpp"

namespace optran {

struct Terminal {
  Point position;
  double mass = 0.0;  // normalized so the scenario total is 1
};

enum class Method { NewtonDirect, NewtonJacobi, GradientDescent };

std::string method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

struct SolverConfig {
  Method method = Method::NewtonDirect;
  double step = 1.0;        // epsilon multiplying the update direction
  double stop_dw = 1e-4;    // stop once the capacity-residual MSE is below this
  int max_outer = 1000;
  double jacobi_tol = 1e-8;
  int jacobi_max_inner = 100000;
  double alpha = 2.0;       // cost exponent, |x - y|^alpha
};

/// Terminal -> station map with per-station accumulated loads and the
/// mass-weighted sum of |x_i - y_owner(i)|^alpha.
struct Assignment {
  std::vector<int> owner;
  std::vector<double> loads;
  double cost = 0.0;
};

enum class DirectionSource { NewtonDirect, NewtonJacobi, Gradient, GradientFallback };

std::string direction_source_name(DirectionSource s);

struct IterationRecord {
  int iteration = 0;
  double mse = 0.0;
  double cost = 0.0;
  double step = 0.0;          // accepted effective step length (s * epsilon)
  DirectionSource source = DirectionSource::NewtonDirect;
  int damp_halvings = 0;      // trial steps rejected for emptying a cell
};

enum class SolveStatus { Converged, MaxIterations };

struct SolveTrace {
  std::vector<IterationRecord> iterations;
  SolveStatus status = SolveStatus::Converged;
  int reconnect_damps = 0;  // height halvings spent reconnecting the diagram
};

struct SolveResult {
  std::vector<double> heights;
  Assignment assignment;
  SolveTrace trace;

  bool converged() const { return trace.status == SolveStatus::Converged; }
  int outer_iterations() const { return static_cast<int>(trace.iterations.size()); }
};

/// |x - site|^alpha - height. alpha = 2 is the classical power distance.
double power_distance(Point x, const WeightedSite& site, double alpha);

/// Owner = minimum power distance station, ties to the lowest index. O(nk).
Assignment assign(std::span<const Terminal> terminals,
                  std::span<const WeightedSite> sites, double alpha);

/// caps - loads, componentwise. Throws on length mismatch.
std::vector<double> residual(const Assignment& assignment, std::span<const double> caps);

/// (1/k) * sum of squared residual components.
double residual_mse(std::span<const double> g);

/// Graph Laplacian of the diagram adjacency with weights w_ij: rows sum to
/// zero, positive semidefinite; empty cells give zero rows.
Eigen::SparseMatrix<double> hessian(const PowerDiagram& diagram);

/// Solves H x = g on the gauge-reduced system (row/column 0 removed, x[0]=0).
/// Empty when the adjacency graph is disconnected or the reduced system is
/// singular; the caller damps heights and retries.
std::optional<std::vector<double>> newton_direction_direct(
    const Eigen::SparseMatrix<double>& H, std::span<const double> g);

struct JacobiResult {
  std::vector<double> x;
  int sweeps = 0;
  double residual_inf = 0.0;
  bool converged = false;
};

/// Local iterative solve of H x = g: each component is updated from its
/// neighbors' values and its own residual (under-relaxed to stay convergent
/// on bipartite adjacencies), re-anchored to x[0]=0 every sweep. Empty on a
/// disconnected adjacency; converged=false when max_inner is exhausted (the
/// last iterate is still returned).
std::optional<JacobiResult> newton_direction_jacobi(const Eigen::SparseMatrix<double>& H,
                                                    std::span<const double> g,
                                                    double inner_tol, int max_inner);

/// h + eps * g, gauge-fixed so the first entry is zero.
std::vector<double> gradient_step(std::span<const double> heights,
                                  std::span<const double> g, double eps);

struct DampedUpdateResult {
  std::vector<double> heights;
  double step = 0.0;   // accepted fraction s of the full eps * direction step
  int halvings = 0;    // trial steps rejected for emptying a cell
  bool accepted = false;
  PowerDiagram diagram;    // state at the accepted heights (valid iff accepted)
  Assignment assignment;
};

/// Backtracking step: largest s in {1, 1/2, ..., 2^-20} such that every
/// station keeps a nonempty power cell and the residual MSE does not
/// increase. Unaccepted result means the caller should fall back to a plain
/// gradient step for this iteration.
DampedUpdateResult damped_update(std::span<const double> heights,
                                 std::span<const double> direction, double eps,
                                 std::span<const Point> station_positions,
                                 std::span<const Terminal> terminals,
                                 const ConvexPolygon& domain,
                                 std::span<const double> caps, double alpha,
                                 double current_mse);

/// Full solve loop: assign -> residual -> Hessian -> direction -> damped
/// update, until MSE(residual) <= stop_dw or max_outer. Non-convergence
/// returns the best iterate with status MaxIterations. initial_heights warm
/// starts the solve (empty = cold start at h = 0).
SolveResult solve(std::span<const Terminal> terminals,
                  std::span<const Point> station_positions,
                  std::span<const double> caps, const ConvexPolygon& domain,
                  const SolverConfig& config,
                  std::span<const double> initial_heights = {});

/// Recomputes the assignment cost: sum of mass_i * |x_i - y_owner(i)|^alpha.
double transport_cost(const Assignment& assignment,
                      std::span<const Terminal> terminals,
                      std::span<const Point> station_positions, double alpha);

}  // namespace optran
