#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "optran/rng.hpp"
#include "optran/scenario.hpp"
#include "optran/transport.hpp"

using namespace optran;

namespace {

// Test-side oracle, independent of the solver path: dense Gaussian
// elimination with partial pivoting.
std::vector<double> dense_lu_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
    std::swap(A[col], A[pivot]);
    std::swap(b[col], b[pivot]);
    REQUIRE(std::abs(A[col][col]) > 1e-14);
    for (int r = col + 1; r < n; ++r) {
      const double f = A[r][col] / A[col][col];
      for (int c = col; c < n; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(static_cast<size_t>(n));
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[static_cast<size_t>(r)];
    for (int c = r + 1; c < n; ++c)
      acc -= A[static_cast<size_t>(r)][static_cast<size_t>(c)] * x[static_cast<size_t>(c)];
    x[static_cast<size_t>(r)] = acc / A[static_cast<size_t>(r)][static_cast<size_t>(r)];
  }
  return x;
}

std::vector<double> oracle_direction(const Eigen::SparseMatrix<double>& H,
                                     const std::vector<double>& g) {
  const int k = static_cast<int>(H.rows());
  std::vector<std::vector<double>> A(static_cast<size_t>(k - 1),
                                     std::vector<double>(static_cast<size_t>(k - 1), 0.0));
  const Eigen::MatrixXd D = Eigen::MatrixXd(H);
  for (int r = 1; r < k; ++r)
    for (int c = 1; c < k; ++c)
      A[static_cast<size_t>(r - 1)][static_cast<size_t>(c - 1)] = D(r, c);
  std::vector<double> rhs(g.begin() + 1, g.end());
  std::vector<double> reduced = dense_lu_solve(std::move(A), std::move(rhs));
  std::vector<double> x(static_cast<size_t>(k), 0.0);
  for (int r = 1; r < k; ++r) x[static_cast<size_t>(r)] = reduced[static_cast<size_t>(r - 1)];
  return x;
}

ConvexPolygon disk_domain() { return regular_polygon(64); }

std::vector<WeightedSite> random_sites(Rng& rng, int k, double height_span = 0.1,
                                       double min_sep = 0.15) {
  const ConvexPolygon domain = disk_domain();
  std::vector<WeightedSite> sites;
  while (static_cast<int>(sites.size()) < k) {
    Point p{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    if (!point_in_polygon(p, domain, -1e-6)) continue;
    bool ok = true;
    for (const WeightedSite& s : sites)
      if (dist(s.position, p) < min_sep) ok = false;
    if (ok) sites.push_back({p, rng.uniform(-height_span, height_span)});
  }
  return sites;
}

std::vector<double> random_zero_sum(Rng& rng, int k) {
  std::vector<double> g(static_cast<size_t>(k));
  double mean = 0.0;
  for (double& v : g) {
    v = rng.uniform(-0.1, 0.1);
    mean += v;
  }
  mean /= k;
  for (double& v : g) v -= mean;
  return g;
}

std::vector<Terminal> random_terminals(Rng& rng, int n) {
  const ConvexPolygon domain = disk_domain();
  std::vector<Terminal> out;
  while (static_cast<int>(out.size()) < n) {
    Point p{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    if (!point_in_polygon(p, domain, 0.0)) continue;
    out.push_back({p, 1.0 / n});
  }
  return out;
}

std::vector<Point> positions_of(const std::vector<WeightedSite>& sites) {
  std::vector<Point> out;
  for (const WeightedSite& s : sites) out.push_back(s.position);
  return out;
}

struct FlatInstance {
  std::vector<Terminal> terminals;
  std::vector<Point> stations;
  std::vector<double> caps;
  ConvexPolygon domain;
  SolverConfig solver;
};

FlatInstance flatten(const LoadedScenario& loaded) {
  FlatInstance inst;
  for (const auto& t : loaded.scenario.terminals) inst.terminals.push_back({t.position, t.mass});
  for (const auto& s : loaded.scenario.stations) {
    inst.stations.push_back(s.position);
    inst.caps.push_back(s.cap);
  }
  inst.domain = loaded.scenario.domain;
  inst.solver = loaded.scenario.solver;
  return inst;
}

}  // namespace

TEST_CASE("power_distance") {
  const WeightedSite site{{3, 4}, 0.0};
  CHECK(power_distance({0, 0}, site, 2.0) == doctest::Approx(25.0));
  CHECK(power_distance({0, 0}, {{3, 4}, 5.0}, 2.0) == doctest::Approx(20.0));
  CHECK(power_distance({3, 4}, {{3, 4}, 1.25}, 2.0) == doctest::Approx(-1.25));
  CHECK(power_distance({0, 0}, {{3, 4}, 0.0}, 3.0) == doctest::Approx(125.0));
}

TEST_CASE("assign basics and tie-break") {
  const std::vector<Terminal> terminals{{{0, 0}, 1.0}};
  SUBCASE("single station") {
    const std::vector<WeightedSite> sites{{{0.4, 0.2}, 0.0}};
    const Assignment a = assign(terminals, sites, 2.0);
    CHECK(a.owner[0] == 0);
    CHECK(a.loads[0] == doctest::Approx(1.0));
  }
  SUBCASE("tie goes to the lowest index") {
    const std::vector<WeightedSite> sites{{{-1, 0}, 0.0}, {{1, 0}, 0.0}};
    CHECK(assign(terminals, sites, 2.0).owner[0] == 0);
  }
  SUBCASE("height moves the winner") {
    const std::vector<WeightedSite> sites{{{-1, 0}, 0.0}, {{1, 0}, 0.5}};
    const Assignment a = assign(terminals, sites, 2.0);
    CHECK(a.owner[0] == 1);  // pow0 = 1, pow1 = 0.5
    CHECK(a.cost == doctest::Approx(1.0));
  }
}

TEST_CASE("residual") {
  Assignment a;
  a.loads = {0.6, 0.4};
  const std::vector<double> caps{0.5, 0.5};
  const std::vector<double> g = residual(a, caps);
  CHECK(g[0] == doctest::Approx(-0.1));
  CHECK(g[1] == doctest::Approx(0.1));
  CHECK(residual_mse(g) == doctest::Approx(0.01));

  Assignment equal;
  equal.loads = {0.5, 0.5};
  for (double v : residual(equal, caps)) CHECK(v == 0.0);

  Assignment bad;
  bad.loads = {1.0};
  CHECK_THROWS_AS(residual(bad, caps), std::invalid_argument);
}

TEST_CASE("residual sums to zero on random instances") {
  Rng rng(31001);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(6));
    std::vector<WeightedSite> sites = random_sites(rng, k);
    std::vector<Terminal> terminals = random_terminals(rng, 150);
    std::vector<double> caps(static_cast<size_t>(k), 1.0 / k);
    const Assignment a = assign(terminals, sites, 2.0);
    const std::vector<double> g = residual(a, caps);
    double sum = 0.0;
    for (double v : g) sum += v;
    CHECK(std::abs(sum) <= 1e-12);
  }
}

TEST_CASE("hessian: two-site square example and k=1") {
  const std::vector<WeightedSite> two{{{0.25, 0.5}, 0.0}, {{0.75, 0.5}, 0.0}};
  const ConvexPolygon square{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
  const Eigen::SparseMatrix<double> H = hessian(build_power_diagram(two, square));
  CHECK(H.coeff(0, 0) == doctest::Approx(2.0));
  CHECK(H.coeff(0, 1) == doctest::Approx(-2.0));
  CHECK(H.coeff(1, 0) == doctest::Approx(-2.0));
  CHECK(H.coeff(1, 1) == doctest::Approx(2.0));

  const std::vector<WeightedSite> one{{{0.5, 0.5}, 0.0}};
  const Eigen::SparseMatrix<double> H1 = hessian(build_power_diagram(one, square));
  CHECK(H1.rows() == 1);
  CHECK(H1.coeff(0, 0) == 0.0);
}

TEST_CASE("hessian: PSD with zero row sums (dense eigensolve oracle)") {
  Rng rng(31002);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<WeightedSite> sites = random_sites(rng, 5);
    const Eigen::SparseMatrix<double> H = hessian(build_power_diagram(sites, disk_domain()));
    const Eigen::MatrixXd D = Eigen::MatrixXd(H);
    for (int r = 0; r < 5; ++r) CHECK(std::abs(D.row(r).sum()) <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(D);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-9);
  }
}

TEST_CASE("newton_direction_direct: pinned example and trivial cases") {
  Eigen::SparseMatrix<double> H(2, 2);
  H.insert(0, 0) = 2.0;
  H.insert(0, 1) = -2.0;
  H.insert(1, 0) = -2.0;
  H.insert(1, 1) = 2.0;
  H.makeCompressed();
  const std::vector<double> g{-0.1, 0.1};
  const auto x = newton_direction_direct(H, g);
  REQUIRE(x.has_value());
  CHECK((*x)[0] == 0.0);
  CHECK((*x)[1] == doctest::Approx(0.05).epsilon(1e-12));

  const auto zero = newton_direction_direct(H, std::vector<double>{0.0, 0.0});
  REQUIRE(zero.has_value());
  CHECK((*zero)[1] == doctest::Approx(0.0));

  // Disconnected adjacency: two isolated nodes.
  Eigen::SparseMatrix<double> D(2, 2);
  CHECK_FALSE(newton_direction_direct(D, g).has_value());
}

TEST_CASE("newton_direction_direct matches the dense LU oracle") {
  Rng rng(31003);
  int done = 0;
  while (done < 20) {
    std::vector<WeightedSite> sites = random_sites(rng, 6);
    const Eigen::SparseMatrix<double> H = hessian(build_power_diagram(sites, disk_domain()));
    const std::vector<double> g = random_zero_sum(rng, 6);
    const auto x = newton_direction_direct(H, g);
    if (!x) continue;  // disconnected draw; try another instance
    const std::vector<double> ref = oracle_direction(H, g);
    for (int j = 0; j < 6; ++j)
      CHECK(std::abs((*x)[static_cast<size_t>(j)] - ref[static_cast<size_t>(j)]) <= 1e-9);
    ++done;
  }
}

TEST_CASE("jacobi: two-site fixed point within 100 sweeps") {
  Eigen::SparseMatrix<double> H(2, 2);
  H.insert(0, 0) = 2.0;
  H.insert(0, 1) = -2.0;
  H.insert(1, 0) = -2.0;
  H.insert(1, 1) = 2.0;
  H.makeCompressed();
  const std::vector<double> g{-0.1, 0.1};
  const auto r = newton_direction_jacobi(H, g, 1e-8, 100);
  REQUIRE(r.has_value());
  CHECK(r->converged);
  CHECK(r->sweeps <= 100);
  CHECK(std::abs(r->x[1] - 0.05) <= 1e-8);

  const auto z = newton_direction_jacobi(H, std::vector<double>{0, 0}, 1e-12, 10);
  REQUIRE(z.has_value());
  CHECK(z->converged);
  CHECK(z->x[0] == 0.0);
  CHECK(z->x[1] == 0.0);
}

TEST_CASE("jacobi matches the direct solve on random diagrams") {
  Rng rng(31004);
  int done = 0;
  while (done < 15) {
    std::vector<WeightedSite> sites = random_sites(rng, 8);
    const Eigen::SparseMatrix<double> H = hessian(build_power_diagram(sites, disk_domain()));
    const std::vector<double> g = random_zero_sum(rng, 8);
    const auto direct = newton_direction_direct(H, g);
    if (!direct) continue;
    const auto jac = newton_direction_jacobi(H, g, 1e-8, 200000);
    REQUIRE(jac.has_value());
    CHECK(jac->converged);
    for (int j = 0; j < 8; ++j)
      CHECK(std::abs(jac->x[static_cast<size_t>(j)] - (*direct)[static_cast<size_t>(j)]) <= 1e-6);
    ++done;
  }
}

TEST_CASE("jacobi sweeps only read adjacent values") {
  // Path 0-1-...-6: a residual change at node 6 travels one hop per sweep,
  // so after two sweeps nodes 0..3 are untouched.
  const int nodes = 7;
  Eigen::SparseMatrix<double> H(nodes, nodes);
  std::vector<Eigen::Triplet<double>> tri;
  for (int e = 0; e + 1 < nodes; ++e) {
    tri.emplace_back(e, e + 1, -1.0);
    tri.emplace_back(e + 1, e, -1.0);
    tri.emplace_back(e, e, 1.0);
    tri.emplace_back(e + 1, e + 1, 1.0);
  }
  H.setFromTriplets(tri.begin(), tri.end());
  std::vector<double> g{0.3, -0.1, 0.2, -0.15, -0.25, 0.1, -0.1};
  const auto a = newton_direction_jacobi(H, g, 1e-30, 2);
  g[6] += 0.7;
  const auto b = newton_direction_jacobi(H, g, 1e-30, 2);
  REQUIRE((a.has_value() && b.has_value()));
  for (int i = 0; i <= 3; ++i) CHECK(a->x[static_cast<size_t>(i)] == b->x[static_cast<size_t>(i)]);
  CHECK(a->x[6] != b->x[6]);
}

TEST_CASE("jacobi reports non-convergence with the last iterate") {
  Rng rng(31005);
  std::vector<WeightedSite> sites = random_sites(rng, 8);
  const Eigen::SparseMatrix<double> H = hessian(build_power_diagram(sites, disk_domain()));
  const std::vector<double> g = random_zero_sum(rng, 8);
  const auto r = newton_direction_jacobi(H, g, 1e-14, 3);
  REQUIRE(r.has_value());
  CHECK_FALSE(r->converged);
  CHECK(r->sweeps == 3);
  CHECK(r->residual_inf > 1e-14);
  CHECK(r->x.size() == 8);
}

TEST_CASE("gradient_step") {
  const std::vector<double> h{0.0, 0.0};
  const std::vector<double> g{-0.1, 0.1};
  const std::vector<double> out = gradient_step(h, g, 0.5);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == doctest::Approx(0.1).epsilon(1e-15));

  const std::vector<double> same = gradient_step(h, std::vector<double>{0, 0}, 0.7);
  CHECK(same[0] == 0.0);
  CHECK(same[1] == 0.0);

  // Overloaded station: negative residual lowers its height relative to others.
  const std::vector<double> h2{0.0, 0.2};
  const std::vector<double> g2{0.1, -0.1};
  const std::vector<double> out2 = gradient_step(h2, g2, 1.0);
  CHECK(out2[1] - out2[0] < h2[1] - h2[0]);
}

TEST_CASE("damped_update") {
  Rng rng(31006);
  const ConvexPolygon domain = disk_domain();
  std::vector<WeightedSite> sites = random_sites(rng, 3, 0.0);
  const std::vector<Point> positions = positions_of(sites);
  std::vector<Terminal> terminals = random_terminals(rng, 120);
  const std::vector<double> caps{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const std::vector<double> h{0.0, 0.0, 0.0};
  const Assignment a0 = assign(terminals, sites, 2.0);
  const double mse0 = residual_mse(residual(a0, caps));

  SUBCASE("zero direction is a full accepted no-op") {
    const auto r = damped_update(h, std::vector<double>{0, 0, 0}, 1.0, positions, terminals,
                                 domain, caps, 2.0, mse0);
    CHECK(r.accepted);
    CHECK(r.step == 1.0);
    CHECK(r.halvings == 0);
    for (double v : r.heights) CHECK(v == 0.0);
  }

  SUBCASE("newton direction on a mild imbalance accepts the full step") {
    const Eigen::SparseMatrix<double> H = hessian(build_power_diagram(sites, domain));
    const std::vector<double> g = residual(a0, caps);
    const auto dir = newton_direction_direct(H, g);
    REQUIRE(dir.has_value());
    const auto r = damped_update(h, *dir, 1.0, positions, terminals, domain, caps, 2.0, mse0);
    CHECK(r.accepted);
    CHECK(r.step == 1.0);
    for (double area : r.diagram.areas) CHECK(area > 0.0);
  }

  SUBCASE("direction that empties cell 2 at full step gets damped") {
    const std::vector<double> dir{0.0, 0.0, -5.0};
    const auto r = damped_update(h, dir, 1.0, positions, terminals, domain, caps, 2.0, mse0);
    REQUIRE(r.accepted);
    CHECK(r.step < 1.0);
    CHECK(r.halvings > 0);
    CHECK(r.diagram.areas[2] > 0.0);
  }
}

TEST_CASE("solve: k=1 and symmetric instances converge immediately") {
  const ConvexPolygon domain = disk_domain();
  SUBCASE("single station") {
    Rng rng(31007);
    std::vector<Terminal> terminals = random_terminals(rng, 50);
    const std::vector<Point> stations{{0.0, 0.0}};
    const std::vector<double> caps{1.0};
    const SolveResult r = solve(terminals, stations, caps, domain, SolverConfig{});
    CHECK(r.converged());
    CHECK(r.outer_iterations() == 0);
    CHECK(r.heights[0] == 0.0);
  }
  SUBCASE("four corner stations, symmetric grid") {
    const ConvexPolygon square{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    std::vector<Terminal> terminals;
    const int m = 10;
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c)
        terminals.push_back({{(c + 0.5) / m, (r + 0.5) / m}, 1.0 / (m * m)});
    const std::vector<Point> stations{{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
    const std::vector<double> caps(4, 0.25);
    SolverConfig cfg;
    cfg.stop_dw = 1e-6;
    const SolveResult r = solve(terminals, stations, caps, square, cfg);
    CHECK(r.converged());
    CHECK(r.outer_iterations() == 0);
    for (double hj : r.heights) CHECK(std::abs(hj) <= 1e-6);
    for (double load : r.assignment.loads) CHECK(load == doctest::Approx(0.25).epsilon(1e-9));
  }
}

TEST_CASE("solve rejects malformed instances") {
  Rng rng(31011);
  std::vector<Terminal> terminals = random_terminals(rng, 20);
  const ConvexPolygon domain = disk_domain();
  const std::vector<double> caps{0.5, 0.5};
  SUBCASE("coincident stations") {
    const std::vector<Point> stations{{0.1, 0.1}, {0.1, 0.1}};
    CHECK_THROWS_AS(solve(terminals, stations, caps, domain, SolverConfig{}),
                    std::invalid_argument);
  }
  SUBCASE("station outside the domain") {
    const std::vector<Point> stations{{0.1, 0.1}, {2.5, 0.0}};
    CHECK_THROWS_AS(solve(terminals, stations, caps, domain, SolverConfig{}),
                    std::invalid_argument);
  }
  SUBCASE("capacities must sum to one") {
    const std::vector<Point> stations{{0.1, 0.1}, {-0.4, 0.2}};
    CHECK_THROWS_AS(solve(terminals, stations, std::vector<double>{0.5, 0.6}, domain,
                          SolverConfig{}),
                    std::invalid_argument);
  }
}

TEST_CASE("solve: perturbed grid n=2000, k=8 converges fast with monotone cost") {
  GenOptions gen;
  gen.n = 2000;
  gen.k = 8;
  gen.dist = "perturbed-grid";
  gen.seed = 4242;
  gen.solver.stop_dw = 1e-4;
  const FlatInstance inst = flatten(realize_scenario(generate_scenario(gen)));
  const SolveResult r = solve(inst.terminals, inst.stations, inst.caps, inst.domain, inst.solver);
  CHECK(r.converged());
  CHECK(r.outer_iterations() <= 20);
  const auto& iters = r.trace.iterations;
  REQUIRE(!iters.empty());
  for (size_t t = 1; t < iters.size(); ++t) CHECK(iters[t].mse < iters[t - 1].mse);
  CHECK(iters.back().mse <= 1e-4);
  // Convergence at stop_dw bounds every per-station mismatch.
  const std::vector<double> g = residual(r.assignment, inst.caps);
  double worst = 0.0;
  for (double v : g) worst = std::max(worst, std::abs(v));
  CHECK(worst <= std::sqrt(8.0 * 1e-4));
}

TEST_CASE("solve: newton-jacobi reaches the same answer as newton-direct") {
  GenOptions gen;
  gen.n = 400;
  gen.k = 6;
  gen.seed = 99;
  gen.solver.stop_dw = 1e-8;
  FlatInstance inst = flatten(realize_scenario(generate_scenario(gen)));
  const SolveResult direct = solve(inst.terminals, inst.stations, inst.caps, inst.domain,
                                   inst.solver);
  inst.solver.method = Method::NewtonJacobi;
  const SolveResult jacobi = solve(inst.terminals, inst.stations, inst.caps, inst.domain,
                                   inst.solver);
  CHECK(direct.converged());
  CHECK(jacobi.converged());
  CHECK(jacobi.assignment.cost ==
        doctest::Approx(direct.assignment.cost).epsilon(1e-6));
}

TEST_CASE("solve: newton and gradient descent agree on cost within 1%") {
  GenOptions gen;
  gen.n = 200;
  gen.k = 4;
  gen.seed = 7;
  gen.solver.stop_dw = 1e-6;
  FlatInstance inst = flatten(realize_scenario(generate_scenario(gen)));
  SolverConfig gd = inst.solver;
  gd.method = Method::GradientDescent;
  gd.step = 0.05;
  gd.max_outer = 200000;
  const SolveResult rn = solve(inst.terminals, inst.stations, inst.caps, inst.domain,
                               inst.solver);
  const SolveResult rg = solve(inst.terminals, inst.stations, inst.caps, inst.domain, gd);
  CHECK(rn.converged());
  CHECK(rg.converged());
  CHECK(std::abs(rn.assignment.cost - rg.assignment.cost) <= 0.01 * rn.assignment.cost);
  CHECK(rg.outer_iterations() > rn.outer_iterations());
}

TEST_CASE("solve: warm start from bad heights recovers via damping") {
  GenOptions gen;
  gen.n = 300;
  gen.k = 5;
  gen.seed = 12;
  gen.solver.stop_dw = 1e-6;
  const FlatInstance inst = flatten(realize_scenario(generate_scenario(gen)));
  // Heights that empty several cells: huge spread.
  std::vector<double> h0{0.0, 8.0, -8.0, 12.0, -12.0};
  const SolveResult r = solve(inst.terminals, inst.stations, inst.caps, inst.domain,
                              inst.solver, h0);
  CHECK(r.converged());
  CHECK(r.trace.reconnect_damps > 0);
}

TEST_CASE("gauge invariance: shifting all heights keeps the assignment") {
  Rng rng(31008);
  std::vector<WeightedSite> sites = random_sites(rng, 6);
  std::vector<Terminal> terminals = random_terminals(rng, 300);
  const Assignment before = assign(terminals, sites, 2.0);
  for (WeightedSite& s : sites) s.height += 3.7;
  const Assignment after = assign(terminals, sites, 2.0);
  CHECK(before.owner == after.owner);
}

TEST_CASE("area derivatives match the edge weights (plane-height parameterization)") {
  // For affine-plane heights the area Jacobian is the w-weighted Laplacian:
  // dA_i/dh_j = -w_ij for neighbors and dA_i/dh_i = sum_j w_ij. Power heights
  // carry a factor 2, so the probe steps the power height by 2*delta.
  Rng rng(31009);
  const ConvexPolygon domain = disk_domain();
  const double delta = 1e-5;
  int instances = 0;
  while (instances < 10) {
    std::vector<WeightedSite> sites = random_sites(rng, 5, 0.02, 0.3);
    const PowerDiagram diagram = build_power_diagram(sites, domain);
    if (diagram.edges.size() < 4) continue;
    auto fd_area = [&](int cell, int moved) {
      std::vector<WeightedSite> up = sites;
      up[static_cast<size_t>(moved)].height += 2.0 * delta;
      std::vector<WeightedSite> down = sites;
      down[static_cast<size_t>(moved)].height -= 2.0 * delta;
      return (build_power_diagram(up, domain).areas[static_cast<size_t>(cell)] -
              build_power_diagram(down, domain).areas[static_cast<size_t>(cell)]) /
             (2.0 * delta);
    };
    bool checked_any = false;
    std::vector<double> degree(5, 0.0);
    for (const DiagramEdge& e : diagram.edges) {
      degree[static_cast<size_t>(e.i)] += e.weight;
      degree[static_cast<size_t>(e.j)] += e.weight;
      if (e.weight < 0.01) continue;  // relative check ill-conditioned near 0
      CHECK(std::abs(fd_area(e.i, e.j) + e.weight) <= 5e-3 * e.weight);
      checked_any = true;
    }
    for (int j = 0; j < 5; ++j)
      CHECK(std::abs(fd_area(j, j) - degree[static_cast<size_t>(j)]) <=
            5e-3 * degree[static_cast<size_t>(j)]);
    if (checked_any) ++instances;
  }
}

TEST_CASE("transport_cost: pinned values and second-traversal oracle") {
  SUBCASE("terminal on its station costs nothing") {
    const std::vector<Terminal> terminals{{{0.5, 0.5}, 1.0}};
    const std::vector<Point> stations{{0.5, 0.5}};
    Assignment a;
    a.owner = {0};
    a.loads = {1.0};
    CHECK(transport_cost(a, terminals, stations, 2.0) == 0.0);
  }
  SUBCASE("unit mass at distance 5") {
    const std::vector<Terminal> terminals{{{0, 0}, 1.0}};
    const std::vector<Point> stations{{3, 4}};
    Assignment a;
    a.owner = {0};
    a.loads = {1.0};
    CHECK(transport_cost(a, terminals, stations, 2.0) == doctest::Approx(25.0));
  }
  SUBCASE("matches per-station member sums") {
    Rng rng(31010);
    std::vector<WeightedSite> sites = random_sites(rng, 5);
    std::vector<Terminal> terminals = random_terminals(rng, 200);
    const Assignment a = assign(terminals, sites, 2.0);
    double by_station = 0.0;
    for (size_t j = 0; j < sites.size(); ++j)
      for (size_t i = 0; i < terminals.size(); ++i)
        if (a.owner[i] == static_cast<int>(j))
          by_station += terminals[i].mass * dist2(terminals[i].position, sites[j].position);
    CHECK(a.cost == doctest::Approx(by_station).epsilon(1e-12));
    CHECK(transport_cost(a, terminals, positions_of(sites), 2.0) ==
          doctest::Approx(by_station).epsilon(1e-12));
  }
}
