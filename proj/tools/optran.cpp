#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "optran/driver.hpp"
#include "optran/oracle.hpp"
#include "optran/scenario.hpp"

namespace {

// Exit codes: 0 ok/converged, 2 usage, 3 parse, 4 solver non-convergence,
// 5 oracle infeasible/rejected.
constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitNoConverge = 4;
constexpr int kExitOracle = 5;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverOverrides {
  std::optional<std::string> method;
  std::optional<double> dw;
  std::optional<double> eps;
  std::optional<double> alpha;
  std::optional<int> max_outer;
  std::optional<double> tolerance;

  void attach(CLI::App* cmd) {
    cmd->add_option("--method", method, "newton-direct | newton-jacobi | gradient-descent");
    cmd->add_option("--dw", dw, "stopping MSE on capacity residuals");
    cmd->add_option("--eps", eps, "step length in (0, 1]");
    cmd->add_option("--alpha", alpha, "cost exponent (>= 1)");
    cmd->add_option("--max-outer", max_outer, "outer iteration cap");
    cmd->add_option("--tolerance", tolerance, "kinetic capacity tolerance in [0, 1)");
  }

  void apply(optran::ScenarioSpec& spec) const {
    if (method) {
      const auto m = optran::parse_method(*method);
      if (!m) throw optran::ParseError("unknown method '" + *method + "'");
      spec.solver.method = *m;
    }
    if (dw) spec.solver.stop_dw = *dw;
    if (eps) spec.solver.step = *eps;
    if (alpha) spec.solver.alpha = *alpha;
    if (max_outer) spec.solver.max_outer = *max_outer;
    if (tolerance) {
      if (!spec.kinetic) spec.kinetic = optran::KineticSpec{};
      spec.kinetic->tolerance = *tolerance;
    }
  }
};

std::vector<int> parse_sweep(const std::string& text) {
  // "100,1000,8000" or "2..64" (doubling steps, end included).
  try {
    std::vector<int> values;
    if (const auto dots = text.find(".."); dots != std::string::npos) {
      const int lo = std::stoi(text.substr(0, dots));
      const int hi = std::stoi(text.substr(dots + 2));
      if (lo < 1 || hi < lo) throw UsageError("bad sweep range '" + text + "'");
      for (int v = lo; v < hi; v *= 2) values.push_back(v);
      values.push_back(hi);
      return values;
    }
    size_t start = 0;
    while (start < text.size()) {
      const size_t comma = text.find(',', start);
      const std::string cell =
          text.substr(start, comma == std::string::npos ? comma : comma - start);
      values.push_back(std::stoi(cell));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (values.empty()) throw UsageError("empty sweep '" + text + "'");
    return values;
  } catch (const std::logic_error&) {
    throw UsageError("cannot parse sweep '" + text + "'");
  }
}

int cmd_gen(const std::string& out_path, const optran::GenOptions& options) {
  const optran::ScenarioSpec spec = optran::generate_scenario(options);
  optran::write_scenario_file(spec, out_path);
  std::cout << "wrote " << out_path << " (n=" << options.n << ", k=" << options.k
            << ", dist=" << options.dist << ", seed=" << options.seed << ")\n";
  return 0;
}

int cmd_solve(const std::string& scenario_path, const SolverOverrides& overrides,
              const std::string& out_path) {
  optran::ScenarioSpec spec = optran::load_scenario_file(scenario_path);
  overrides.apply(spec);
  const optran::LoadedScenario loaded = optran::realize_scenario(spec);
  const optran::SolveRun run = optran::run_solve(loaded);
  if (!out_path.empty()) run.trace.write_file(out_path);

  std::vector<double> caps;
  for (const auto& s : loaded.scenario.stations) caps.push_back(s.cap);
  const double mse = optran::residual_mse(optran::residual(run.result.assignment, caps));
  std::cout << "method=" << optran::method_name(spec.solver.method)
            << " n=" << loaded.terminal_count << " k=" << loaded.station_count
            << " status=" << (run.result.converged() ? "converged" : "max-iterations")
            << " iters=" << run.result.outer_iterations()
            << " cost=" << optran::fmt_sig12(run.cost_original)
            << " mse=" << optran::fmt_sig12(mse)
            << " wall_ms=" << optran::fmt_sig12(run.wall_ms) << "\n";
  return run.result.converged() ? 0 : kExitNoConverge;
}

int cmd_kinetic(const std::string& scenario_path, const SolverOverrides& overrides,
                const std::string& out_path, bool no_warm_start) {
  optran::ScenarioSpec spec = optran::load_scenario_file(scenario_path);
  overrides.apply(spec);
  if (!spec.kinetic) throw optran::ParseError("scenario has no kinetic block");
  const optran::LoadedScenario loaded = optran::realize_scenario(spec);
  optran::KineticOptions options;
  options.warm_start = !no_warm_start;
  const optran::KineticRun run = optran::run_kinetic(loaded, options);
  if (!out_path.empty()) run.table.write_file(out_path);

  std::cout << "snapshots=" << run.snapshots.size()
            << " resolved=" << run.resolved_count
            << " total_outer_iters=" << run.total_outer_iterations
            << " ownership_changes=" << run.changes.total << "\n";
  for (const auto& snap : run.snapshots)
    if (snap.resolved && snap.trace.status != optran::SolveStatus::Converged)
      return kExitNoConverge;
  return 0;
}

int cmd_compare(const std::string& scenario_path, const SolverOverrides& overrides,
                const std::string& out_path, std::int64_t scale) {
  optran::ScenarioSpec spec = optran::load_scenario_file(scenario_path);
  overrides.apply(spec);
  const optran::LoadedScenario loaded = optran::realize_scenario(spec);
  const std::vector<optran::CompareRow> rows = optran::run_compare(loaded, scale);
  const optran::CsvTable table = optran::compare_to_csv(rows);
  if (!out_path.empty()) table.write_file(out_path);
  std::cout << table.to_string();
  for (const auto& row : rows)
    if (row.method == "oracle-flow" && row.status != "optimal") return kExitOracle;
  return 0;
}

int cmd_bench(const optran::BenchOptions& options, const std::string& out_path) {
  const std::vector<optran::BenchRow> rows = optran::run_bench(options);
  const optran::CsvTable table = optran::bench_to_csv(rows);
  if (!out_path.empty()) table.write_file(out_path);
  std::cout << table.to_string();
  for (const auto& row : rows)
    if (row.status != "optimal" && row.status != "converged" && row.status != "max-iterations")
      return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacitated clustering by power-diagram transport"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a scenario file");
  optran::GenOptions gen_options;
  std::string gen_out = "scenario.json";
  std::uint64_t gen_seed = 0;
  int gen_snapshots = -1;
  double gen_tolerance = -1.0;
  gen->add_option("--n", gen_options.n, "terminal count")->required();
  gen->add_option("--k", gen_options.k, "station count")->required();
  gen->add_option("--dist", gen_options.dist, "uniform | perturbed-grid | train");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--motion", gen_options.motion, "none | linear");
  gen->add_option("--mass", gen_options.mass, "unit | random");
  gen->add_option("--segments", gen_options.disk_segments, "disk polygon segments");
  gen->add_option("--snapshots", gen_snapshots, "kinetic snapshot count");
  gen->add_option("--tolerance", gen_tolerance, "kinetic capacity tolerance");
  gen->add_option("--train-fraction", gen_options.train_fraction);
  gen->add_option("--train-width", gen_options.train_width);
  gen->add_option("--train-length", gen_options.train_length);
  std::optional<std::string> gen_method;
  std::optional<double> gen_dw, gen_eps, gen_alpha;
  gen->add_option("--method", gen_method);
  gen->add_option("--dw", gen_dw);
  gen->add_option("--eps", gen_eps);
  gen->add_option("--alpha", gen_alpha);
  gen->add_option("--out", gen_out, "output path");

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "solve one snapshot, write the iteration trace");
  std::string solve_path, solve_out;
  SolverOverrides solve_overrides;
  solve_cmd->add_option("scenario", solve_path, "scenario JSON path")->required();
  solve_cmd->add_option("--out", solve_out, "trace CSV path");
  solve_overrides.attach(solve_cmd);

  // kinetic
  auto* kinetic_cmd = app.add_subcommand("kinetic", "run the snapshot sequence");
  std::string kinetic_path, kinetic_out;
  bool no_warm_start = false;
  SolverOverrides kinetic_overrides;
  kinetic_cmd->add_option("scenario", kinetic_path, "scenario JSON path")->required();
  kinetic_cmd->add_option("--out", kinetic_out, "per-snapshot CSV path");
  kinetic_cmd->add_flag("--no-warm-start", no_warm_start, "cold start every snapshot");
  kinetic_overrides.attach(kinetic_cmd);

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "solver vs exact flow oracle");
  std::string compare_path, compare_out;
  std::int64_t compare_scale = 1000000;
  SolverOverrides compare_overrides;
  compare_cmd->add_option("scenario", compare_path, "scenario JSON path")->required();
  compare_cmd->add_option("--out", compare_out, "comparison CSV path");
  compare_cmd->add_option("--scale", compare_scale, "oracle mass integerization scale");
  compare_overrides.attach(compare_cmd);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "seeded sweep over n and k");
  std::string bench_n = "1000", bench_k = "8", bench_methods = "newton", bench_out;
  optran::BenchOptions bench_options;
  bench_cmd->add_option("--n", bench_n, "e.g. 1000,2000,4000 or 1000..8000");
  bench_cmd->add_option("--k", bench_k, "e.g. 8 or 2..64");
  bench_cmd->add_option("--methods", bench_methods, "comma list of newton,gd,oracle");
  bench_cmd->add_option("--seed", bench_options.seed);
  bench_cmd->add_option("--dw", bench_options.dw);
  bench_cmd->add_option("--alpha", bench_options.alpha);
  bench_cmd->add_option("--reps", bench_options.reps, "repetitions per solver cell");
  bench_cmd->add_option("--out", bench_out, "CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      gen_options.seed = gen_seed;
      if (gen_snapshots > 0) gen_options.snapshots = gen_snapshots;
      if (gen_tolerance >= 0.0) gen_options.tolerance = gen_tolerance;
      if (gen_method) {
        const auto m = optran::parse_method(*gen_method);
        if (!m) throw optran::ParseError("unknown method '" + *gen_method + "'");
        gen_options.solver.method = *m;
      }
      if (gen_dw) gen_options.solver.stop_dw = *gen_dw;
      if (gen_eps) gen_options.solver.step = *gen_eps;
      if (gen_alpha) gen_options.solver.alpha = *gen_alpha;
      return cmd_gen(gen_out, gen_options);
    }
    if (solve_cmd->parsed()) return cmd_solve(solve_path, solve_overrides, solve_out);
    if (kinetic_cmd->parsed())
      return cmd_kinetic(kinetic_path, kinetic_overrides, kinetic_out, no_warm_start);
    if (compare_cmd->parsed())
      return cmd_compare(compare_path, compare_overrides, compare_out, compare_scale);
    if (bench_cmd->parsed()) {
      bench_options.terminal_counts = parse_sweep(bench_n);
      bench_options.station_counts = parse_sweep(bench_k);
      bench_options.methods.clear();
      size_t start = 0;
      while (start < bench_methods.size()) {
        const size_t comma = bench_methods.find(',', start);
        bench_options.methods.push_back(
            bench_methods.substr(start, comma == std::string::npos ? comma : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      return cmd_bench(bench_options, bench_out);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const optran::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const optran::OracleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOracle;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
