#include "optran/driver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "optran/oracle.hpp"

namespace optran {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct StaticInstance {
  std::vector<Terminal> terminals;
  std::vector<Point> stations;
  std::vector<double> caps;
};

StaticInstance first_snapshot(const LoadedScenario& loaded) {
  const Scenario& sc = loaded.scenario;
  StaticInstance inst;
  inst.terminals.reserve(sc.terminals.size());
  for (const MovingTerminal& t : sc.terminals) inst.terminals.push_back({t.position, t.mass});
  inst.stations.reserve(sc.stations.size());
  inst.caps.reserve(sc.stations.size());
  for (const MovingStation& s : sc.stations) {
    inst.stations.push_back(s.position);
    inst.caps.push_back(s.cap);
  }
  return inst;
}

std::string status_name(SolveStatus status) {
  return status == SolveStatus::Converged ? "converged" : "max-iterations";
}

}  // namespace

CsvTable trace_to_csv(const SolveTrace& trace, double cost_unscale) {
  CsvTable table({"iteration", "mse", "cost", "step", "source", "damps"});
  for (const IterationRecord& rec : trace.iterations) {
    table.add_row({std::to_string(rec.iteration), fmt_sig12(rec.mse),
                   fmt_sig12(rec.cost * cost_unscale), fmt_sig12(rec.step),
                   direction_source_name(rec.source), std::to_string(rec.damp_halvings)});
  }
  return table;
}

SolveRun run_solve(const LoadedScenario& loaded) {
  const StaticInstance inst = first_snapshot(loaded);
  const auto t0 = Clock::now();
  SolveResult result = solve(inst.terminals, inst.stations, inst.caps,
                             loaded.scenario.domain, loaded.scenario.solver);
  SolveRun run;
  run.wall_ms = ms_since(t0);
  const double unscale = 1.0 / loaded.transform.cost_factor(loaded.scenario.solver.alpha);
  run.cost_original = result.assignment.cost * unscale;
  run.trace = trace_to_csv(result.trace, unscale);
  run.result = std::move(result);
  return run;
}

KineticRun run_kinetic(const LoadedScenario& loaded, const KineticOptions& options) {
  const double unscale = 1.0 / loaded.transform.cost_factor(loaded.scenario.solver.alpha);
  KineticRun run;
  run.table = CsvTable({"snapshot", "t", "resolved", "outer_iters", "mse", "cost",
                        "max_overload", "changed_terminals", "wall_ms"});
  run.snapshots = kinetic_solve(loaded.scenario, options);
  run.changes = count_changes(run.snapshots);
  std::vector<double> caps;
  caps.reserve(loaded.scenario.stations.size());
  for (const MovingStation& st : loaded.scenario.stations) caps.push_back(st.cap);
  for (size_t s = 0; s < run.snapshots.size(); ++s) {
    const SnapshotResult& r = run.snapshots[s];
    const double mse_final = residual_mse(residual(r.assignment, caps));
    run.total_outer_iterations += static_cast<long>(r.trace.iterations.size());
    run.resolved_count += r.resolved ? 1 : 0;
    run.table.add_row({std::to_string(s), fmt_sig12(r.t), r.resolved ? "1" : "0",
                       std::to_string(r.trace.iterations.size()), fmt_sig12(mse_final),
                       fmt_sig12(r.assignment.cost * unscale), fmt_sig12(r.max_overload),
                       std::to_string(r.changed_terminals), fmt_sig12(r.wall_ms)});
  }
  return run;
}

std::vector<CompareRow> run_compare(const LoadedScenario& loaded, std::int64_t oracle_scale) {
  const StaticInstance inst = first_snapshot(loaded);
  const int n = static_cast<int>(inst.terminals.size());
  const int k = static_cast<int>(inst.stations.size());
  const double alpha = loaded.scenario.solver.alpha;
  const double unscale = 1.0 / loaded.transform.cost_factor(alpha);

  std::vector<CompareRow> rows;
  std::optional<double> oracle_cost;

  {
    CompareRow row;
    row.method = "oracle-flow";
    row.n = n;
    row.k = k;
    const auto t0 = Clock::now();
    try {
      OracleResult oracle = exact_assignment(inst.terminals, inst.stations, inst.caps, alpha, oracle_scale);
      row.wall_ms = ms_since(t0);
      row.cost = oracle.cost * unscale;
      row.gap_vs_oracle = 0.0;
      row.status = "optimal";
      oracle_cost = oracle.cost;
    } catch (const OracleError& e) {
      row.wall_ms = ms_since(t0);
      row.status = std::string("rejected: ") + e.what();
    }
    rows.push_back(std::move(row));
  }

  for (const Method method : {Method::NewtonDirect, Method::GradientDescent}) {
    CompareRow row;
    row.method = method == Method::NewtonDirect ? "optran-newton" : "optran-gd";
    row.n = n;
    row.k = k;
    SolverConfig cfg = loaded.scenario.solver;
    cfg.method = method;
    const auto t0 = Clock::now();
    SolveResult result = solve(inst.terminals, inst.stations, inst.caps,
                               loaded.scenario.domain, cfg);
    row.wall_ms = ms_since(t0);
    row.cost = result.assignment.cost * unscale;
    row.iterations = result.outer_iterations();
    row.status = status_name(result.trace.status);
    if (oracle_cost && *oracle_cost > 0.0)
      row.gap_vs_oracle = (result.assignment.cost - *oracle_cost) / *oracle_cost;
    rows.push_back(std::move(row));
  }
  return rows;
}

CsvTable compare_to_csv(const std::vector<CompareRow>& rows) {
  CsvTable table({"method", "n", "k", "cost", "gap_vs_oracle", "iters", "status", "wall_ms"});
  for (const CompareRow& row : rows) {
    table.add_row({row.method, std::to_string(row.n), std::to_string(row.k),
                   row.cost ? fmt_sig12(*row.cost) : "",
                   row.gap_vs_oracle ? fmt_sig12(*row.gap_vs_oracle) : "",
                   std::to_string(row.iterations), row.status, fmt_sig12(row.wall_ms)});
  }
  return table;
}

std::vector<BenchRow> run_bench(const BenchOptions& options) {
  std::vector<BenchRow> rows;
  for (const int n : options.terminal_counts) {
    for (const int k : options.station_counts) {
      GenOptions gen;
      gen.n = n;
      gen.k = k;
      gen.dist = "uniform";
      // Fixed per-cell seed so every method sees the same instance.
      gen.seed = options.seed * 1000003ULL + static_cast<std::uint64_t>(n) * 131ULL +
                 static_cast<std::uint64_t>(k);
      gen.solver.stop_dw = options.dw;
      gen.solver.alpha = options.alpha;
      LoadedScenario loaded;
      try {
        loaded = realize_scenario(generate_scenario(gen));
      } catch (const std::exception& e) {
        for (const std::string& m : options.methods) {
          BenchRow row;
          row.method = m;
          row.n = n;
          row.k = k;
          row.status = std::string("generation failed: ") + e.what();
          rows.push_back(std::move(row));
        }
        continue;
      }
      const StaticInstance inst = first_snapshot(loaded);
      const double unscale = 1.0 / loaded.transform.cost_factor(options.alpha);

      for (const std::string& method : options.methods) {
        BenchRow row;
        row.method = method;
        row.n = n;
        row.k = k;
        try {
          if (method == "oracle") {
            const auto t0 = Clock::now();
            OracleResult oracle =
                exact_assignment(inst.terminals, inst.stations, inst.caps, options.alpha);
            row.wall_ms = ms_since(t0);
            row.cost = oracle.cost * unscale;
            row.status = "optimal";
          } else {
            SolverConfig cfg = loaded.scenario.solver;
            cfg.method = method == "gd" ? Method::GradientDescent : Method::NewtonDirect;
            if (cfg.method == Method::GradientDescent) {
              cfg.step = options.gd_step;
              cfg.max_outer = options.gd_max_outer;
            }
            double best_ms = std::numeric_limits<double>::infinity();
            SolveResult result;
            for (int rep = 0; rep < std::max(1, options.reps); ++rep) {
              const auto t0 = Clock::now();
              result = solve(inst.terminals, inst.stations, inst.caps,
                             loaded.scenario.domain, cfg);
              best_ms = std::min(best_ms, ms_since(t0));
            }
            row.wall_ms = best_ms;
            row.cost = result.assignment.cost * unscale;
            row.iterations = result.outer_iterations();
            row.status = status_name(result.trace.status);
          }
        } catch (const std::exception& e) {
          row.status = std::string("failed: ") + e.what();
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

CsvTable bench_to_csv(const std::vector<BenchRow>& rows) {
  CsvTable table({"method", "n", "k", "iters", "cost", "status", "wall_ms"});
  for (const BenchRow& row : rows) {
    table.add_row({row.method, std::to_string(row.n), std::to_string(row.k),
                   std::to_string(row.iterations), row.cost ? fmt_sig12(*row.cost) : "",
                   row.status, fmt_sig12(row.wall_ms)});
  }
  return table;
}

}  // namespace optran
