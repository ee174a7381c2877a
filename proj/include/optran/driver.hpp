#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "optran/kinetic.hpp"
#include "optran/results_io.hpp"
#include "optran/scenario.hpp"

namespace optran {

/// One-shot solve on the first snapshot of a loaded scenario. Costs in the
/// CSV and summary are reported in the scenario's original units.
struct SolveRun {
  SolveResult result;
  double cost_original = 0.0;
  double wall_ms = 0.0;
  CsvTable trace = CsvTable({});
};

SolveRun run_solve(const LoadedScenario& loaded);

CsvTable trace_to_csv(const SolveTrace& trace, double cost_unscale);

struct KineticRun {
  std::vector<SnapshotResult> snapshots;
  ChangeCounts changes;
  long total_outer_iterations = 0;
  int resolved_count = 0;
  CsvTable table = CsvTable({});
};

KineticRun run_kinetic(const LoadedScenario& loaded, const KineticOptions& options = {});

struct CompareRow {
  std::string method;  // optran-newton | optran-gd | oracle-flow
  int n = 0;
  int k = 0;
  std::optional<double> cost;           // original units
  std::optional<double> gap_vs_oracle;  // (cost - oracle) / oracle
  long iterations = 0;
  std::string status;
  double wall_ms = 0.0;
};

std::vector<CompareRow> run_compare(const LoadedScenario& loaded,
                                    std::int64_t oracle_scale = 1000000);

CsvTable compare_to_csv(const std::vector<CompareRow>& rows);

struct BenchOptions {
  std::vector<int> terminal_counts{1000};
  std::vector<int> station_counts{8};
  std::vector<std::string> methods{"newton"};  // newton | gd | oracle
  std::uint64_t seed = 1;
  double dw = 1e-4;
  double alpha = 2.0;
  int reps = 3;           // fastest of reps is reported for the solver methods
  double gd_step = 0.01;  // descent step for gd cells; newton keeps step 1
  int gd_max_outer = 500000;
};

struct BenchRow {
  std::string method;
  int n = 0;
  int k = 0;
  long iterations = 0;
  std::optional<double> cost;
  std::string status;
  double wall_ms = 0.0;
};

/// Seeded sweep over (n, k) cells; one row per method per cell.
std::vector<BenchRow> run_bench(const BenchOptions& options);

CsvTable bench_to_csv(const std::vector<BenchRow>& rows);

}  // namespace optran
