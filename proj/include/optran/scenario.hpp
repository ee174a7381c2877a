#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "optran/kinetic.hpp"

namespace optran {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DiskDomainSpec {
  int segments = 64;
  double radius = 1.0;
};

struct TerminalSpec {
  Point pos{};
  double mass = 1.0;  // weight, normalized to a fraction at load time
  std::optional<Trajectory> trajectory;
};

struct StationSpec {
  Point pos{};
  double cap = 1.0;  // weight, normalized to a fraction at load time
  std::optional<Trajectory> trajectory;
};

/// Seeded terminal generator retained verbatim in the scenario file; expansion
/// at load time is deterministic.
struct GeneratorSpec {
  std::string kind = "uniform";  // uniform | perturbed-grid | train
  int n = 0;
  std::uint64_t seed = 0;
  std::string motion = "none";  // none | linear (random destination per terminal)
  std::string mass = "unit";    // unit | random
  double jitter = 0.4;          // perturbed-grid: fraction of the cell size
  double train_fraction = 0.4;  // train: share of terminals riding the train
  double train_width = 0.35;
  double train_length = 0.6;
  double train_x0 = -0.45;  // train center start/end
  double train_x1 = 0.45;
};

struct KineticSpec {
  int snapshots = 1;
  double tolerance = 0.0;
};

struct ScenarioSpec {
  int schema_version = 1;
  std::variant<DiskDomainSpec, ConvexPolygon> domain = DiskDomainSpec{};
  std::vector<StationSpec> stations;
  std::variant<GeneratorSpec, std::vector<TerminalSpec>> terminals = GeneratorSpec{};
  SolverConfig solver;
  std::optional<KineticSpec> kinetic;
};

/// Concrete, solver-ready scenario: masses and capacities normalized to
/// fractions, geometry mapped into the unit disk. `transform` un-normalizes
/// reported costs (divide by transform.cost_factor(alpha)).
struct LoadedScenario {
  Scenario scenario;
  Similarity transform;
  int terminal_count = 0;
  int station_count = 0;
};

ScenarioSpec parse_scenario(const std::string& json_text);
ScenarioSpec load_scenario_file(const std::string& path);
std::string serialize_scenario(const ScenarioSpec& spec);
void write_scenario_file(const ScenarioSpec& spec, const std::string& path);

/// Expands generators, normalizes masses/caps/geometry, validates.
LoadedScenario realize_scenario(const ScenarioSpec& spec);

/// Seeded scenario construction backing the `gen` command.
struct GenOptions {
  int n = 100;
  int k = 8;
  std::string dist = "uniform";  // uniform | perturbed-grid | train
  std::uint64_t seed = 0;
  std::string motion = "none";
  std::string mass = "unit";
  int disk_segments = 64;
  std::optional<int> snapshots;
  std::optional<double> tolerance;
  SolverConfig solver;
  double train_fraction = 0.4;
  double train_width = 0.35;
  double train_length = 0.6;
};

ScenarioSpec generate_scenario(const GenOptions& options);

}  // namespace optran
