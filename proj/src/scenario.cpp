#include "optran/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "optran/rng.hpp"

namespace optran {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ParseError("scenario: " + where + ": " + what);
}

const Json& require(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

double as_number(const Json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

int as_int(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<int>();
}

Point as_point(const Json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) fail(where, "expected [x, y]");
  return {as_number(v[0], where), as_number(v[1], where)};
}

Trajectory parse_trajectory(const Json& v, Point base, const std::string& where) {
  const std::string kind = require(v, "kind", where).get<std::string>();
  if (kind == "static") {
    Trajectory tr;
    tr.from = base;
    return tr;
  }
  if (kind == "linear") {
    return Trajectory::linear(base, as_point(require(v, "to", where), where + ".to"));
  }
  if (kind == "waypoints") {
    Trajectory tr;
    tr.kind = Trajectory::Kind::Waypoints;
    tr.from = base;
    const Json& pts = require(v, "points", where);
    if (!pts.is_array() || pts.size() < 2) fail(where, "waypoints need >= 2 [t, x, y] entries");
    double last_t = -1.0;
    for (const Json& e : pts) {
      if (!e.is_array() || e.size() != 3) fail(where, "waypoint entries are [t, x, y]");
      const double t = as_number(e[0], where);
      if (t <= last_t) fail(where, "waypoint times must be strictly increasing");
      last_t = t;
      tr.waypoints.push_back({t, Point{as_number(e[1], where), as_number(e[2], where)}});
    }
    return tr;
  }
  fail(where, "unknown trajectory kind '" + kind + "'");
}

Json trajectory_to_json(const Trajectory& tr) {
  Json v;
  switch (tr.kind) {
    case Trajectory::Kind::Static:
      v["kind"] = "static";
      break;
    case Trajectory::Kind::Linear:
      v["kind"] = "linear";
      v["to"] = {tr.to.x, tr.to.y};
      break;
    case Trajectory::Kind::Waypoints: {
      v["kind"] = "waypoints";
      Json pts = Json::array();
      for (const auto& [t, p] : tr.waypoints) pts.push_back({t, p.x, p.y});
      v["points"] = std::move(pts);
      break;
    }
  }
  return v;
}

GeneratorSpec parse_generator(const Json& v) {
  GeneratorSpec gen;
  gen.kind = require(v, "kind", "terminals").get<std::string>();
  if (gen.kind != "uniform" && gen.kind != "perturbed-grid" && gen.kind != "train")
    fail("terminals", "unknown generator kind '" + gen.kind + "'");
  gen.n = as_int(require(v, "n", "terminals"), "terminals.n");
  if (gen.n < 1) fail("terminals", "generator needs n >= 1");
  gen.seed = require(v, "seed", "terminals").get<std::uint64_t>();
  if (v.contains("motion")) gen.motion = v["motion"].get<std::string>();
  if (gen.motion != "none" && gen.motion != "linear")
    fail("terminals", "unknown motion '" + gen.motion + "'");
  if (v.contains("mass")) gen.mass = v["mass"].get<std::string>();
  if (gen.mass != "unit" && gen.mass != "random")
    fail("terminals", "unknown mass model '" + gen.mass + "'");
  if (v.contains("jitter")) gen.jitter = as_number(v["jitter"], "terminals.jitter");
  if (v.contains("train_fraction"))
    gen.train_fraction = as_number(v["train_fraction"], "terminals.train_fraction");
  if (v.contains("train_width")) gen.train_width = as_number(v["train_width"], "terminals.train_width");
  if (v.contains("train_length")) gen.train_length = as_number(v["train_length"], "terminals.train_length");
  if (v.contains("train_x0")) gen.train_x0 = as_number(v["train_x0"], "terminals.train_x0");
  if (v.contains("train_x1")) gen.train_x1 = as_number(v["train_x1"], "terminals.train_x1");
  return gen;
}

Json generator_to_json(const GeneratorSpec& gen) {
  Json v;
  v["kind"] = gen.kind;
  v["n"] = gen.n;
  v["seed"] = gen.seed;
  if (gen.kind == "perturbed-grid") v["jitter"] = gen.jitter;
  if (gen.kind == "train") {
    v["train_fraction"] = gen.train_fraction;
    v["train_width"] = gen.train_width;
    v["train_length"] = gen.train_length;
    v["train_x0"] = gen.train_x0;
    v["train_x1"] = gen.train_x1;
  } else {
    v["motion"] = gen.motion;
    v["mass"] = gen.mass;
  }
  return v;
}

SolverConfig parse_solver(const Json& v) {
  SolverConfig cfg;
  if (v.contains("method")) {
    const std::string name = v["method"].get<std::string>();
    const auto method = parse_method(name);
    if (!method) fail("solver.method", "unknown method '" + name + "'");
    cfg.method = *method;
  }
  if (v.contains("eps")) cfg.step = as_number(v["eps"], "solver.eps");
  if (v.contains("dw")) cfg.stop_dw = as_number(v["dw"], "solver.dw");
  if (v.contains("alpha")) cfg.alpha = as_number(v["alpha"], "solver.alpha");
  if (v.contains("max_outer")) cfg.max_outer = as_int(v["max_outer"], "solver.max_outer");
  if (v.contains("jacobi_tol")) cfg.jacobi_tol = as_number(v["jacobi_tol"], "solver.jacobi_tol");
  if (v.contains("jacobi_max_inner"))
    cfg.jacobi_max_inner = as_int(v["jacobi_max_inner"], "solver.jacobi_max_inner");
  if (!(cfg.step > 0.0 && cfg.step <= 1.0)) fail("solver.eps", "must lie in (0, 1]");
  if (!(cfg.stop_dw > 0.0)) fail("solver.dw", "must be > 0");
  if (!(cfg.alpha >= 1.0)) fail("solver.alpha", "must be >= 1");
  if (cfg.max_outer < 1) fail("solver.max_outer", "must be >= 1");
  return cfg;
}

Json solver_to_json(const SolverConfig& cfg) {
  Json v;
  v["method"] = method_name(cfg.method);
  v["eps"] = cfg.step;
  v["dw"] = cfg.stop_dw;
  v["alpha"] = cfg.alpha;
  v["max_outer"] = cfg.max_outer;
  v["jacobi_tol"] = cfg.jacobi_tol;
  v["jacobi_max_inner"] = cfg.jacobi_max_inner;
  return v;
}

struct BBox {
  double min_x, min_y, max_x, max_y;
};

BBox bbox_of(const ConvexPolygon& poly) {
  BBox b{poly.vertices[0].x, poly.vertices[0].y, poly.vertices[0].x, poly.vertices[0].y};
  for (const Point& p : poly.vertices) {
    b.min_x = std::min(b.min_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_x = std::max(b.max_x, p.x);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

Point sample_in_polygon(Rng& rng, const ConvexPolygon& poly, const BBox& b) {
  for (;;) {
    const Point p{rng.uniform(b.min_x, b.max_x), rng.uniform(b.min_y, b.max_y)};
    if (point_in_polygon(p, poly, 0.0)) return p;
  }
}

double draw_mass(Rng& rng, const std::string& model) {
  return model == "random" ? rng.uniform(0.5, 1.5) : 1.0;
}

std::vector<TerminalSpec> expand_generator(const GeneratorSpec& gen,
                                           const ConvexPolygon& domain) {
  Rng rng(gen.seed);
  const BBox box = bbox_of(domain);
  std::vector<TerminalSpec> out;
  out.reserve(static_cast<size_t>(gen.n));

  auto add_motion = [&](TerminalSpec& t) {
    if (gen.motion == "linear")
      t.trajectory = Trajectory::linear(t.pos, sample_in_polygon(rng, domain, box));
  };

  if (gen.kind == "uniform") {
    for (int i = 0; i < gen.n; ++i) {
      TerminalSpec t;
      t.pos = sample_in_polygon(rng, domain, box);
      t.mass = draw_mass(rng, gen.mass);
      add_motion(t);
      out.push_back(std::move(t));
    }
  } else if (gen.kind == "perturbed-grid") {
    // Smallest jittered g x g bbox grid with at least n points inside the
    // domain; points taken in row-major order.
    for (int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(gen.n))));; ++g) {
      Rng grid_rng(gen.seed);
      std::vector<Point> inside;
      const double sx = (box.max_x - box.min_x) / g;
      const double sy = (box.max_y - box.min_y) / g;
      for (int r = 0; r < g; ++r)
        for (int c = 0; c < g; ++c) {
          const double jx = grid_rng.uniform(-0.5, 0.5) * gen.jitter * sx;
          const double jy = grid_rng.uniform(-0.5, 0.5) * gen.jitter * sy;
          const Point p{box.min_x + (c + 0.5) * sx + jx, box.min_y + (r + 0.5) * sy + jy};
          if (point_in_polygon(p, domain, 0.0)) inside.push_back(p);
        }
      if (static_cast<int>(inside.size()) < gen.n) continue;
      for (int i = 0; i < gen.n; ++i) {
        TerminalSpec t;
        t.pos = inside[static_cast<size_t>(i)];
        t.mass = draw_mass(grid_rng, gen.mass);
        if (gen.motion == "linear")
          t.trajectory = Trajectory::linear(t.pos, sample_in_polygon(grid_rng, domain, box));
        out.push_back(std::move(t));
      }
      break;
    }
  } else {  // train
    const int n_train = static_cast<int>(std::lround(gen.train_fraction * gen.n));
    const int n_bg = gen.n - n_train;
    for (int i = 0; i < n_bg; ++i) {
      TerminalSpec t;
      t.pos = sample_in_polygon(rng, domain, box);
      out.push_back(std::move(t));
    }
    const double dx = gen.train_x1 - gen.train_x0;
    for (int i = 0; i < n_train; ++i) {
      TerminalSpec t;
      t.pos = {gen.train_x0 + rng.uniform(-0.5, 0.5) * gen.train_length,
               rng.uniform(-0.5, 0.5) * gen.train_width};
      t.trajectory = Trajectory::linear(t.pos, t.pos + Point{dx, 0.0});
      out.push_back(std::move(t));
    }
  }
  return out;
}

Trajectory transformed(const Trajectory& tr, const Similarity& map) {
  Trajectory out = tr;
  out.from = map.apply(tr.from);
  out.to = map.apply(tr.to);
  for (auto& [t, p] : out.waypoints) p = map.apply(p);
  return out;
}

}  // namespace

ScenarioSpec parse_scenario(const std::string& json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("scenario: invalid JSON: ") + e.what());
  }
  ScenarioSpec spec;
  spec.schema_version = as_int(require(root, "schema_version", "root"), "schema_version");
  if (spec.schema_version != 1) fail("schema_version", "unsupported version");

  const Json& dom = require(root, "domain", "root");
  if (dom.contains("disk")) {
    DiskDomainSpec disk;
    const Json& d = dom["disk"];
    if (d.contains("segments")) disk.segments = as_int(d["segments"], "domain.disk.segments");
    if (d.contains("radius")) disk.radius = as_number(d["radius"], "domain.disk.radius");
    if (disk.segments < 3) fail("domain.disk.segments", "need >= 3");
    spec.domain = disk;
  } else if (dom.contains("polygon")) {
    ConvexPolygon poly;
    for (const Json& v : dom["polygon"]) poly.vertices.push_back(as_point(v, "domain.polygon"));
    try {
      validate_polygon(poly);
    } catch (const std::exception& e) {
      fail("domain.polygon", e.what());
    }
    spec.domain = std::move(poly);
  } else {
    fail("domain", "expected 'disk' or 'polygon'");
  }

  const Json& stations = require(root, "stations", "root");
  if (!stations.is_array() || stations.empty()) fail("stations", "expected a nonempty array");
  for (size_t j = 0; j < stations.size(); ++j) {
    const std::string where = "stations[" + std::to_string(j) + "]";
    const Json& s = stations[j];
    StationSpec st;
    st.pos = as_point(require(s, "pos", where), where + ".pos");
    st.cap = as_number(require(s, "cap", where), where + ".cap");
    if (!(st.cap > 0.0)) fail(where + ".cap", "must be > 0");
    if (s.contains("trajectory"))
      st.trajectory = parse_trajectory(s["trajectory"], st.pos, where + ".trajectory");
    spec.stations.push_back(std::move(st));
  }

  const Json& terminals = require(root, "terminals", "root");
  if (terminals.is_object()) {
    spec.terminals = parse_generator(terminals);
  } else if (terminals.is_array() && !terminals.empty()) {
    std::vector<TerminalSpec> list;
    for (size_t i = 0; i < terminals.size(); ++i) {
      const std::string where = "terminals[" + std::to_string(i) + "]";
      const Json& e = terminals[i];
      TerminalSpec t;
      t.pos = as_point(require(e, "pos", where), where + ".pos");
      if (e.contains("mass")) t.mass = as_number(e["mass"], where + ".mass");
      if (!(t.mass > 0.0)) fail(where + ".mass", "must be > 0");
      if (e.contains("trajectory"))
        t.trajectory = parse_trajectory(e["trajectory"], t.pos, where + ".trajectory");
      list.push_back(std::move(t));
    }
    spec.terminals = std::move(list);
  } else {
    fail("terminals", "expected a generator object or a nonempty array");
  }

  if (root.contains("solver")) spec.solver = parse_solver(root["solver"]);
  if (root.contains("kinetic")) {
    KineticSpec kin;
    const Json& k = root["kinetic"];
    kin.snapshots = as_int(require(k, "snapshots", "kinetic"), "kinetic.snapshots");
    if (kin.snapshots < 1) fail("kinetic.snapshots", "must be >= 1");
    if (k.contains("tolerance")) kin.tolerance = as_number(k["tolerance"], "kinetic.tolerance");
    if (!(kin.tolerance >= 0.0 && kin.tolerance < 1.0)) fail("kinetic.tolerance", "must lie in [0, 1)");
    spec.kinetic = kin;
  }
  return spec;
}

ScenarioSpec load_scenario_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const ScenarioSpec& spec) {
  Json root;
  root["schema_version"] = spec.schema_version;
  if (const auto* disk = std::get_if<DiskDomainSpec>(&spec.domain)) {
    root["domain"] = {{"disk", {{"segments", disk->segments}, {"radius", disk->radius}}}};
  } else {
    Json verts = Json::array();
    for (const Point& p : std::get<ConvexPolygon>(spec.domain).vertices)
      verts.push_back({p.x, p.y});
    root["domain"] = {{"polygon", std::move(verts)}};
  }
  Json stations = Json::array();
  for (const StationSpec& s : spec.stations) {
    Json v;
    v["pos"] = {s.pos.x, s.pos.y};
    v["cap"] = s.cap;
    if (s.trajectory) v["trajectory"] = trajectory_to_json(*s.trajectory);
    stations.push_back(std::move(v));
  }
  root["stations"] = std::move(stations);
  if (const auto* gen = std::get_if<GeneratorSpec>(&spec.terminals)) {
    root["terminals"] = generator_to_json(*gen);
  } else {
    Json list = Json::array();
    for (const TerminalSpec& t : std::get<std::vector<TerminalSpec>>(spec.terminals)) {
      Json v;
      v["pos"] = {t.pos.x, t.pos.y};
      v["mass"] = t.mass;
      if (t.trajectory) v["trajectory"] = trajectory_to_json(*t.trajectory);
      list.push_back(std::move(v));
    }
    root["terminals"] = std::move(list);
  }
  root["solver"] = solver_to_json(spec.solver);
  if (spec.kinetic) {
    root["kinetic"] = {{"snapshots", spec.kinetic->snapshots},
                       {"tolerance", spec.kinetic->tolerance}};
  }
  return root.dump(2) + "\n";
}

void write_scenario_file(const ScenarioSpec& spec, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << serialize_scenario(spec);
}

LoadedScenario realize_scenario(const ScenarioSpec& spec) {
  ConvexPolygon domain;
  if (const auto* disk = std::get_if<DiskDomainSpec>(&spec.domain))
    domain = regular_polygon(disk->segments, disk->radius);
  else
    domain = std::get<ConvexPolygon>(spec.domain);

  std::vector<TerminalSpec> terminals;
  if (const auto* gen = std::get_if<GeneratorSpec>(&spec.terminals))
    terminals = expand_generator(*gen, domain);
  else
    terminals = std::get<std::vector<TerminalSpec>>(spec.terminals);
  if (terminals.empty()) throw ParseError("scenario: no terminals");
  if (spec.stations.empty()) throw ParseError("scenario: no stations");

  std::vector<Point> station_positions;
  station_positions.reserve(spec.stations.size());
  for (const StationSpec& s : spec.stations) station_positions.push_back(s.pos);
  const Similarity map = normalize_to_unit_domain(station_positions, domain).transform;

  LoadedScenario out;
  out.transform = map;
  out.terminal_count = static_cast<int>(terminals.size());
  out.station_count = static_cast<int>(spec.stations.size());

  Scenario& sc = out.scenario;
  sc.domain.vertices.reserve(domain.vertices.size());
  for (const Point& v : domain.vertices) sc.domain.vertices.push_back(map.apply(v));

  double cap_sum = 0.0;
  for (const StationSpec& s : spec.stations) cap_sum += s.cap;
  double mass_sum = 0.0;
  for (const TerminalSpec& t : terminals) mass_sum += t.mass;

  for (const StationSpec& s : spec.stations) {
    MovingStation m;
    m.position = map.apply(s.pos);
    m.cap = s.cap / cap_sum;
    m.trajectory = s.trajectory ? transformed(*s.trajectory, map) : Trajectory{};
    if (m.trajectory.kind == Trajectory::Kind::Static) m.trajectory.from = m.position;
    sc.stations.push_back(std::move(m));
  }
  for (const TerminalSpec& t : terminals) {
    MovingTerminal m;
    m.position = map.apply(t.pos);
    m.mass = t.mass / mass_sum;
    m.trajectory = t.trajectory ? transformed(*t.trajectory, map) : Trajectory{};
    if (m.trajectory.kind == Trajectory::Kind::Static) m.trajectory.from = m.position;
    sc.terminals.push_back(std::move(m));
  }
  sc.solver = spec.solver;
  if (spec.kinetic) {
    sc.snapshots = spec.kinetic->snapshots;
    sc.tolerance = spec.kinetic->tolerance;
  }
  return out;
}

ScenarioSpec generate_scenario(const GenOptions& options) {
  if (options.n < 1) throw ParseError("gen: n must be >= 1");
  if (options.k < 1) throw ParseError("gen: k must be >= 1");
  if (options.dist != "uniform" && options.dist != "perturbed-grid" && options.dist != "train")
    throw ParseError("gen: unknown distribution '" + options.dist + "'");
  if (options.motion != "none" && options.motion != "linear")
    throw ParseError("gen: unknown motion '" + options.motion + "'");

  ScenarioSpec spec;
  spec.domain = DiskDomainSpec{options.disk_segments, 1.0};
  const ConvexPolygon domain = regular_polygon(options.disk_segments, 1.0);
  const BBox box = bbox_of(domain);

  // Station stream is separate from the terminal stream so that terminal
  // expansion stays stable when k changes.
  Rng rng(options.seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
  for (int j = 0; j < options.k; ++j) {
    StationSpec st;
    for (;;) {
      st.pos = sample_in_polygon(rng, domain, box);
      bool distinct = true;
      for (const StationSpec& other : spec.stations)
        if (dist(other.pos, st.pos) < 1e-9) distinct = false;
      if (distinct) break;
    }
    spec.stations.push_back(std::move(st));
  }
  // Equal capacities, stated in terminal counts when they divide evenly.
  const int base = options.n / options.k;
  const int extra = options.n % options.k;
  for (int j = 0; j < options.k; ++j)
    spec.stations[static_cast<size_t>(j)].cap = static_cast<double>(base + (j < extra ? 1 : 0));

  GeneratorSpec gen;
  gen.kind = options.dist;
  gen.n = options.n;
  gen.seed = options.seed;
  gen.motion = options.motion;
  gen.mass = options.mass;
  gen.train_fraction = options.train_fraction;
  gen.train_width = options.train_width;
  gen.train_length = options.train_length;
  spec.terminals = gen;

  spec.solver = options.solver;
  if (options.snapshots) {
    KineticSpec kin;
    kin.snapshots = *options.snapshots;
    kin.tolerance = options.tolerance.value_or(0.0);
    spec.kinetic = kin;
  }
  return spec;
}

}  // namespace optran
