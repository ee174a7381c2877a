#include "optran/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace optran {

namespace {

constexpr double kOnLineEps = 1e-12;   // distance below which a point sits on a bisector
constexpr double kMinSharedLen = 1e-12;  // shorter shared edges carry no meaningful weight

// Polygon boundary with provenance per edge: lab[t] is the index of the site
// whose bisector generated the edge vertices[t] -> vertices[t+1], or -1 for a
// piece of the original domain boundary.
struct LabeledRing {
  std::vector<Point> v;
  std::vector<int> lab;

  bool empty() const { return v.empty(); }
};

void drop_degenerate_vertices(LabeledRing& ring) {
  if (ring.v.size() < 2) return;
  LabeledRing out;
  const size_t n = ring.v.size();
  for (size_t t = 0; t < n; ++t) {
    const Point& cur = ring.v[t];
    if (!out.v.empty() && dist(out.v.back(), cur) < 1e-13) {
      // merged vertex: the surviving edge is the dropped vertex's outgoing one
      out.lab.back() = ring.lab[t];
      continue;
    }
    out.v.push_back(cur);
    out.lab.push_back(ring.lab[t]);
  }
  while (out.v.size() >= 2 && dist(out.v.front(), out.v.back()) < 1e-13) {
    out.v.pop_back();
    out.lab.pop_back();
  }
  if (out.v.size() < 3) {
    out.v.clear();
    out.lab.clear();
  }
  ring = std::move(out);
}

LabeledRing clip_ring(const LabeledRing& ring, const HalfPlane& hp, int new_label) {
  LabeledRing out;
  const size_t n = ring.v.size();
  if (n == 0) return out;
  for (size_t s = 0; s < n; ++s) {
    const Point p = ring.v[s];
    const Point q = ring.v[(s + 1) % n];
    const int lab = ring.lab[s];
    const double fp = hp.signed_distance(p);
    const double fq = hp.signed_distance(q);
    const bool in_p = fp <= kOnLineEps;
    const bool in_q = fq <= kOnLineEps;
    if (in_p && in_q) {
      out.v.push_back(p);
      out.lab.push_back(lab);
    } else if (in_p && !in_q) {
      out.v.push_back(p);
      out.lab.push_back(lab);
      const double t = fp / (fp - fq);
      out.v.push_back(p + t * (q - p));
      out.lab.push_back(new_label);  // boundary now runs along the clip line
    } else if (!in_p && in_q) {
      const double t = fp / (fp - fq);
      out.v.push_back(p + t * (q - p));
      out.lab.push_back(lab);
    }
  }
  drop_degenerate_vertices(out);
  return out;
}

// Half-plane of points whose power distance to site i is <= that to site j.
HalfPlane power_bisector(const WeightedSite& si, const WeightedSite& sj) {
  const Point d = sj.position - si.position;
  const double len = norm(2.0 * d);
  const double raw_offset =
      norm2(sj.position) - norm2(si.position) + si.height - sj.height;
  return HalfPlane{(1.0 / len) * (2.0 * d), raw_offset / len};
}

double ring_area(const LabeledRing& ring) {
  double a = 0.0;
  const size_t n = ring.v.size();
  for (size_t t = 0; t < n; ++t) a += cross(ring.v[t], ring.v[(t + 1) % n]);
  return 0.5 * a;
}

}  // namespace

double cell_area(const ConvexPolygon& poly) {
  const size_t n = poly.vertices.size();
  if (n < 3) return 0.0;
  double a = 0.0;
  for (size_t t = 0; t < n; ++t)
    a += cross(poly.vertices[t], poly.vertices[(t + 1) % n]);
  return 0.5 * a;
}

Point polygon_centroid(const ConvexPolygon& poly) {
  const size_t n = poly.vertices.size();
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (size_t t = 0; t < n; ++t) {
    const Point p = poly.vertices[t];
    const Point q = poly.vertices[(t + 1) % n];
    const double w = cross(p, q);
    a += w;
    cx += (p.x + q.x) * w;
    cy += (p.y + q.y) * w;
  }
  if (std::abs(a) < 1e-300) return poly.vertices.empty() ? Point{} : poly.vertices[0];
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

void validate_polygon(const ConvexPolygon& poly) {
  const size_t n = poly.vertices.size();
  if (n < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  for (const Point& p : poly.vertices)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw std::invalid_argument("polygon has non-finite vertex");
  if (cell_area(poly) <= 0.0)
    throw std::invalid_argument("polygon must have positive area (counterclockwise order)");
  for (size_t t = 0; t < n; ++t) {
    const Point a = poly.vertices[t];
    const Point b = poly.vertices[(t + 1) % n];
    const Point c = poly.vertices[(t + 2) % n];
    const Point e1 = b - a;
    const Point e2 = c - b;
    if (cross(e1, e2) < -1e-12 * norm(e1) * norm(e2))
      throw std::invalid_argument("polygon is not convex");
  }
}

bool point_in_polygon(Point p, const ConvexPolygon& poly, double eps) {
  const size_t n = poly.vertices.size();
  if (n < 3) return false;
  for (size_t t = 0; t < n; ++t) {
    const Point a = poly.vertices[t];
    const Point b = poly.vertices[(t + 1) % n];
    const Point e = b - a;
    if (cross(e, p - a) < -eps * norm(e)) return false;
  }
  return true;
}

ConvexPolygon regular_polygon(int segments, double radius, Point center) {
  if (segments < 3) throw std::invalid_argument("regular polygon needs >= 3 segments");
  if (!(radius > 0.0)) throw std::invalid_argument("regular polygon needs positive radius");
  ConvexPolygon poly;
  poly.vertices.reserve(static_cast<size_t>(segments));
  for (int t = 0; t < segments; ++t) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(t) / segments;
    poly.vertices.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
  }
  return poly;
}

ConvexPolygon clip_convex_polygon(const ConvexPolygon& poly, const HalfPlane& hp) {
  LabeledRing ring;
  ring.v = poly.vertices;
  ring.lab.assign(ring.v.size(), -1);
  LabeledRing clipped = clip_ring(ring, hp, -1);
  return ConvexPolygon{std::move(clipped.v)};
}

PowerDiagram build_power_diagram(std::span<const WeightedSite> sites,
                                 const ConvexPolygon& domain) {
  const int k = static_cast<int>(sites.size());
  if (k < 1) throw std::invalid_argument("power diagram needs at least one site");
  validate_polygon(domain);
  for (const WeightedSite& s : sites)
    if (!std::isfinite(s.position.x) || !std::isfinite(s.position.y) || !std::isfinite(s.height))
      throw std::invalid_argument("site with non-finite position or height");
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (dist(sites[i].position, sites[j].position) < 1e-12) {
        std::ostringstream msg;
        msg << "coincident sites " << i << " and " << j;
        throw std::invalid_argument(msg.str());
      }

  PowerDiagram diagram;
  diagram.cells.resize(static_cast<size_t>(k));
  diagram.areas.assign(static_cast<size_t>(k), 0.0);

  std::vector<LabeledRing> rings(static_cast<size_t>(k));
  LabeledRing domain_ring;
  domain_ring.v = domain.vertices;
  domain_ring.lab.assign(domain_ring.v.size(), -1);

  for (int i = 0; i < k; ++i) {
    LabeledRing ring = domain_ring;
    for (int j = 0; j < k && !ring.empty(); ++j) {
      if (j == i) continue;
      ring = clip_ring(ring, power_bisector(sites[i], sites[j]), j);
    }
    diagram.areas[static_cast<size_t>(i)] = std::max(0.0, ring_area(ring));
    diagram.cells[static_cast<size_t>(i)].vertices = ring.v;
    rings[static_cast<size_t>(i)] = std::move(ring);
  }

  // Shared lengths measured from both incident cells; they agree to rounding.
  std::map<std::pair<int, int>, std::pair<double, double>> shared;
  for (int i = 0; i < k; ++i) {
    const LabeledRing& ring = rings[static_cast<size_t>(i)];
    const size_t n = ring.v.size();
    for (size_t t = 0; t < n; ++t) {
      const int j = ring.lab[t];
      if (j < 0) continue;
      const double len = dist(ring.v[t], ring.v[(t + 1) % n]);
      const auto key = std::minmax(i, j);
      auto& entry = shared[{key.first, key.second}];
      (i < j ? entry.first : entry.second) += len;
    }
  }
  for (const auto& [key, lens] : shared) {
    const double len = 0.5 * (lens.first + lens.second);
    if (len < kMinSharedLen) continue;
    const double dual = dist(sites[static_cast<size_t>(key.first)].position,
                             sites[static_cast<size_t>(key.second)].position);
    diagram.edges.push_back({key.first, key.second, len, dual, len / dual});
  }
  return diagram;
}

NormalizedInstance normalize_to_unit_domain(std::span<const Point> points,
                                            const ConvexPolygon& domain) {
  if (points.empty()) throw std::invalid_argument("normalize: no points given");
  validate_polygon(domain);

  double max_r = 0.0;
  for (const Point& v : domain.vertices) max_r = std::max(max_r, norm(v));
  Similarity transform;
  if (max_r > 1.0 + 1e-12) {
    const Point c = polygon_centroid(domain);
    double reach = 0.0;
    for (const Point& v : domain.vertices) reach = std::max(reach, dist(v, c));
    transform = Similarity{1.0 / reach, c};
  }

  NormalizedInstance out;
  out.transform = transform;
  out.points.reserve(points.size());
  for (const Point& p : points) out.points.push_back(transform.apply(p));
  out.domain.vertices.reserve(domain.vertices.size());
  for (const Point& v : domain.vertices) out.domain.vertices.push_back(transform.apply(v));
  return out;
}

}  // namespace optran
