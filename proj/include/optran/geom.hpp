#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace optran {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Point p) { return p.x * p.x + p.y * p.y; }
inline double norm(Point p) { return std::sqrt(norm2(p)); }
inline double dist2(Point a, Point b) { return norm2(a - b); }
inline double dist(Point a, Point b) { return std::sqrt(dist2(a, b)); }

/// Convex polygon, counterclockwise vertex order. An empty vertex list is
/// the canonical "no region" value produced by clipping.
struct ConvexPolygon {
  std::vector<Point> vertices;

  bool empty() const { return vertices.empty(); }
};

/// Shoelace area; 0 for an empty cell.
double cell_area(const ConvexPolygon& poly);

Point polygon_centroid(const ConvexPolygon& poly);

/// Throws std::invalid_argument unless the polygon has >= 3 finite vertices,
/// counterclockwise order, positive area, and is convex up to a 1e-12
/// collinearity tolerance.
void validate_polygon(const ConvexPolygon& poly);

/// True if p lies in poly (boundary included, within eps).
bool point_in_polygon(Point p, const ConvexPolygon& poly, double eps = 1e-9);

/// Regular m-gon inscribed in the circle of the given radius. Used to model
/// disk domains with straight-edged cells.
ConvexPolygon regular_polygon(int segments, double radius = 1.0, Point center = {});

/// Oriented half-plane {p : dot(normal, p) <= offset}, normal unit length.
struct HalfPlane {
  Point normal;
  double offset = 0.0;

  double signed_distance(Point p) const { return dot(normal, p) - offset; }
};

/// poly ∩ halfplane. Empty result is a value, not an error.
ConvexPolygon clip_convex_polygon(const ConvexPolygon& poly, const HalfPlane& hp);

/// Station site with a power weight ("height") in squared-distance units.
struct WeightedSite {
  Point position;
  double height = 0.0;
};

struct DiagramEdge {
  int i = 0;  // i < j
  int j = 0;
  double shared_len = 0.0;  // length of the common cell boundary inside the domain
  double dual_len = 0.0;    // distance between the two site positions
  double weight = 0.0;      // shared_len / dual_len
};

struct PowerDiagram {
  std::vector<ConvexPolygon> cells;  // one per site, clipped to the domain; may be empty
  std::vector<DiagramEdge> edges;    // each unordered pair at most once, i < j
  std::vector<double> areas;         // shoelace area per cell, 0 for empty

  int site_count() const { return static_cast<int>(cells.size()); }
};

/// Power diagram of the sites clipped to a convex domain, built by per-cell
/// half-plane intersection. Sites must be pairwise distinct; shared edges
/// shorter than 1e-12 are dropped.
PowerDiagram build_power_diagram(std::span<const WeightedSite> sites,
                                 const ConvexPolygon& domain);

/// Uniform scale about a center: p' = scale * (p - center).
struct Similarity {
  double scale = 1.0;
  Point center{};

  Point apply(Point p) const { return scale * (p - center); }
  Point invert(Point p) const { return {p.x / scale + center.x, p.y / scale + center.y}; }
  bool identity() const { return scale == 1.0 && center.x == 0.0 && center.y == 0.0; }
  /// Multiplier taking original-unit costs to normalized-unit costs when each
  /// term scales as distance^alpha.
  double cost_factor(double alpha) const { return std::pow(scale, alpha); }
};

struct NormalizedInstance {
  Similarity transform;
  std::vector<Point> points;
  ConvexPolygon domain;
};

/// Maps the domain (and the points with it) into the unit disk centered at the
/// origin. Returns the identity transform when the domain already fits.
NormalizedInstance normalize_to_unit_domain(std::span<const Point> points,
                                            const ConvexPolygon& domain);

}  // namespace optran
