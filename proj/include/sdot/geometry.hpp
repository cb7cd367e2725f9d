#pragma once

#include "sdot/types.hpp"

#include <cstdint>
#include <vector>

namespace sdot {

/// Neighbor tag for polygon edges lying on the domain boundary.
inline constexpr int kBoundary = -1;

/// Convex polygon, counterclockwise. Edge k runs from vertices[k] to
/// vertices[(k+1) % size] and separates this cell from edge_owner[k]
/// (a site index, or kBoundary).
struct CellPolygon {
  Points vertices;
  std::vector<int> edge_owner;

  bool empty() const { return vertices.size() < 3; }
  double area() const;
};

struct Segment {
  Point a;
  Point b;
  double length() const { return (b - a).norm(); }
};

/// Shared boundary of cells i and j (i < j), or of cell i and the domain
/// boundary when j == kBoundary.
struct Facet {
  int i = 0;
  int j = kBoundary;
  std::vector<Segment> segments;

  double length() const;
};

struct LaguerreDiagram {
  Rect domain;
  std::vector<CellPolygon> cells;
  /// Interior facets first (sorted by (i, j)), then boundary facets.
  std::vector<Facet> facets;
  int num_interior_facets = 0;

  int size() const { return static_cast<int>(cells.size()); }
  /// Indices of cells with empty interior.
  std::vector<int> empty_cells() const;
  /// Smallest interior facet length; +inf when there are none.
  double min_interior_facet_length() const;
};

struct GeometryOptions {
  /// Perturb sites closer than kCoincidenceTol by uniform noise of this
  /// amplitude instead of rejecting the input.
  bool jitter_coincident = false;
  double jitter_amplitude = 1e-9;
  std::uint64_t jitter_seed = 0;
};

inline constexpr double kCoincidenceTol = 1e-12;

/// psi_i(x) = 1/2 |z_i - x|^2 - phi_i.
double power_distance(const Point& x, int site_index, const DiracCloud& cloud);

/// Clips the domain to {x : psi_i(x) <= psi_j(x) for all j} for every site.
/// Empty cells are kept in the result. Throws Error(CoincidentSites) when two
/// sites are closer than kCoincidenceTol and jittering is disabled. With
/// jittering enabled, the positions actually used are written back through
/// `jittered` when non-null.
LaguerreDiagram build_diagram(const DiracCloud& cloud, const Rect& domain = Rect::unit(),
                              const GeometryOptions& options = {},
                              Points* jittered = nullptr);

/// build_diagram with every potential forced to zero.
LaguerreDiagram voronoi_diagram(const DiracCloud& cloud, const Rect& domain = Rect::unit(),
                                const GeometryOptions& options = {});

/// Clips a convex counterclockwise polygon to the half-plane n.x <= c. Edges
/// created along the clip line are tagged with `owner`.
CellPolygon clip_half_plane(const CellPolygon& poly, const Point& normal, double offset,
                            int owner);

CellPolygon rectangle_polygon(const Rect& r);

/// True when the polygon is convex and counterclockwise (collinear runs
/// allowed), decided with the exact orientation predicate.
bool is_convex_ccw(const Points& vertices);

Point polygon_centroid(const Points& vertices);

}  // namespace sdot
