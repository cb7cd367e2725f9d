#include "sdot/geometry.hpp"

#include "sdot/predicates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <utility>

namespace sdot {

double CellPolygon::area() const {
  if (empty()) return 0.0;
  double a = 0.0;
  const std::size_t m = vertices.size();
  for (std::size_t k = 0; k < m; ++k) {
    const Point& p = vertices[k];
    const Point& q = vertices[(k + 1) % m];
    a += p.x() * q.y() - p.y() * q.x();
  }
  return 0.5 * a;
}

double Facet::length() const {
  double l = 0.0;
  for (const Segment& s : segments) l += s.length();
  return l;
}

std::vector<int> LaguerreDiagram::empty_cells() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (cells[i].empty() || cells[i].area() <= 0.0) out.push_back(i);
  return out;
}

double LaguerreDiagram::min_interior_facet_length() const {
  double best = std::numeric_limits<double>::infinity();
  for (int f = 0; f < num_interior_facets; ++f) best = std::min(best, facets[f].length());
  return best;
}

double power_distance(const Point& x, int site_index, const DiracCloud& cloud) {
  if (site_index < 0 || site_index >= cloud.size())
    throw Error(ErrorCode::InvalidInput, "power_distance: site index out of range");
  return 0.5 * (cloud.positions[site_index] - x).squaredNorm() - cloud.potentials[site_index];
}

CellPolygon rectangle_polygon(const Rect& r) {
  CellPolygon p;
  p.vertices = {{r.xmin, r.ymin}, {r.xmax, r.ymin}, {r.xmax, r.ymax}, {r.xmin, r.ymax}};
  p.edge_owner.assign(4, kBoundary);
  return p;
}

namespace {

// Sutherland-Hodgman against {x : h(x) <= 0} for a single convex polygon,
// h given per vertex. Keeps edge ownership: the edge emitted along the clip
// line is tagged `owner`.
CellPolygon clip_with_values(const CellPolygon& poly, const std::vector<double>& h, int owner,
                             double merge_tol) {
  const std::size_t m = poly.vertices.size();
  CellPolygon out;
  if (m < 3) return out;

  bool all_in = true;
  bool all_out = true;
  for (double v : h) {
    all_in = all_in && v <= 0.0;
    all_out = all_out && v > 0.0;
  }
  if (all_in) return poly;
  if (all_out) return out;

  out.vertices.reserve(m + 1);
  out.edge_owner.reserve(m + 1);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t k1 = (k + 1) % m;
    const Point& p = poly.vertices[k];
    const Point& q = poly.vertices[k1];
    const bool pin = h[k] <= 0.0;
    const bool qin = h[k1] <= 0.0;
    if (pin) {
      out.vertices.push_back(p);
      out.edge_owner.push_back(poly.edge_owner[k]);
      if (!qin) {
        const double t = h[k] / (h[k] - h[k1]);
        out.vertices.push_back(p + t * (q - p));
        out.edge_owner.push_back(owner);
      }
    } else if (qin) {
      const double t = h[k] / (h[k] - h[k1]);
      out.vertices.push_back(p + t * (q - p));
      out.edge_owner.push_back(poly.edge_owner[k]);
    }
  }

  // Drop vertices whose outgoing edge has collapsed.
  for (std::size_t guard = 0; out.vertices.size() >= 2 && guard < m + 2; ++guard) {
    bool changed = false;
    for (std::size_t k = 0; k < out.vertices.size(); ++k) {
      const std::size_t k1 = (k + 1) % out.vertices.size();
      if ((out.vertices[k1] - out.vertices[k]).squaredNorm() <= merge_tol * merge_tol) {
        // The preceding edge now ends at vertices[k1]; ownership unchanged.
        out.vertices.erase(out.vertices.begin() + static_cast<std::ptrdiff_t>(k));
        out.edge_owner.erase(out.edge_owner.begin() + static_cast<std::ptrdiff_t>(k));
        changed = true;
        break;
      }
    }
    if (!changed) break;
  }
  if (out.vertices.size() < 3) return {};
  return out;
}

struct BucketGrid {
  Rect box;
  int nx = 1;
  int ny = 1;
  double hx = 1.0;
  double hy = 1.0;
  std::vector<std::vector<int>> buckets;

  BucketGrid(const Points& pts, const Rect& domain) {
    box = domain;
    for (const Point& p : pts) {
      box.xmin = std::min(box.xmin, p.x());
      box.ymin = std::min(box.ymin, p.y());
      box.xmax = std::max(box.xmax, p.x());
      box.ymax = std::max(box.ymax, p.y());
    }
    const int g = std::max(1, static_cast<int>(std::ceil(std::sqrt(pts.size() / 2.0))));
    nx = ny = g;
    hx = box.width() / nx;
    hy = box.height() / ny;
    buckets.resize(static_cast<std::size_t>(nx) * ny);
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
      auto [bx, by] = locate(pts[i]);
      buckets[static_cast<std::size_t>(by) * nx + bx].push_back(i);
    }
  }

  std::pair<int, int> locate(const Point& p) const {
    const int bx = std::clamp(static_cast<int>((p.x() - box.xmin) / hx), 0, nx - 1);
    const int by = std::clamp(static_cast<int>((p.y() - box.ymin) / hy), 0, ny - 1);
    return {bx, by};
  }

  const std::vector<int>& at(int bx, int by) const {
    return buckets[static_cast<std::size_t>(by) * nx + bx];
  }
};

void check_coincident(Points& pts, const Rect& domain, const GeometryOptions& options) {
  std::mt19937_64 rng(options.jitter_seed);
  std::uniform_real_distribution<double> noise(-options.jitter_amplitude,
                                               options.jitter_amplitude);
  for (int attempt = 0; attempt < 8; ++attempt) {
    const BucketGrid grid(pts, domain);
    bool found = false;
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
      auto [bx, by] = grid.locate(pts[i]);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int cx = bx + dx;
          const int cy = by + dy;
          if (cx < 0 || cy < 0 || cx >= grid.nx || cy >= grid.ny) continue;
          for (int j : grid.at(cx, cy)) {
            if (j <= i) continue;
            if ((pts[i] - pts[j]).norm() >= kCoincidenceTol) continue;
            if (!options.jitter_coincident)
              throw Error(ErrorCode::CoincidentSites,
                          "sites " + std::to_string(i) + " and " + std::to_string(j) +
                              " coincide");
            pts[j] += Point(noise(rng), noise(rng));
            found = true;
          }
        }
      }
    }
    if (!found) return;
  }
  throw Error(ErrorCode::CoincidentSites, "could not separate coincident sites by jittering");
}

CellPolygon build_cell(int i, const Points& pts, const Eigen::VectorXd& phi, double phi_max,
                       const BucketGrid& grid, const Rect& domain, double merge_tol) {
  CellPolygon cell = rectangle_polygon(domain);
  const Point zi = pts[i];
  auto [bx, by] = grid.locate(zi);
  std::vector<double> h;

  const int max_ring = std::max(grid.nx, grid.ny);
  for (int r = 0; r <= max_ring; ++r) {
    const int x0 = bx - r, x1 = bx + r, y0 = by - r, y1 = by + r;
    for (int cy = std::max(0, y0); cy <= std::min(grid.ny - 1, y1); ++cy) {
      for (int cx = std::max(0, x0); cx <= std::min(grid.nx - 1, x1); ++cx) {
        if (cx != x0 && cx != x1 && cy != y0 && cy != y1) continue;
        for (int j : grid.at(cx, cy)) {
          if (j == i) continue;
          // psi_i <= psi_j  <=>  a.(x - z_i) - (|a|^2/2 + phi_i - phi_j) <= 0, a = z_j - z_i
          const Point a = pts[j] - zi;
          const double c = 0.5 * a.squaredNorm() + phi[i] - phi[j];
          h.resize(cell.vertices.size());
          for (std::size_t k = 0; k < cell.vertices.size(); ++k)
            h[k] = a.dot(cell.vertices[k] - zi) - c;
          cell = clip_with_values(cell, h, j, merge_tol);
          if (cell.empty()) return {};
        }
      }
    }

    // Distance from z_i to the part of the bucket grid not yet visited.
    double reach = std::numeric_limits<double>::infinity();
    if (x0 > 0) reach = std::min(reach, zi.x() - (grid.box.xmin + x0 * grid.hx));
    if (x1 < grid.nx - 1) reach = std::min(reach, grid.box.xmin + (x1 + 1) * grid.hx - zi.x());
    if (y0 > 0) reach = std::min(reach, zi.y() - (grid.box.ymin + y0 * grid.hy));
    if (y1 < grid.ny - 1) reach = std::min(reach, grid.box.ymin + (y1 + 1) * grid.hy - zi.y());
    if (!std::isfinite(reach)) break;

    double radius = 0.0;
    for (const Point& v : cell.vertices) radius = std::max(radius, (v - zi).norm());
    if (reach >= radius &&
        0.5 * (reach - radius) * (reach - radius) - phi_max >= 0.5 * radius * radius - phi[i])
      break;
  }
  return cell;
}

}  // namespace

CellPolygon clip_half_plane(const CellPolygon& poly, const Point& normal, double offset,
                            int owner) {
  std::vector<double> h(poly.vertices.size());
  for (std::size_t k = 0; k < h.size(); ++k) h[k] = normal.dot(poly.vertices[k]) - offset;
  return clip_with_values(poly, h, owner, 0.0);
}

LaguerreDiagram build_diagram(const DiracCloud& cloud, const Rect& domain,
                              const GeometryOptions& options, Points* jittered) {
  const int n = cloud.size();
  if (n < 1) throw Error(ErrorCode::InvalidInput, "build_diagram: empty cloud");
  if (cloud.potentials.size() != n)
    throw Error(ErrorCode::InvalidInput, "build_diagram: potentials size mismatch");
  if (!(domain.width() > 0.0 && domain.height() > 0.0))
    throw Error(ErrorCode::InvalidInput, "build_diagram: degenerate domain");
  for (const Point& p : cloud.positions)
    if (!p.allFinite()) throw Error(ErrorCode::InvalidInput, "build_diagram: non-finite site");

  Points pts = cloud.positions;
  check_coincident(pts, domain, options);
  if (jittered) *jittered = pts;

  const double merge_tol = 1e-14 * std::max(domain.width(), domain.height());
  const double phi_max = cloud.potentials.maxCoeff();
  const BucketGrid grid(pts, domain);

  LaguerreDiagram diagram;
  diagram.domain = domain;
  diagram.cells.resize(n);
  for (int i = 0; i < n; ++i)
    diagram.cells[i] = build_cell(i, pts, cloud.potentials, phi_max, grid, domain, merge_tol);

  // Facets: take the chain from the lower-index cell; fall back to the other
  // side when round-off removed it there.
  std::map<std::pair<int, int>, std::vector<Segment>> from_low;
  std::map<std::pair<int, int>, std::vector<Segment>> from_high;
  std::vector<Facet> boundary;
  for (int i = 0; i < n; ++i) {
    const CellPolygon& c = diagram.cells[i];
    const std::size_t m = c.vertices.size();
    Facet bf{i, kBoundary, {}};
    for (std::size_t k = 0; k < m; ++k) {
      const Segment s{c.vertices[k], c.vertices[(k + 1) % m]};
      const int j = c.edge_owner[k];
      if (j == kBoundary) {
        bf.segments.push_back(s);
      } else if (i < j) {
        from_low[{i, j}].push_back(s);
      } else {
        from_high[{j, i}].push_back(Segment{s.b, s.a});
      }
    }
    if (!bf.segments.empty()) boundary.push_back(std::move(bf));
  }
  for (auto& [key, segs] : from_high) from_low.try_emplace(key, std::move(segs));
  for (auto& [key, segs] : from_low) diagram.facets.push_back(Facet{key.first, key.second, segs});
  diagram.num_interior_facets = static_cast<int>(diagram.facets.size());
  for (Facet& f : boundary) diagram.facets.push_back(std::move(f));
  return diagram;
}

LaguerreDiagram voronoi_diagram(const DiracCloud& cloud, const Rect& domain,
                                const GeometryOptions& options) {
  DiracCloud zero = cloud;
  zero.potentials = Eigen::VectorXd::Zero(cloud.size());
  return build_diagram(zero, domain, options);
}

bool is_convex_ccw(const Points& v) {
  const std::size_t m = v.size();
  if (m < 3) return true;
  bool any_turn = false;
  for (std::size_t k = 0; k < m; ++k) {
    const int o = predicates::orient2d(v[k], v[(k + 1) % m], v[(k + 2) % m]);
    if (o < 0) return false;
    any_turn = any_turn || o > 0;
  }
  return any_turn;
}

Point polygon_centroid(const Points& v) {
  const std::size_t m = v.size();
  if (m == 0) return Point::Zero();
  double a = 0.0;
  Point c = Point::Zero();
  const Point o = v[0];
  for (std::size_t k = 0; k < m; ++k) {
    const Point p = v[k] - o;
    const Point q = v[(k + 1) % m] - o;
    const double cr = p.x() * q.y() - p.y() * q.x();
    a += cr;
    c += cr * (p + q);
  }
  if (std::abs(a) <= 0.0) {
    Point mean = Point::Zero();
    for (const Point& p : v) mean += p;
    return mean / static_cast<double>(m);
  }
  return o + c / (3.0 * a);
}

}  // namespace sdot
