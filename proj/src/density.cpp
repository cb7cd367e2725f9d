#include "sdot/density.hpp"

#include <algorithm>
#include <cmath>

namespace sdot {

BilinearDensity::BilinearDensity(int nx, int ny, std::vector<double> corners, const Rect& domain)
    : nx_(nx), ny_(ny), domain_(domain), corners_(std::move(corners)) {
  if (nx_ < 1 || ny_ < 1)
    throw Error(ErrorCode::InvalidInput, "density grid must have at least one cell");
  if (corners_.size() != static_cast<std::size_t>(nx_ + 1) * (ny_ + 1))
    throw Error(ErrorCode::InvalidInput, "density corner array has the wrong size");
  if (!(domain_.width() > 0.0 && domain_.height() > 0.0))
    throw Error(ErrorCode::InvalidInput, "density domain is degenerate");
  for (double v : corners_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "density value is not finite");
    if (v < 0.0) throw Error(ErrorCode::InvalidInput, "density value is negative");
  }
  hx_ = domain_.width() / nx_;
  hy_ = domain_.height() / ny_;
  const double total = total_mass();
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidInput, "density is identically zero");
  normalization_ = 1.0 / total;
  for (double& v : corners_) v *= normalization_;
}

BilinearDensity BilinearDensity::uniform(int nx, int ny, const Rect& domain) {
  return BilinearDensity(nx, ny,
                         std::vector<double>(static_cast<std::size_t>(nx + 1) * (ny + 1), 1.0),
                         domain);
}

double BilinearDensity::cell_mass(int ix, int iy) const {
  return 0.25 * hx_ * hy_ *
         (corner(ix, iy) + corner(ix + 1, iy) + corner(ix, iy + 1) + corner(ix + 1, iy + 1));
}

double BilinearDensity::total_mass() const {
  double s = 0.0;
  for (int iy = 0; iy < ny_; ++iy)
    for (int ix = 0; ix < nx_; ++ix) s += cell_mass(ix, iy);
  return s;
}

int BilinearDensity::column_of(double x) const {
  return std::clamp(static_cast<int>(std::floor((x - domain_.xmin) / hx_)), 0, nx_ - 1);
}

int BilinearDensity::row_of(double y) const {
  return std::clamp(static_cast<int>(std::floor((y - domain_.ymin) / hy_)), 0, ny_ - 1);
}

double BilinearDensity::value_at(const Point& x) const {
  if (!domain_.contains(x)) return 0.0;
  const int ix = column_of(x.x());
  const int iy = row_of(x.y());
  const double u = (x.x() - (domain_.xmin + ix * hx_)) / hx_;
  const double v = (x.y() - (domain_.ymin + iy * hy_)) / hy_;
  return corner(ix, iy) * (1 - u) * (1 - v) + corner(ix + 1, iy) * u * (1 - v) +
         corner(ix, iy + 1) * (1 - u) * v + corner(ix + 1, iy + 1) * u * v;
}

kernels::PixelPatch BilinearDensity::patch(int ix, int iy, const Point& origin) const {
  const double f00 = corner(ix, iy), f10 = corner(ix + 1, iy);
  const double f01 = corner(ix, iy + 1), f11 = corner(ix + 1, iy + 1);
  return {domain_.xmin + ix * hx_ - origin.x(), domain_.ymin + iy * hy_ - origin.y(), f00,
          f10 - f00, f01 - f00, f11 - f10 - f01 + f00};
}

BilinearDensity load_density(const GrayImage& image, PixelMode mode, const Rect& domain) {
  const int w = image.width, h = image.height;
  if (w < 1 || h < 1 || image.values.size() != static_cast<std::size_t>(w) * h)
    throw Error(ErrorCode::InvalidInput, "image is empty or malformed");
  for (double v : image.values) {
    if (std::isnan(v) || !std::isfinite(v))
      throw Error(ErrorCode::InvalidInput, "image contains non-finite values");
    if (v < 0.0) throw Error(ErrorCode::InvalidInput, "image contains negative values");
  }

  if (mode == PixelMode::Corner) {
    if (w < 2 || h < 2)
      throw Error(ErrorCode::InvalidInput, "corner mode needs at least 2x2 samples");
    std::vector<double> corners(static_cast<std::size_t>(w) * h);
    for (int row = 0; row < h; ++row)
      for (int col = 0; col < w; ++col)
        corners[static_cast<std::size_t>(h - 1 - row) * w + col] = image.at(col, row);
    return BilinearDensity(w - 1, h - 1, std::move(corners), domain);
  }

  // Corner lines are numbered from the top: corner row r touches pixel rows
  // r - 1 and r.
  std::vector<double> corners(static_cast<std::size_t>(w + 1) * (h + 1));
  for (int r = 0; r <= h; ++r) {
    for (int c = 0; c <= w; ++c) {
      double sum = 0.0;
      int count = 0;
      for (int pr = r - 1; pr <= r; ++pr) {
        for (int pc = c - 1; pc <= c; ++pc) {
          if (pr < 0 || pc < 0 || pr >= h || pc >= w) continue;
          sum += image.at(pc, pr);
          ++count;
        }
      }
      corners[static_cast<std::size_t>(h - r) * (w + 1) + c] = sum / count;
    }
  }
  return BilinearDensity(w, h, std::move(corners), domain);
}

Point cell_barycenter(const CellMoments& moments, const Points& polygon, bool* fallback) {
  const bool empty = !(moments.mass > 1e-300);
  if (fallback) *fallback = empty;
  if (!empty) return moments.first_moment / moments.mass;
  return polygon_centroid(polygon);
}

namespace {

// Keeps the part of `in` with sign * (coord[axis] - value) >= 0.
void clip_axis(const Points& in, int axis, double value, double sign, Points& out) {
  out.clear();
  const std::size_t m = in.size();
  if (m < 3) return;
  for (std::size_t k = 0; k < m; ++k) {
    const Point& p = in[k];
    const Point& q = in[(k + 1) % m];
    const double hp = sign * (p[axis] - value);
    const double hq = sign * (q[axis] - value);
    if (hp >= 0.0) {
      out.push_back(p);
      if (hq < 0.0) {
        Point r = p + (hp / (hp - hq)) * (q - p);
        r[axis] = value;
        out.push_back(r);
      }
    } else if (hq >= 0.0) {
      Point r = p + (hp / (hp - hq)) * (q - p);
      r[axis] = value;
      out.push_back(r);
    }
  }
  if (out.size() < 3) out.clear();
}

double signed_area(const Points& v) {
  double a = 0.0;
  const std::size_t m = v.size();
  for (std::size_t k = 0; k < m; ++k) {
    const Point& p = v[k];
    const Point& q = v[(k + 1) % m];
    a += p.x() * q.y() - p.y() * q.x();
  }
  return 0.5 * a;
}

}  // namespace

CellMoments polygon_moments(const BilinearDensity& density, const Points& polygon,
                            const Point& site) {
  kernels::TriangleBatch scratch;
  return polygon_moments(density, polygon, site, scratch, true);
}

CellMoments polygon_moments(const BilinearDensity& density, const Points& polygon,
                            const Point& site, kernels::TriangleBatch& batch, bool check) {
  CellMoments out;
  if (polygon.size() < 3) return out;

  const Rect& dom = density.domain();
  Points rel(polygon.size());
  for (std::size_t k = 0; k < polygon.size(); ++k) rel[k] = polygon[k] - site;
  const double area = signed_area(rel);
  if (std::abs(area) <= 1e-16 * dom.area()) return out;
  if (area < 0.0) std::reverse(rel.begin(), rel.end());

  if (check) {
    Points abs_pts(rel.size());
    for (std::size_t k = 0; k < rel.size(); ++k) abs_pts[k] = rel[k] + site;
    if (!is_convex_ccw(abs_pts))
      throw Error(ErrorCode::InvalidInput, "polygon_moments: polygon is not convex");
    for (const Point& p : abs_pts)
      if (!dom.contains(p, 1e-9))
        throw Error(ErrorCode::InvalidInput, "polygon_moments: polygon leaves the domain");
  }

  double lo_x = rel[0].x(), hi_x = lo_x, lo_y = rel[0].y(), hi_y = lo_y;
  for (const Point& p : rel) {
    lo_x = std::min(lo_x, p.x());
    hi_x = std::max(hi_x, p.x());
    lo_y = std::min(lo_y, p.y());
    hi_y = std::max(hi_y, p.y());
  }
  const int c0 = density.column_of(lo_x + site.x());
  const int c1 = density.column_of(hi_x + site.x());

  batch.clear();
  batch.inv_hx = 1.0 / density.hx();
  batch.inv_hy = 1.0 / density.hy();
  Points tmp, strip, tmp2, piece;
  for (int ix = c0; ix <= c1; ++ix) {
    const double xl = dom.xmin + ix * density.hx() - site.x();
    const double xr = dom.xmin + (ix + 1) * density.hx() - site.x();
    clip_axis(rel, 0, xl, 1.0, tmp);
    clip_axis(tmp, 0, xr, -1.0, strip);
    if (strip.empty()) continue;
    double sy0 = strip[0].y(), sy1 = sy0;
    for (const Point& p : strip) {
      sy0 = std::min(sy0, p.y());
      sy1 = std::max(sy1, p.y());
    }
    const int r0 = density.row_of(sy0 + site.y());
    const int r1 = density.row_of(sy1 + site.y());
    for (int iy = r0; iy <= r1; ++iy) {
      const double yb = dom.ymin + iy * density.hy() - site.y();
      const double yt = dom.ymin + (iy + 1) * density.hy() - site.y();
      clip_axis(strip, 1, yb, 1.0, tmp2);
      clip_axis(tmp2, 1, yt, -1.0, piece);
      if (piece.empty()) continue;
      const kernels::PixelPatch patch = density.patch(ix, iy, site);
      for (std::size_t k = 1; k + 1 < piece.size(); ++k)
        batch.push(piece[0].x(), piece[0].y(), piece[k].x(), piece[k].y(), piece[k + 1].x(),
                   piece[k + 1].y(), patch);
    }
  }

  const kernels::AreaSums s = kernels::integrate_triangles(batch);
  out.mass = s.m;
  out.first_moment = Point(s.mx, s.my) + s.m * site;
  out.cost = 0.5 * s.mrr;
  return out;
}

SegmentMoments segment_moments(const BilinearDensity& density, const std::vector<Segment>& chain,
                               const Point& origin) {
  kernels::SegmentBatch scratch;
  return segment_moments(density, chain, origin, scratch);
}

SegmentMoments segment_moments(const BilinearDensity& density, const std::vector<Segment>& chain,
                               const Point& origin, kernels::SegmentBatch& batch) {
  SegmentMoments out;
  batch.clear();
  batch.inv_hx = 1.0 / density.hx();
  batch.inv_hy = 1.0 / density.hy();
  const Rect& dom = density.domain();
  std::vector<double> cuts;
  for (const Segment& seg : chain) {
    const Point a = seg.a - origin;
    const Point d = seg.b - seg.a;
    if (d.squaredNorm() == 0.0) continue;
    cuts.assign({0.0, 1.0});
    // Parameters where the segment crosses grid lines.
    for (int axis = 0; axis < 2; ++axis) {
      if (d[axis] == 0.0) continue;
      const double start = axis == 0 ? dom.xmin : dom.ymin;
      const double step = axis == 0 ? density.hx() : density.hy();
      const int count = axis == 0 ? density.nx() : density.ny();
      const double p0 = (seg.a[axis] - start) / step;
      const double p1 = (seg.b[axis] - start) / step;
      const int k0 = std::max(1, static_cast<int>(std::ceil(std::min(p0, p1))));
      const int k1 = std::min(count - 1, static_cast<int>(std::floor(std::max(p0, p1))));
      for (int k = k0; k <= k1; ++k) {
        const double t = (start + k * step - seg.a[axis]) / d[axis];
        if (t > 0.0 && t < 1.0) cuts.push_back(t);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double t0 = cuts[k], t1 = cuts[k + 1];
      if (t1 <= t0) continue;
      const Point mid = seg.a + 0.5 * (t0 + t1) * d;
      const kernels::PixelPatch patch =
          density.patch(density.column_of(mid.x()), density.row_of(mid.y()), origin);
      const Point p = a + t0 * d;
      const Point q = a + t1 * d;
      batch.push(p.x(), p.y(), q.x(), q.y(), patch);
    }
  }
  const kernels::LineSums s = kernels::integrate_segments(batch);
  out.s0 = s.s0;
  out.s1 = Point(s.sx, s.sy);
  out.s2 << s.sxx, s.sxy, s.sxy, s.syy;
  return out;
}

Eigen::Matrix2d outer_moment(const SegmentMoments& s, const Point& origin, const Point& a,
                             const Point& b) {
  const Point ar = a - origin;
  const Point br = b - origin;
  return ar * br.transpose() * s.s0 - ar * s.s1.transpose() - s.s1 * br.transpose() + s.s2;
}

FacetIntegrals facet_integrals(const BilinearDensity& density, const std::vector<Segment>& chain,
                               const Point& z_i, const Point& z_j) {
  FacetIntegrals out;
  if (chain.empty()) return out;
  const Point origin = chain.front().a;
  const SegmentMoments s = segment_moments(density, chain, origin);
  out.s0 = s.s0;
  out.s1 = (z_j - origin) * s.s0 - s.s1;
  out.s2 = outer_moment(s, origin, z_j, z_i);
  return out;
}

}  // namespace sdot
