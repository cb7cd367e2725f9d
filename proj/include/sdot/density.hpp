#pragma once

#include "sdot/geometry.hpp"
#include "sdot/kernels.hpp"
#include "sdot/types.hpp"

#include <Eigen/Core>

#include <vector>

namespace sdot {

/// Grayscale raster, row-major, row 0 is the top row of the image.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int col, int row) const { return values[static_cast<std::size_t>(row) * width + col]; }
};

/// How pixel samples become corner values of the bilinear grid.
enum class PixelMode {
  /// Each pixel is a Q1 cell; a corner gets the mean of its incident pixels.
  CellMean,
  /// Pixel samples are the corner values themselves ((w-1) x (h-1) cells).
  Corner,
};

/// Piecewise-bilinear (Q1) probability density on a rectangle, normalized
/// to unit mass. Corner (ix, iy) sits at (xmin + ix hx, ymin + iy hy), so
/// iy grows upwards; image row 0 maps to the top edge.
class BilinearDensity {
 public:
  /// `corners` holds (nx + 1) * (ny + 1) values, index iy * (nx + 1) + ix.
  /// Values are rescaled so that the total mass is one.
  BilinearDensity(int nx, int ny, std::vector<double> corners, const Rect& domain = Rect::unit());

  static BilinearDensity uniform(int nx = 1, int ny = 1, const Rect& domain = Rect::unit());

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  const Rect& domain() const { return domain_; }
  /// Factor applied to the raw corner values during normalization.
  double normalization() const { return normalization_; }

  double corner(int ix, int iy) const {
    return corners_[static_cast<std::size_t>(iy) * (nx_ + 1) + ix];
  }
  /// Pointwise density (zero outside the domain).
  double value_at(const Point& x) const;
  /// Closed-form total mass (one after normalization, up to round-off).
  double total_mass() const;
  /// Mass of pixel cell (ix, iy).
  double cell_mass(int ix, int iy) const;

  /// Pixel coefficients relative to `origin`, for the quadrature kernels.
  kernels::PixelPatch patch(int ix, int iy, const Point& origin) const;
  int column_of(double x) const;
  int row_of(double y) const;

 private:
  int nx_;
  int ny_;
  double hx_;
  double hy_;
  Rect domain_;
  double normalization_ = 1.0;
  std::vector<double> corners_;
};

/// Throws InvalidInput on an empty grid, negative or non-finite values, or an
/// all-zero image.
BilinearDensity load_density(const GrayImage& image, PixelMode mode,
                             const Rect& domain = Rect::unit());

struct CellMoments {
  double mass = 0.0;
  Point first_moment = Point::Zero();
  /// Integral of 1/2 |site - x|^2 against the density.
  double cost = 0.0;
};

/// Barycenter of a cell; when the mass vanishes, falls back to the polygon
/// centroid and sets `*fallback`.
Point cell_barycenter(const CellMoments& moments, const Points& polygon, bool* fallback = nullptr);

/// Exact integrals of m, x m and 1/2 |site - x|^2 m over a convex polygon.
/// The polygon is cut along the pixel grid and every piece is integrated
/// with a degree-4 triangle rule. Throws InvalidInput for non-convex
/// polygons or polygons leaving the domain by more than 1e-9.
CellMoments polygon_moments(const BilinearDensity& density, const Points& polygon,
                            const Point& site);

/// Same, reusing a caller-owned batch buffer (hot path).
CellMoments polygon_moments(const BilinearDensity& density, const Points& polygon,
                            const Point& site, kernels::TriangleBatch& scratch,
                            bool check = true);

/// Line integrals against m along a segment chain, with moments taken about
/// `origin`: s0 = int m, s1 = int (x - o) m, s2 = int (x - o)(x - o)^T m.
struct SegmentMoments {
  double s0 = 0.0;
  Point s1 = Point::Zero();
  Eigen::Matrix2d s2 = Eigen::Matrix2d::Zero();
};

SegmentMoments segment_moments(const BilinearDensity& density, const std::vector<Segment>& chain,
                               const Point& origin);
SegmentMoments segment_moments(const BilinearDensity& density, const std::vector<Segment>& chain,
                               const Point& origin, kernels::SegmentBatch& scratch);

/// Undivided facet integrals: s0 = int m, s1 = int (z_j - x) m,
/// s2 = int (z_j - x)(z_i - x)^T m.
struct FacetIntegrals {
  double s0 = 0.0;
  Point s1 = Point::Zero();
  Eigen::Matrix2d s2 = Eigen::Matrix2d::Zero();
};

FacetIntegrals facet_integrals(const BilinearDensity& density, const std::vector<Segment>& chain,
                               const Point& z_i, const Point& z_j);

/// int (a - x)(b - x)^T m from moments about o.
Eigen::Matrix2d outer_moment(const SegmentMoments& s, const Point& origin, const Point& a,
                             const Point& b);

}  // namespace sdot
