#pragma once

// Batched quadrature kernels for piecewise-bilinear densities.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant picked at runtime. Both integrate exactly the same
// polynomials; they differ only in summation order.

#include <cstddef>
#include <optional>
#include <vector>

namespace sdot::kernels {

enum class Isa { Scalar, Avx2 };

const char* isa_name(Isa isa);
bool isa_available(Isa isa);
/// Best available ISA, unless overridden with force_isa.
Isa active_isa();
/// Pins dispatch to a given ISA (tests, benchmarks); nullopt restores auto.
void force_isa(std::optional<Isa> isa);

/// Bilinear density on one pixel in local coordinates u, v in [0, 1]:
/// m = c0 + c1 u + c2 v + c3 u v, with u = (x - ox) / hx, v = (y - oy) / hy.
struct PixelPatch {
  double ox, oy;
  double c0, c1, c2, c3;
};

/// Structure-of-arrays batch of triangles, each lying inside one pixel.
/// Coordinates are relative to a caller-chosen origin (usually the site).
struct TriangleBatch {
  double inv_hx = 1.0;
  double inv_hy = 1.0;
  std::vector<double> ax, ay, bx, by, cx, cy;
  std::vector<double> ox, oy, c0, c1, c2, c3;

  std::size_t size() const { return ax.size(); }
  void clear();
  void reserve(std::size_t n);
  void push(double pax, double pay, double pbx, double pby, double pcx, double pcy,
            const PixelPatch& patch);
};

/// Integrals of m, x m, y m and (x^2 + y^2) m over all triangles of a batch.
struct AreaSums {
  double m = 0.0;
  double mx = 0.0;
  double my = 0.0;
  double mrr = 0.0;
};

/// Batch of straight segments, each lying inside one pixel.
struct SegmentBatch {
  double inv_hx = 1.0;
  double inv_hy = 1.0;
  std::vector<double> ax, ay, bx, by;
  std::vector<double> ox, oy, c0, c1, c2, c3;

  std::size_t size() const { return ax.size(); }
  void clear();
  void push(double pax, double pay, double pbx, double pby, const PixelPatch& patch);
};

/// Line integrals (arclength measure) of m, x m, y m, x^2 m, x y m, y^2 m.
struct LineSums {
  double s0 = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
};

AreaSums integrate_triangles(const TriangleBatch& batch, Isa isa);
inline AreaSums integrate_triangles(const TriangleBatch& batch) {
  return integrate_triangles(batch, active_isa());
}

LineSums integrate_segments(const SegmentBatch& batch, Isa isa);
inline LineSums integrate_segments(const SegmentBatch& batch) {
  return integrate_segments(batch, active_isa());
}

// Quadrature tables, shared by all variants.
//
// Symmetric 6-point triangle rule exact for total degree 4: two orbits of
// barycentric points (a, a, 1 - 2a) with weights summing to 1.
inline constexpr double kTriA1 = 0.445948490915964886318329253883;
inline constexpr double kTriW1 = 0.223381589678011465695007008433;
inline constexpr double kTriA2 = 0.0915762135097707434595714634022;
inline constexpr double kTriW2 = 0.109951743655321867638326324900;

// 3-point Gauss-Legendre on [0, 1], exact for degree 5.
inline constexpr double kGaussT0 = 0.112701665379258311482073460022;
inline constexpr double kGaussT1 = 0.5;
inline constexpr double kGaussT2 = 0.887298334620741688517926539978;
inline constexpr double kGaussW0 = 5.0 / 18.0;
inline constexpr double kGaussW1 = 8.0 / 18.0;
inline constexpr double kGaussW2 = 5.0 / 18.0;

namespace detail {
AreaSums integrate_triangles_scalar(const TriangleBatch& batch);
LineSums integrate_segments_scalar(const SegmentBatch& batch);
#if defined(__x86_64__) || defined(_M_X64)
AreaSums integrate_triangles_avx2(const TriangleBatch& batch);
LineSums integrate_segments_avx2(const SegmentBatch& batch);
#endif
}  // namespace detail

}  // namespace sdot::kernels
