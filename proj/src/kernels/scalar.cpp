#include "sdot/kernels.hpp"

#include <cmath>

namespace sdot::kernels {

void TriangleBatch::clear() {
  for (auto* v : {&ax, &ay, &bx, &by, &cx, &cy, &ox, &oy, &c0, &c1, &c2, &c3}) v->clear();
}

void TriangleBatch::reserve(std::size_t n) {
  for (auto* v : {&ax, &ay, &bx, &by, &cx, &cy, &ox, &oy, &c0, &c1, &c2, &c3}) v->reserve(n);
}

void TriangleBatch::push(double pax, double pay, double pbx, double pby, double pcx, double pcy,
                         const PixelPatch& p) {
  ax.push_back(pax);
  ay.push_back(pay);
  bx.push_back(pbx);
  by.push_back(pby);
  cx.push_back(pcx);
  cy.push_back(pcy);
  ox.push_back(p.ox);
  oy.push_back(p.oy);
  c0.push_back(p.c0);
  c1.push_back(p.c1);
  c2.push_back(p.c2);
  c3.push_back(p.c3);
}

void SegmentBatch::clear() {
  for (auto* v : {&ax, &ay, &bx, &by, &ox, &oy, &c0, &c1, &c2, &c3}) v->clear();
}

void SegmentBatch::push(double pax, double pay, double pbx, double pby, const PixelPatch& p) {
  ax.push_back(pax);
  ay.push_back(pay);
  bx.push_back(pbx);
  by.push_back(pby);
  ox.push_back(p.ox);
  oy.push_back(p.oy);
  c0.push_back(p.c0);
  c1.push_back(p.c1);
  c2.push_back(p.c2);
  c3.push_back(p.c3);
}

namespace detail {

AreaSums integrate_triangles_scalar(const TriangleBatch& t) {
  static constexpr double kB1 = 1.0 - 2.0 * kTriA1;
  static constexpr double kB2 = 1.0 - 2.0 * kTriA2;
  // Barycentric weights (on b, c; a gets the remainder) and rule weights.
  static constexpr double kL[6][2] = {{kTriA1, kTriA1}, {kTriA1, kB1}, {kB1, kTriA1},
                                      {kTriA2, kTriA2}, {kTriA2, kB2}, {kB2, kTriA2}};
  static constexpr double kW[6] = {kTriW1, kTriW1, kTriW1, kTriW2, kTriW2, kTriW2};

  AreaSums s;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double ex = t.bx[k] - t.ax[k], ey = t.by[k] - t.ay[k];
    const double fx = t.cx[k] - t.ax[k], fy = t.cy[k] - t.ay[k];
    const double area = 0.5 * std::abs(ex * fy - ey * fx);
    double m = 0.0, mx = 0.0, my = 0.0, mrr = 0.0;
    for (int q = 0; q < 6; ++q) {
      const double x = t.ax[k] + kL[q][0] * ex + kL[q][1] * fx;
      const double y = t.ay[k] + kL[q][0] * ey + kL[q][1] * fy;
      const double u = (x - t.ox[k]) * t.inv_hx;
      const double v = (y - t.oy[k]) * t.inv_hy;
      const double rho = kW[q] * (t.c0[k] + t.c1[k] * u + t.c2[k] * v + t.c3[k] * u * v);
      m += rho;
      mx += rho * x;
      my += rho * y;
      mrr += rho * (x * x + y * y);
    }
    s.m += area * m;
    s.mx += area * mx;
    s.my += area * my;
    s.mrr += area * mrr;
  }
  return s;
}

LineSums integrate_segments_scalar(const SegmentBatch& b) {
  static constexpr double kT[3] = {kGaussT0, kGaussT1, kGaussT2};
  static constexpr double kW[3] = {kGaussW0, kGaussW1, kGaussW2};

  LineSums s;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const double dx = b.bx[k] - b.ax[k], dy = b.by[k] - b.ay[k];
    const double len = std::sqrt(dx * dx + dy * dy);
    for (int q = 0; q < 3; ++q) {
      const double x = b.ax[k] + kT[q] * dx;
      const double y = b.ay[k] + kT[q] * dy;
      const double u = (x - b.ox[k]) * b.inv_hx;
      const double v = (y - b.oy[k]) * b.inv_hy;
      const double rho = len * kW[q] * (b.c0[k] + b.c1[k] * u + b.c2[k] * v + b.c3[k] * u * v);
      s.s0 += rho;
      s.sx += rho * x;
      s.sy += rho * y;
      s.sxx += rho * x * x;
      s.sxy += rho * x * y;
      s.syy += rho * y * y;
    }
  }
  return s;
}

}  // namespace detail
}  // namespace sdot::kernels
