// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "sdot/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace sdot::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d abs_pd(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

}  // namespace

AreaSums integrate_triangles_avx2(const TriangleBatch& t) {
  static constexpr double kB1 = 1.0 - 2.0 * kTriA1;
  static constexpr double kB2 = 1.0 - 2.0 * kTriA2;
  static constexpr double kL[6][2] = {{kTriA1, kTriA1}, {kTriA1, kB1}, {kB1, kTriA1},
                                      {kTriA2, kTriA2}, {kTriA2, kB2}, {kB2, kTriA2}};
  static constexpr double kW[6] = {kTriW1, kTriW1, kTriW1, kTriW2, kTriW2, kTriW2};

  const std::size_t n = t.size();
  const std::size_t n4 = n - n % 4;
  const __m256d ihx = _mm256_set1_pd(t.inv_hx);
  const __m256d ihy = _mm256_set1_pd(t.inv_hy);
  const __m256d half = _mm256_set1_pd(0.5);

  __m256d am = _mm256_setzero_pd(), amx = _mm256_setzero_pd();
  __m256d amy = _mm256_setzero_pd(), amrr = _mm256_setzero_pd();

  for (std::size_t k = 0; k < n4; k += 4) {
    const __m256d ax = _mm256_loadu_pd(&t.ax[k]);
    const __m256d ay = _mm256_loadu_pd(&t.ay[k]);
    const __m256d ex = _mm256_sub_pd(_mm256_loadu_pd(&t.bx[k]), ax);
    const __m256d ey = _mm256_sub_pd(_mm256_loadu_pd(&t.by[k]), ay);
    const __m256d fx = _mm256_sub_pd(_mm256_loadu_pd(&t.cx[k]), ax);
    const __m256d fy = _mm256_sub_pd(_mm256_loadu_pd(&t.cy[k]), ay);
    const __m256d area = _mm256_mul_pd(half, abs_pd(_mm256_fmsub_pd(ex, fy, _mm256_mul_pd(ey, fx))));
    const __m256d ox = _mm256_loadu_pd(&t.ox[k]);
    const __m256d oy = _mm256_loadu_pd(&t.oy[k]);
    const __m256d c0 = _mm256_loadu_pd(&t.c0[k]);
    const __m256d c1 = _mm256_loadu_pd(&t.c1[k]);
    const __m256d c2 = _mm256_loadu_pd(&t.c2[k]);
    const __m256d c3 = _mm256_loadu_pd(&t.c3[k]);

    __m256d m = _mm256_setzero_pd(), mx = _mm256_setzero_pd();
    __m256d my = _mm256_setzero_pd(), mrr = _mm256_setzero_pd();
    for (int q = 0; q < 6; ++q) {
      const __m256d l0 = _mm256_set1_pd(kL[q][0]);
      const __m256d l1 = _mm256_set1_pd(kL[q][1]);
      const __m256d x = _mm256_fmadd_pd(l1, fx, _mm256_fmadd_pd(l0, ex, ax));
      const __m256d y = _mm256_fmadd_pd(l1, fy, _mm256_fmadd_pd(l0, ey, ay));
      const __m256d u = _mm256_mul_pd(_mm256_sub_pd(x, ox), ihx);
      const __m256d v = _mm256_mul_pd(_mm256_sub_pd(y, oy), ihy);
      // c0 + c1 u + v (c2 + c3 u)
      const __m256d dens =
          _mm256_fmadd_pd(v, _mm256_fmadd_pd(c3, u, c2), _mm256_fmadd_pd(c1, u, c0));
      const __m256d rho = _mm256_mul_pd(_mm256_set1_pd(kW[q]), dens);
      m = _mm256_add_pd(m, rho);
      mx = _mm256_fmadd_pd(rho, x, mx);
      my = _mm256_fmadd_pd(rho, y, my);
      mrr = _mm256_fmadd_pd(rho, _mm256_fmadd_pd(x, x, _mm256_mul_pd(y, y)), mrr);
    }
    am = _mm256_fmadd_pd(area, m, am);
    amx = _mm256_fmadd_pd(area, mx, amx);
    amy = _mm256_fmadd_pd(area, my, amy);
    amrr = _mm256_fmadd_pd(area, mrr, amrr);
  }

  AreaSums s{hsum(am), hsum(amx), hsum(amy), hsum(amrr)};
  if (n4 < n) {
    TriangleBatch tail;
    tail.inv_hx = t.inv_hx;
    tail.inv_hy = t.inv_hy;
    for (std::size_t k = n4; k < n; ++k)
      tail.push(t.ax[k], t.ay[k], t.bx[k], t.by[k], t.cx[k], t.cy[k],
                {t.ox[k], t.oy[k], t.c0[k], t.c1[k], t.c2[k], t.c3[k]});
    const AreaSums r = integrate_triangles_scalar(tail);
    s.m += r.m;
    s.mx += r.mx;
    s.my += r.my;
    s.mrr += r.mrr;
  }
  return s;
}

LineSums integrate_segments_avx2(const SegmentBatch& b) {
  static constexpr double kT[3] = {kGaussT0, kGaussT1, kGaussT2};
  static constexpr double kW[3] = {kGaussW0, kGaussW1, kGaussW2};

  const std::size_t n = b.size();
  const std::size_t n4 = n - n % 4;
  const __m256d ihx = _mm256_set1_pd(b.inv_hx);
  const __m256d ihy = _mm256_set1_pd(b.inv_hy);

  __m256d s0 = _mm256_setzero_pd(), sx = _mm256_setzero_pd(), sy = _mm256_setzero_pd();
  __m256d sxx = _mm256_setzero_pd(), sxy = _mm256_setzero_pd(), syy = _mm256_setzero_pd();

  for (std::size_t k = 0; k < n4; k += 4) {
    const __m256d ax = _mm256_loadu_pd(&b.ax[k]);
    const __m256d ay = _mm256_loadu_pd(&b.ay[k]);
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(&b.bx[k]), ax);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(&b.by[k]), ay);
    const __m256d len = _mm256_sqrt_pd(_mm256_fmadd_pd(dx, dx, _mm256_mul_pd(dy, dy)));
    const __m256d ox = _mm256_loadu_pd(&b.ox[k]);
    const __m256d oy = _mm256_loadu_pd(&b.oy[k]);
    const __m256d c0 = _mm256_loadu_pd(&b.c0[k]);
    const __m256d c1 = _mm256_loadu_pd(&b.c1[k]);
    const __m256d c2 = _mm256_loadu_pd(&b.c2[k]);
    const __m256d c3 = _mm256_loadu_pd(&b.c3[k]);
    for (int q = 0; q < 3; ++q) {
      const __m256d tq = _mm256_set1_pd(kT[q]);
      const __m256d x = _mm256_fmadd_pd(tq, dx, ax);
      const __m256d y = _mm256_fmadd_pd(tq, dy, ay);
      const __m256d u = _mm256_mul_pd(_mm256_sub_pd(x, ox), ihx);
      const __m256d v = _mm256_mul_pd(_mm256_sub_pd(y, oy), ihy);
      const __m256d dens =
          _mm256_fmadd_pd(v, _mm256_fmadd_pd(c3, u, c2), _mm256_fmadd_pd(c1, u, c0));
      const __m256d rho = _mm256_mul_pd(_mm256_mul_pd(len, _mm256_set1_pd(kW[q])), dens);
      s0 = _mm256_add_pd(s0, rho);
      const __m256d rx = _mm256_mul_pd(rho, x);
      const __m256d ry = _mm256_mul_pd(rho, y);
      sx = _mm256_add_pd(sx, rx);
      sy = _mm256_add_pd(sy, ry);
      sxx = _mm256_fmadd_pd(rx, x, sxx);
      sxy = _mm256_fmadd_pd(rx, y, sxy);
      syy = _mm256_fmadd_pd(ry, y, syy);
    }
  }

  LineSums s{hsum(s0), hsum(sx), hsum(sy), hsum(sxx), hsum(sxy), hsum(syy)};
  if (n4 < n) {
    SegmentBatch tail;
    tail.inv_hx = b.inv_hx;
    tail.inv_hy = b.inv_hy;
    for (std::size_t k = n4; k < n; ++k)
      tail.push(b.ax[k], b.ay[k], b.bx[k], b.by[k],
                {b.ox[k], b.oy[k], b.c0[k], b.c1[k], b.c2[k], b.c3[k]});
    const LineSums r = integrate_segments_scalar(tail);
    s.s0 += r.s0;
    s.sx += r.sx;
    s.sy += r.sy;
    s.sxx += r.sxx;
    s.sxy += r.sxy;
    s.syy += r.syy;
  }
  return s;
}

}  // namespace sdot::kernels::detail

#endif
