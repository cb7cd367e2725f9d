#include "sdot/predicates.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace sdot::predicates {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon() * 0.5;
// Shewchuk's bound for the first-stage orient2d filter.
constexpr double kCcwErrBoundA = (3.0 + 16.0 * kEps) * kEps;

struct Pair {
  double hi;
  double lo;
};

Pair two_sum(double a, double b) {
  const double s = a + b;
  const double bv = s - a;
  const double av = s - bv;
  return {s, (a - av) + (b - bv)};
}

Pair two_product(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

// Adds a double into a nonoverlapping expansion (increasing magnitude).
void grow_expansion(std::vector<double>& e, double b) {
  double q = b;
  for (double& c : e) {
    const Pair s = two_sum(q, c);
    c = s.lo;
    q = s.hi;
  }
  e.push_back(q);
}

}  // namespace

double orient2d_fast(const Point& a, const Point& b, const Point& c) {
  return (a.x() - c.x()) * (b.y() - c.y()) - (a.y() - c.y()) * (b.x() - c.x());
}

int orient2d_exact(const Point& a, const Point& b, const Point& c) {
  // det = ax*by - ax*cy - cx*by - ay*bx + ay*cx + cy*bx
  const Pair terms[6] = {
      two_product(a.x(), b.y()),  two_product(-a.x(), c.y()), two_product(-c.x(), b.y()),
      two_product(-a.y(), b.x()), two_product(a.y(), c.x()),  two_product(c.y(), b.x()),
  };
  std::vector<double> e;
  e.reserve(13);
  for (const Pair& t : terms) {
    grow_expansion(e, t.lo);
    grow_expansion(e, t.hi);
  }
  for (auto it = e.rbegin(); it != e.rend(); ++it) {
    if (*it > 0.0) return 1;
    if (*it < 0.0) return -1;
  }
  return 0;
}

int orient2d(const Point& a, const Point& b, const Point& c) {
  const double detleft = (a.x() - c.x()) * (b.y() - c.y());
  const double detright = (a.y() - c.y()) * (b.x() - c.x());
  const double det = detleft - detright;
  double detsum = 0.0;
  if (detleft > 0.0) {
    if (detright <= 0.0) return det > 0.0 ? 1 : (det < 0.0 ? -1 : 0);
    detsum = detleft + detright;
  } else if (detleft < 0.0) {
    if (detright >= 0.0) return det > 0.0 ? 1 : (det < 0.0 ? -1 : 0);
    detsum = -detleft - detright;
  } else {
    return det > 0.0 ? 1 : (det < 0.0 ? -1 : 0);
  }
  const double errbound = kCcwErrBoundA * detsum;
  if (det >= errbound) return 1;
  if (-det >= errbound) return -1;
  return orient2d_exact(a, b, c);
}

}  // namespace sdot::predicates
