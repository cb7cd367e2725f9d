#pragma once

#include "sdot/types.hpp"

namespace sdot::predicates {

/// Sign of the orientation determinant of (a, b, c): +1 counterclockwise,
/// -1 clockwise, 0 collinear. A floating-point filter decides the easy
/// cases; ambiguous ones are resolved exactly with expansion arithmetic.
int orient2d(const Point& a, const Point& b, const Point& c);

/// Plain double evaluation of the same determinant (twice the signed area).
double orient2d_fast(const Point& a, const Point& b, const Point& c);

/// Exact fallback, exposed for testing the filter.
int orient2d_exact(const Point& a, const Point& b, const Point& c);

}  // namespace sdot::predicates
