#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdot {

using Point = Eigen::Vector2d;
using Points = std::vector<Point>;

/// Axis-aligned rectangle; the transport domain Omega.
struct Rect {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 1.0;
  double ymax = 1.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool contains(const Point& p, double tol = 0.0) const {
    return p.x() >= xmin - tol && p.x() <= xmax + tol && p.y() >= ymin - tol &&
           p.y() <= ymax + tol;
  }
  static Rect unit() { return {}; }
};

/// Weighted Dirac measure sum_i m_i delta_{z_i} together with the dual
/// potentials phi_i attached to each site.
struct DiracCloud {
  Points positions;
  Eigen::VectorXd masses;
  Eigen::VectorXd potentials;

  int size() const { return static_cast<int>(positions.size()); }

  /// n sites with equal masses 1/n and zero potentials.
  static DiracCloud uniform(Points positions);

  /// Throws InvalidInput when sizes mismatch, masses are negative or do not
  /// sum to one, or any coordinate is non-finite.
  void validate() const;

  /// Flattened (x0, y0, x1, y1, ...) view of the positions.
  Eigen::VectorXd flat_positions() const;
  void set_flat_positions(const Eigen::VectorXd& flat);
};

/// Neumaier-compensated running sum. Objective values are sums of many
/// small per-cell terms and are compared across line-search trials.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  /// Adds a * b including the rounding error of the product.
  void add_product(double a, double b) {
    const double p = a * b;
    add(p);
    add(std::fma(a, b, -p));
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

enum class ErrorCode {
  InvalidInput,
  CoincidentSites,
  DegenerateConfiguration,
  SingularDual,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sdot
