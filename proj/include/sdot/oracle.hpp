#pragma once

// Independent verification oracles: midpoint-rule integration and central
// finite differences. Nothing here goes through the pixel clipping or the
// quadrature kernels.

#include "sdot/density.hpp"
#include "sdot/transport.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sdot::oracle {

struct FDReport {
  std::string quantity;
  double analytic = 0.0;  ///< norm of the analytic quantity
  double oracle = 0.0;    ///< norm of the oracle quantity
  double abs_error = 0.0;
  /// abs_error / max(analytic, oracle, 1e-30)
  double rel_error = 0.0;
  double resolution = 0.0;  ///< FD step or grid size used
  double tolerance = 0.0;
  bool relative = true;  ///< whether `tolerance` bounds rel_error or abs_error
  bool pass = false;
};

/// Midpoint rule on a grid_n x grid_n lattice over the density domain,
/// restricted to the polygon by point-in-convex-polygon tests.
CellMoments riemann_moments(const BilinearDensity& density, const Points& polygon,
                            const Point& site, int grid_n);

/// Midpoint rule along a segment chain with `samples` points per segment.
FacetIntegrals riemann_facet(const BilinearDensity& density, const std::vector<Segment>& chain,
                             const Point& z_i, const Point& z_j, int samples);

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Central differences (f(x + h e_k) - f(x - h e_k)) / 2h.
Eigen::VectorXd fd_gradient(const ScalarFn& f, const Eigen::VectorXd& x0, double step);
/// Column k = (g(x + h e_k) - g(x - h e_k)) / 2h.
Eigen::MatrixXd fd_jacobian(const VectorFn& g, const Eigen::VectorXd& x0, double step);

/// |a - o| / max(|a|, |o|, scale) in the Frobenius norm. `scale` is the size
/// of the terms that cancel in the quantity, so a vanishing quantity is not
/// judged against its own round-off.
double relative_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& oracle,
                      double scale = 0.0);

FDReport compare(const std::string& name, const Eigen::MatrixXd& analytic,
                 const Eigen::MatrixXd& oracle, double resolution, double tolerance,
                 double scale = 0.0);
/// Row for a quantity that should vanish (absolute tolerance).
FDReport residual(const std::string& name, double value, double tolerance);

// ---------------------------------------------------------------------------
// Random configurations for derivative tests.

/// Random bilinear density with corner values uniform in [lo, hi].
BilinearDensity random_density(std::mt19937_64& rng, int nx, int ny, double lo = 0.2,
                               double hi = 1.8);

/// n i.i.d. uniform sites in the unit square (margin keeps them off the
/// boundary), equal masses, potentials uniform in [-phi_scale, phi_scale] / n.
DiracCloud random_cloud(std::mt19937_64& rng, int n, double phi_scale = 0.0,
                        double margin = 0.02);

/// Draws clouds until every interior facet is at least min_facet long and
/// no cell is empty. Gives up after max_tries.
std::optional<DiracCloud> sample_smooth_cloud(std::mt19937_64& rng, int n, double phi_scale,
                                              double min_facet = 1e-3, int max_tries = 200);

struct DerivativeCheckOptions {
  double step = 1e-5;
  double grad_tol = 1e-6;
  double hess_tol = 1e-4;
  double identity_tol = 1e-10;
  bool check_hessian = true;
};

/// Runs every first- and second-derivative comparison for one configuration:
/// grad_phi and grad_z against FD of g, the three Hessian blocks against FD
/// of the first derivatives, plus the row-sum and symmetry identities.
std::vector<FDReport> check_derivatives(const DiracCloud& cloud, const BilinearDensity& density,
                                        const DerivativeCheckOptions& options = {});

}  // namespace sdot::oracle
