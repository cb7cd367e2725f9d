#pragma once

// Semi-discrete transport functional
//
//   g(phi, z, m) = sum_i int_{L_i(z, phi)} (1/2 |z_i - x|^2 - phi_i) dnu(x) + sum_i phi_i m_i
//
// and its exact first and second derivatives for the Euclidean cost.
//
// Sign conventions: g is concave in phi, so hess_phiphi is negative
// semidefinite with constants in its kernel. Position vectors are flattened
// as (x0, y0, x1, y1, ...); grad_z and the z blocks use that layout.

#include "sdot/density.hpp"
#include "sdot/geometry.hpp"
#include "sdot/types.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <memory>
#include <vector>

namespace sdot {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Per-cell integrals of the density over a diagram.
struct CellIntegrals {
  std::vector<CellMoments> moments;
  /// nu(L_i).
  Eigen::VectorXd masses;
  /// nu-barycenters; polygon centroid (or the site, for empty polygons) when
  /// the cell carries no mass.
  Points barycenters;
  /// Cells whose barycenter came from the fallback.
  std::vector<int> massless;
};

CellIntegrals integrate_cells(const DiracCloud& cloud, const BilinearDensity& density,
                              const LaguerreDiagram& diagram);

/// g(phi, z, m).
double evaluate_g(const DiracCloud& cloud, const BilinearDensity& density,
                  const LaguerreDiagram& diagram);
double evaluate_g(const DiracCloud& cloud, const CellIntegrals& cells);

struct FirstDerivatives {
  double value = 0.0;
  /// dg/dphi_i = m_i - nu(L_i).
  Eigen::VectorXd grad_phi;
  /// dg/dz_i = M_i (z_i - zbar_i), flattened.
  Eigen::VectorXd grad_z;
  Eigen::VectorXd cell_masses;
  Points barycenters;
  std::vector<int> empty_cells;
};

FirstDerivatives first_derivatives(const DiracCloud& cloud, const BilinearDensity& density,
                                   const LaguerreDiagram& diagram);
FirstDerivatives first_derivatives(const DiracCloud& cloud, const CellIntegrals& cells);

struct TransportDerivatives : FirstDerivatives {
  /// n x n, negative semidefinite, zero row sums.
  SparseMatrix hess_phiphi;
  /// 2n x n, d^2 g / dz dphi.
  SparseMatrix hess_zphi;
  /// 2n x 2n, symmetric.
  SparseMatrix hess_zz;
};

/// All blocks of the Hessian, assembled from the interior facets. Facets
/// shorter than 1e-12 are skipped. Throws Error(DegenerateConfiguration)
/// when two adjacent sites are closer than 1e-12.
TransportDerivatives second_derivatives(const DiracCloud& cloud, const BilinearDensity& density,
                                        const LaguerreDiagram& diagram);
TransportDerivatives second_derivatives(const DiracCloud& cloud, const BilinearDensity& density,
                                        const LaguerreDiagram& diagram,
                                        const CellIntegrals& cells);

/// Solves hess_phiphi * Y = B on the mean-zero subspace (right-hand sides
/// and solutions projected onto mean zero). Factorizes once.
class DualSystemSolver {
 public:
  /// Throws Error(SingularDual) when the mean-zero restriction is singular
  /// (disconnected facet graph, empty cells).
  explicit DualSystemSolver(const SparseMatrix& hess_phiphi);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

 private:
  int n_;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;
};

/// Hessian of z -> max_phi g(phi, z, m) at phi = phi*(z):
/// H_zz - H_zphi (H_phiphi)^-1 H_phiz, dense 2n x 2n.
Eigen::MatrixXd reduced_hessian(const TransportDerivatives& d);
Eigen::MatrixXd reduced_hessian(const DiracCloud& cloud, const BilinearDensity& density,
                                const LaguerreDiagram& diagram);

/// Matrix-free application of the reduced Hessian.
class ReducedHessianOperator {
 public:
  explicit ReducedHessianOperator(const TransportDerivatives& d);
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;

 private:
  const TransportDerivatives& d_;
  DualSystemSolver dual_;
};

struct VoronoiEnergy {
  /// g(0, z, m~) with m~_i = nu(V_i); includes the 1/2 of the cost.
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::VectorXd masses;
  Points barycenters;
};

VoronoiEnergy voronoi_energy(const DiracCloud& cloud, const BilinearDensity& density,
                             const GeometryOptions& options = {});

}  // namespace sdot
