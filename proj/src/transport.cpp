#include "sdot/transport.hpp"

#include "sdot/parallel.hpp"

#include <cmath>
#include <string>

namespace sdot {
namespace {

constexpr double kMinFacetLength = 1e-12;
constexpr double kMinSiteDistance = 1e-12;

void check_match(const DiracCloud& cloud, const LaguerreDiagram& diagram) {
  if (cloud.size() != diagram.size())
    throw Error(ErrorCode::InvalidInput, "diagram and cloud sizes differ");
  if (cloud.masses.size() != cloud.size() || cloud.potentials.size() != cloud.size())
    throw Error(ErrorCode::InvalidInput, "cloud masses/potentials size mismatch");
}

}  // namespace

CellIntegrals integrate_cells(const DiracCloud& cloud, const BilinearDensity& density,
                              const LaguerreDiagram& diagram) {
  check_match(cloud, diagram);
  const int n = cloud.size();
  CellIntegrals out;
  out.moments.resize(n);
  out.masses.resize(n);
  out.barycenters.resize(n);
  std::vector<char> fallback(static_cast<std::size_t>(n), 0);

  parallel_for(n, [&](int begin, int end) {
    kernels::TriangleBatch batch;
    for (int i = begin; i < end; ++i) {
      const CellPolygon& cell = diagram.cells[i];
      out.moments[i] = polygon_moments(density, cell.vertices, cloud.positions[i], batch, false);
      out.masses[i] = out.moments[i].mass;
      bool fb = false;
      out.barycenters[i] = cell.empty() ? cloud.positions[i]
                                        : cell_barycenter(out.moments[i], cell.vertices, &fb);
      fallback[i] = fb || cell.empty();
    }
  });
  for (int i = 0; i < n; ++i)
    if (fallback[i]) out.massless.push_back(i);
  return out;
}

double evaluate_g(const DiracCloud& cloud, const CellIntegrals& cells) {
  CompensatedSum g;
  for (int i = 0; i < cloud.size(); ++i) {
    g.add(cells.moments[i].cost);
    g.add_product(-cloud.potentials[i], cells.masses[i]);
    g.add_product(cloud.potentials[i], cloud.masses[i]);
  }
  return g.value();
}

double evaluate_g(const DiracCloud& cloud, const BilinearDensity& density,
                  const LaguerreDiagram& diagram) {
  return evaluate_g(cloud, integrate_cells(cloud, density, diagram));
}

FirstDerivatives first_derivatives(const DiracCloud& cloud, const CellIntegrals& cells) {
  const int n = cloud.size();
  FirstDerivatives d;
  d.value = evaluate_g(cloud, cells);
  d.grad_phi = cloud.masses - cells.masses;
  d.grad_z.resize(2 * n);
  for (int i = 0; i < n; ++i)
    d.grad_z.segment<2>(2 * i) =
        cells.masses[i] * cloud.positions[i] - cells.moments[i].first_moment;
  d.cell_masses = cells.masses;
  d.barycenters = cells.barycenters;
  for (int i = 0; i < n; ++i)
    if (!(cells.masses[i] > 0.0)) d.empty_cells.push_back(i);
  return d;
}

FirstDerivatives first_derivatives(const DiracCloud& cloud, const BilinearDensity& density,
                                   const LaguerreDiagram& diagram) {
  return first_derivatives(cloud, integrate_cells(cloud, density, diagram));
}

TransportDerivatives second_derivatives(const DiracCloud& cloud, const BilinearDensity& density,
                                        const LaguerreDiagram& diagram) {
  return second_derivatives(cloud, density, diagram, integrate_cells(cloud, density, diagram));
}

TransportDerivatives second_derivatives(const DiracCloud& cloud, const BilinearDensity& density,
                                        const LaguerreDiagram& diagram,
                                        const CellIntegrals& cells) {
  check_match(cloud, diagram);
  const int n = cloud.size();
  TransportDerivatives d;
  static_cast<FirstDerivatives&>(d) = first_derivatives(cloud, cells);

  const int nf = diagram.num_interior_facets;
  std::vector<SegmentMoments> facet_moments(static_cast<std::size_t>(nf));
  std::vector<char> used(static_cast<std::size_t>(nf), 0);
  for (int f = 0; f < nf; ++f) {
    const Facet& facet = diagram.facets[f];
    if (facet.length() < kMinFacetLength) continue;
    if ((cloud.positions[facet.i] - cloud.positions[facet.j]).norm() < kMinSiteDistance)
      throw Error(ErrorCode::DegenerateConfiguration,
                  "adjacent sites " + std::to_string(facet.i) + " and " +
                      std::to_string(facet.j) + " coincide");
    used[f] = 1;
  }
  parallel_for(nf, [&](int begin, int end) {
    kernels::SegmentBatch batch;
    for (int f = begin; f < end; ++f) {
      if (!used[f]) continue;
      const Facet& facet = diagram.facets[f];
      facet_moments[f] = segment_moments(density, facet.segments, facet.segments.front().a, batch);
    }
  });

  std::vector<Eigen::Triplet<double>> tpp, tzp, tzz;
  tpp.reserve(static_cast<std::size_t>(n + 2 * nf));
  tzp.reserve(static_cast<std::size_t>(4 * n + 8 * nf));
  tzz.reserve(static_cast<std::size_t>(4 * n + 16 * nf));
  Eigen::VectorXd diag_pp = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd diag_zp = Eigen::MatrixXd::Zero(2 * n, 1);
  std::vector<Eigen::Matrix2d> diag_zz(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) diag_zz[i] = cells.masses[i] * Eigen::Matrix2d::Identity();

  for (int f = 0; f < nf; ++f) {
    if (!used[f]) continue;
    const Facet& facet = diagram.facets[f];
    const int i = facet.i, j = facet.j;
    const Point& zi = cloud.positions[i];
    const Point& zj = cloud.positions[j];
    const double inv_dist = 1.0 / (zi - zj).norm();
    const SegmentMoments& s = facet_moments[f];
    const Point o = facet.segments.front().a;

    const double w = s.s0 * inv_dist;
    tpp.emplace_back(i, j, w);
    tpp.emplace_back(j, i, w);
    diag_pp[i] -= w;
    diag_pp[j] -= w;

    // int (z_k - x) m / |z_i - z_j|
    const Point vi = ((zi - o) * s.s0 - s.s1) * inv_dist;
    const Point vj = ((zj - o) * s.s0 - s.s1) * inv_dist;
    for (int c = 0; c < 2; ++c) {
      tzp.emplace_back(2 * j + c, i, -vj[c]);
      tzp.emplace_back(2 * i + c, j, -vi[c]);
      diag_zp(2 * i + c, 0) += vi[c];
      diag_zp(2 * j + c, 0) += vj[c];
    }

    const Eigen::Matrix2d bij = outer_moment(s, o, zi, zj) * inv_dist;
    diag_zz[i] -= outer_moment(s, o, zi, zi) * inv_dist;
    diag_zz[j] -= outer_moment(s, o, zj, zj) * inv_dist;
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        tzz.emplace_back(2 * i + r, 2 * j + c, bij(r, c));
        tzz.emplace_back(2 * j + c, 2 * i + r, bij(r, c));
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    tpp.emplace_back(i, i, diag_pp[i]);
    for (int c = 0; c < 2; ++c) tzp.emplace_back(2 * i + c, i, diag_zp(2 * i + c, 0));
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) tzz.emplace_back(2 * i + r, 2 * i + c, diag_zz[i](r, c));
  }

  d.hess_phiphi.resize(n, n);
  d.hess_phiphi.setFromTriplets(tpp.begin(), tpp.end());
  d.hess_zphi.resize(2 * n, n);
  d.hess_zphi.setFromTriplets(tzp.begin(), tzp.end());
  d.hess_zz.resize(2 * n, 2 * n);
  d.hess_zz.setFromTriplets(tzz.begin(), tzz.end());
  return d;
}

DualSystemSolver::DualSystemSolver(const SparseMatrix& h) : n_(static_cast<int>(h.rows())) {
  if (n_ <= 1) return;
  // Pin phi_0: the remaining block of -H is positive definite iff the facet
  // graph is connected.
  const double scale = std::max(1e-300, (-Eigen::VectorXd(h.diagonal())).maxCoeff());
  for (int i = 0; i < n_; ++i)
    if (!(-h.coeff(i, i) > 1e-13 * scale))
      throw Error(ErrorCode::SingularDual, "cell " + std::to_string(i) + " has no facets");
  SparseMatrix k = -h.bottomRightCorner(n_ - 1, n_ - 1);
  ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(k);
  if (ldlt_->info() != Eigen::Success)
    throw Error(ErrorCode::SingularDual, "dual Hessian factorization failed");
  const Eigen::VectorXd dvec = ldlt_->vectorD();
  if (!(dvec.minCoeff() > 1e-13 * scale))
    throw Error(ErrorCode::SingularDual, "dual Hessian is singular on mean-zero vectors");
}

Eigen::VectorXd DualSystemSolver::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
  if (n_ <= 1) return y;
  Eigen::VectorXd b = rhs.array() - rhs.mean();
  y.tail(n_ - 1) = -ldlt_->solve(b.tail(n_ - 1));
  y.array() -= y.mean();
  return y;
}

Eigen::MatrixXd DualSystemSolver::solve(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n_, rhs.cols());
  if (n_ <= 1) return y;
  Eigen::MatrixXd b = rhs.rowwise() - rhs.colwise().mean();
  y.bottomRows(n_ - 1) = -ldlt_->solve(b.bottomRows(n_ - 1));
  y.rowwise() -= y.colwise().mean();
  return y;
}

Eigen::MatrixXd reduced_hessian(const TransportDerivatives& d) {
  const DualSystemSolver dual(d.hess_phiphi);
  const Eigen::MatrixXd hpz = Eigen::MatrixXd(d.hess_zphi.transpose());
  const Eigen::MatrixXd y = dual.solve(hpz);
  Eigen::MatrixXd r = Eigen::MatrixXd(d.hess_zz) - d.hess_zphi * y;
  return 0.5 * (r + r.transpose());
}

Eigen::MatrixXd reduced_hessian(const DiracCloud& cloud, const BilinearDensity& density,
                                const LaguerreDiagram& diagram) {
  return reduced_hessian(second_derivatives(cloud, density, diagram));
}

ReducedHessianOperator::ReducedHessianOperator(const TransportDerivatives& d)
    : d_(d), dual_(d.hess_phiphi) {}

Eigen::VectorXd ReducedHessianOperator::apply(const Eigen::VectorXd& v) const {
  const Eigen::VectorXd b = d_.hess_zphi.transpose() * v;
  return d_.hess_zz * v - d_.hess_zphi * dual_.solve(b);
}

VoronoiEnergy voronoi_energy(const DiracCloud& cloud, const BilinearDensity& density,
                             const GeometryOptions& options) {
  const LaguerreDiagram vd = voronoi_diagram(cloud, density.domain(), options);
  DiracCloud zero = cloud;
  zero.potentials = Eigen::VectorXd::Zero(cloud.size());
  const CellIntegrals cells = integrate_cells(zero, density, vd);
  VoronoiEnergy e;
  const int n = cloud.size();
  e.grad.resize(2 * n);
  CompensatedSum value;
  for (int i = 0; i < n; ++i) {
    value.add(cells.moments[i].cost);
    e.grad.segment<2>(2 * i) = cells.masses[i] * cloud.positions[i] - cells.moments[i].first_moment;
  }
  e.value = value.value();
  e.masses = cells.masses;
  e.barycenters = cells.barycenters;
  return e;
}

}  // namespace sdot
