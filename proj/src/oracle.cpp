#include "sdot/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace sdot::oracle {
namespace {

bool inside_convex(const Points& poly, const Point& p) {
  const std::size_t m = poly.size();
  for (std::size_t k = 0; k < m; ++k) {
    const Point& a = poly[k];
    const Point& b = poly[(k + 1) % m];
    if ((b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x()) < 0.0) return false;
  }
  return true;
}

}  // namespace

CellMoments riemann_moments(const BilinearDensity& density, const Points& polygon,
                            const Point& site, int grid_n) {
  CellMoments out;
  if (polygon.size() < 3) return out;
  Points poly = polygon;
  double a = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Point& p = poly[k];
    const Point& q = poly[(k + 1) % poly.size()];
    a += p.x() * q.y() - p.y() * q.x();
  }
  if (a < 0.0) std::reverse(poly.begin(), poly.end());

  const Rect& dom = density.domain();
  const double hx = dom.width() / grid_n, hy = dom.height() / grid_n;
  double lo_x = poly[0].x(), hi_x = lo_x, lo_y = poly[0].y(), hi_y = lo_y;
  for (const Point& p : poly) {
    lo_x = std::min(lo_x, p.x());
    hi_x = std::max(hi_x, p.x());
    lo_y = std::min(lo_y, p.y());
    hi_y = std::max(hi_y, p.y());
  }
  const int i0 = std::max(0, static_cast<int>((lo_x - dom.xmin) / hx) - 1);
  const int i1 = std::min(grid_n - 1, static_cast<int>((hi_x - dom.xmin) / hx) + 1);
  const int j0 = std::max(0, static_cast<int>((lo_y - dom.ymin) / hy) - 1);
  const int j1 = std::min(grid_n - 1, static_cast<int>((hi_y - dom.ymin) / hy) + 1);
  const double cell = hx * hy;
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const Point p(dom.xmin + (i + 0.5) * hx, dom.ymin + (j + 0.5) * hy);
      if (!inside_convex(poly, p)) continue;
      const double w = density.value_at(p) * cell;
      out.mass += w;
      out.first_moment += w * p;
      out.cost += w * 0.5 * (p - site).squaredNorm();
    }
  }
  return out;
}

FacetIntegrals riemann_facet(const BilinearDensity& density, const std::vector<Segment>& chain,
                             const Point& z_i, const Point& z_j, int samples) {
  FacetIntegrals out;
  for (const Segment& s : chain) {
    const double dl = s.length() / samples;
    for (int k = 0; k < samples; ++k) {
      const Point x = s.a + ((k + 0.5) / samples) * (s.b - s.a);
      const double w = density.value_at(x) * dl;
      out.s0 += w;
      out.s1 += w * (z_j - x);
      out.s2 += w * (z_j - x) * (z_i - x).transpose();
    }
  }
  return out;
}

Eigen::VectorXd fd_gradient(const ScalarFn& f, const Eigen::VectorXd& x0, double step) {
  Eigen::VectorXd g(x0.size());
  Eigen::VectorXd x = x0;
  for (Eigen::Index k = 0; k < x0.size(); ++k) {
    x[k] = x0[k] + step;
    const double fp = f(x);
    x[k] = x0[k] - step;
    const double fm = f(x);
    x[k] = x0[k];
    g[k] = (fp - fm) / (2.0 * step);
  }
  return g;
}

Eigen::MatrixXd fd_jacobian(const VectorFn& g, const Eigen::VectorXd& x0, double step) {
  Eigen::MatrixXd j;
  Eigen::VectorXd x = x0;
  for (Eigen::Index k = 0; k < x0.size(); ++k) {
    x[k] = x0[k] + step;
    const Eigen::VectorXd gp = g(x);
    x[k] = x0[k] - step;
    const Eigen::VectorXd gm = g(x);
    x[k] = x0[k];
    if (k == 0) j.resize(gp.size(), x0.size());
    j.col(k) = (gp - gm) / (2.0 * step);
  }
  return j;
}

double relative_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& oracle, double scale) {
  const double denom = std::max({analytic.norm(), oracle.norm(), scale, 1e-30});
  return (analytic - oracle).norm() / denom;
}

FDReport compare(const std::string& name, const Eigen::MatrixXd& analytic,
                 const Eigen::MatrixXd& oracle, double resolution, double tolerance, double scale) {
  FDReport r;
  r.quantity = name;
  r.analytic = analytic.norm();
  r.oracle = oracle.norm();
  r.abs_error = (analytic - oracle).norm();
  r.rel_error = relative_error(analytic, oracle, scale);
  r.resolution = resolution;
  r.tolerance = tolerance;
  r.relative = true;
  r.pass = r.rel_error <= tolerance;
  return r;
}

FDReport residual(const std::string& name, double value, double tolerance) {
  FDReport r;
  r.quantity = name;
  r.analytic = value;
  r.oracle = 0.0;
  r.abs_error = std::abs(value);
  r.rel_error = 0.0;
  r.tolerance = tolerance;
  r.relative = false;
  r.pass = r.abs_error <= tolerance;
  return r;
}

BilinearDensity random_density(std::mt19937_64& rng, int nx, int ny, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> corners(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (double& c : corners) c = u(rng);
  return BilinearDensity(nx, ny, std::move(corners));
}

DiracCloud random_cloud(std::mt19937_64& rng, int n, double phi_scale, double margin) {
  std::uniform_real_distribution<double> u(margin, 1.0 - margin);
  std::uniform_real_distribution<double> p(-1.0, 1.0);
  Points pts(static_cast<std::size_t>(n));
  for (Point& z : pts) z = Point(u(rng), u(rng));
  DiracCloud c = DiracCloud::uniform(std::move(pts));
  if (phi_scale > 0.0)
    for (int i = 0; i < n; ++i) c.potentials[i] = phi_scale * p(rng) / n;
  return c;
}

std::optional<DiracCloud> sample_smooth_cloud(std::mt19937_64& rng, int n, double phi_scale,
                                              double min_facet, int max_tries) {
  for (int t = 0; t < max_tries; ++t) {
    DiracCloud c = random_cloud(rng, n, phi_scale);
    const LaguerreDiagram d = build_diagram(c);
    if (!d.empty_cells().empty()) continue;
    if (d.min_interior_facet_length() < min_facet) continue;
    // Short domain-boundary edges mean a vertex sits near a corner of Omega.
    bool short_boundary = false;
    for (const CellPolygon& cell : d.cells) {
      const std::size_t m = cell.vertices.size();
      for (std::size_t k = 0; k < m; ++k)
        if ((cell.vertices[(k + 1) % m] - cell.vertices[k]).norm() < min_facet)
          short_boundary = true;
    }
    if (short_boundary) continue;
    return c;
  }
  return std::nullopt;
}

std::vector<FDReport> check_derivatives(const DiracCloud& cloud, const BilinearDensity& density,
                                        const DerivativeCheckOptions& opt) {
  const Rect& dom = density.domain();
  const double h = opt.step;

  auto with_phi = [&](const Eigen::VectorXd& phi) {
    DiracCloud c = cloud;
    c.potentials = phi;
    return c;
  };
  auto with_z = [&](const Eigen::VectorXd& z) {
    DiracCloud c = cloud;
    c.set_flat_positions(z);
    return c;
  };
  auto g_of = [&](const DiracCloud& c) { return evaluate_g(c, density, build_diagram(c, dom)); };
  auto first_of = [&](const DiracCloud& c) {
    return first_derivatives(c, density, build_diagram(c, dom));
  };

  const LaguerreDiagram diagram = build_diagram(cloud, dom);
  const TransportDerivatives d = second_derivatives(cloud, density, diagram);
  const Eigen::VectorXd phi0 = cloud.potentials;
  const Eigen::VectorXd z0 = cloud.flat_positions();

  std::vector<FDReport> rows;
  const Eigen::VectorXd fd_phi =
      fd_gradient([&](const Eigen::VectorXd& p) { return g_of(with_phi(p)); }, phi0, h);
  // grad_phi = m - nu(L), grad_z = M z - int x: scale by the cancelling terms.
  Eigen::VectorXd mz(z0.size());
  for (int i = 0; i < cloud.size(); ++i) mz.segment<2>(2 * i) = d.cell_masses[i] * cloud.positions[i];
  rows.push_back(compare("grad_phi", d.grad_phi, fd_phi, h, opt.grad_tol, cloud.masses.norm()));
  const Eigen::VectorXd fd_z =
      fd_gradient([&](const Eigen::VectorXd& z) { return g_of(with_z(z)); }, z0, h);
  rows.push_back(compare("grad_z", d.grad_z, fd_z, h, opt.grad_tol, mz.norm()));

  if (opt.check_hessian) {
    const Eigen::MatrixXd fd_pp = fd_jacobian(
        [&](const Eigen::VectorXd& p) { return Eigen::VectorXd(first_of(with_phi(p)).grad_phi); },
        phi0, h);
    rows.push_back(compare("hess_phiphi", Eigen::MatrixXd(d.hess_phiphi), fd_pp, h, opt.hess_tol));
    const Eigen::MatrixXd fd_zp = fd_jacobian(
        [&](const Eigen::VectorXd& p) { return Eigen::VectorXd(first_of(with_phi(p)).grad_z); },
        phi0, h);
    rows.push_back(compare("hess_zphi", Eigen::MatrixXd(d.hess_zphi), fd_zp, h, opt.hess_tol));
    const Eigen::MatrixXd fd_zz = fd_jacobian(
        [&](const Eigen::VectorXd& z) { return Eigen::VectorXd(first_of(with_z(z)).grad_z); }, z0,
        h);
    rows.push_back(compare("hess_zz", Eigen::MatrixXd(d.hess_zz), fd_zz, h, opt.hess_tol));

    const Eigen::MatrixXd pp(d.hess_phiphi);
    const Eigen::MatrixXd zz(d.hess_zz);
    rows.push_back(residual("hess_phiphi_row_sum", pp.rowwise().sum().cwiseAbs().maxCoeff(),
                            opt.identity_tol));
    rows.push_back(
        residual("hess_phiphi_symmetry", (pp - pp.transpose()).cwiseAbs().maxCoeff(),
                 opt.identity_tol));
    rows.push_back(
        residual("hess_zz_symmetry", (zz - zz.transpose()).cwiseAbs().maxCoeff(),
                 opt.identity_tol));
    // Total mass is conserved when any single site moves.
    const Eigen::MatrixXd zp(d.hess_zphi);
    rows.push_back(residual("hess_zphi_row_sum", zp.rowwise().sum().cwiseAbs().maxCoeff(),
                            opt.identity_tol));
  }
  return rows;
}

}  // namespace sdot::oracle
