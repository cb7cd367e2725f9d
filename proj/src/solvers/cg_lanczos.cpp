#include "sdot/solvers.hpp"

#include <cmath>

namespace sdot {

CgResult cg_lanczos(const LinearOperator& hessian, const Eigen::VectorXd& grad,
                    const Eigen::VectorXd& mass, int cg_max, double tol) {
  const Eigen::Index dim = grad.size();
  if (mass.size() * 2 != dim)
    throw Error(ErrorCode::InvalidInput, "cg_lanczos: mass/gradient size mismatch");

  // Per-coordinate M^1/2 and M^-1/2.
  Eigen::VectorXd sqrt_m(dim);
  for (Eigen::Index i = 0; i < mass.size(); ++i)
    sqrt_m.segment<2>(2 * i).setConstant(std::sqrt(std::max(mass[i], 1e-12)));
  const Eigen::VectorXd inv_sqrt_m = sqrt_m.cwiseInverse();
  auto apply_a = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
    return inv_sqrt_m.cwiseProduct(hessian(inv_sqrt_m.cwiseProduct(y)));
  };

  CgResult out;
  const Eigen::VectorXd b = -sqrt_m.cwiseProduct(grad);
  const double bnorm = b.norm();
  if (cg_max <= 0) cg_max = static_cast<int>(dim);
  if (bnorm == 0.0) {
    out.direction = Eigen::VectorXd::Zero(dim);
    return out;
  }

  Eigen::VectorXd y = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();

  // Lanczos tridiagonal T_k built from the CG scalars:
  //   diag_k = 1/alpha_k + beta_{k-1}/alpha_{k-1},  off_k = sqrt(beta_k)/alpha_k.
  // The determinant recurrence det_k = diag_k det_{k-1} - off_{k-1}^2 det_{k-2}
  // is tracked through its pivots pivot_k = det_k / det_{k-1}.
  double prev_inv_alpha = 0.0;
  double prev_beta = 0.0;
  double prev_pivot = 1.0;
  for (int k = 0; k < cg_max; ++k) {
    const Eigen::VectorXd q = apply_a(p);
    const double pap = p.dot(q);
    const double inv_alpha = pap / rr;
    double diag = inv_alpha;
    double off_sq = 0.0;
    if (k > 0) {
      diag += prev_beta * prev_inv_alpha;
      off_sq = prev_beta * prev_inv_alpha * prev_inv_alpha;
    }
    const double pivot = k > 0 ? diag - off_sq / prev_pivot : diag;

    if (std::abs(pivot) < 1e-14) {
      out.direction = -grad;
      out.pd_flag = false;
      out.breakdown = true;
      out.iters = k;
      return out;
    }
    if (pivot < 0.0) {
      out.pd_flag = false;
      out.iters = k;
      out.direction = k == 0 ? Eigen::VectorXd(-grad) : Eigen::VectorXd(inv_sqrt_m.cwiseProduct(y));
      return out;
    }

    const double alpha = rr / pap;
    y += alpha * p;
    r -= alpha * q;
    const double rr_new = r.squaredNorm();
    out.iters = k + 1;
    if (std::sqrt(rr_new) <= tol * bnorm) break;
    const double beta = rr_new / rr;
    p = r + beta * p;
    rr = rr_new;
    prev_inv_alpha = inv_alpha;
    prev_beta = beta;
    prev_pivot = pivot;
  }
  out.direction = inv_sqrt_m.cwiseProduct(y);
  return out;
}

}  // namespace sdot
