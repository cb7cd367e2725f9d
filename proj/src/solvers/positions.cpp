#include "sdot/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

namespace sdot {

OuterEvaluation evaluate_outer(const DiracCloud& cloud, const BilinearDensity& density,
                               const SolverConfig& cfg, const Eigen::VectorXd& phi_warm,
                               double dual_tol) {
  OuterEvaluation e;
  e.cloud = cloud;
  const int n = cloud.size();
  if (cfg.mode == Mode::Stippling) {
    e.cloud.potentials = Eigen::VectorXd::Zero(n);
  } else {
    SolverConfig inner = cfg;
    inner.dual_tol = dual_tol;
    const DualResult dual = solve_dual(cloud, density, phi_warm, inner);
    e.dual_iters = dual.iterations;
    if (dual.status != SolverStatus::Converged) e.ok = false;
    e.cloud.potentials = dual.phi;
  }
  e.diagram = build_diagram(e.cloud, cfg.domain, cfg.geometry);
  e.cells = integrate_cells(e.cloud, density, e.diagram);
  e.first = first_derivatives(e.cloud, e.cells);
  if (cfg.mode == Mode::Stippling) {
    // G_S(z) = g(0, z, m~): only the cost term survives.
    CompensatedSum sum;
    for (int i = 0; i < n; ++i) sum.add(e.cells.moments[i].cost);
    e.objective = sum.value();
  } else {
    e.objective = e.first.value;
  }
  e.grad_metric.resize(2 * n);
  double m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double mi = e.cells.masses[i];
    const Eigen::Vector2d gi = e.first.grad_z.segment<2>(2 * i);
    e.grad_metric.segment<2>(2 * i) = mi > 1e-300 ? Eigen::Vector2d(gi / mi) : Eigen::Vector2d::Zero();
    m2 += mi > 1e-300 ? gi.squaredNorm() / mi : 0.0;
  }
  e.grad_M_norm = std::sqrt(m2);
  return e;
}

namespace {

enum class Method { Lloyd, Newton };

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

bool trial_admissible(const Eigen::VectorXd& z, const Rect& domain) {
  for (Eigen::Index i = 0; i < z.size() / 2; ++i)
    if (!domain.contains(z.segment<2>(2 * i))) return false;
  return true;
}

double inner_tolerance(const SolverConfig& cfg, double grad_M_norm) {
  double tol = cfg.dual_tol;
  if (cfg.inner_adaptive) tol = std::max(tol, std::min(1e-6, 1e-2 * grad_M_norm * grad_M_norm));
  // The dual residual perturbs the blue-noise gradient through dphi*/dz; keep
  // it well below the gradient being measured.
  if (cfg.mode == Mode::BlueNoise) tol = std::min(tol, std::max(1e-14, 1e-3 * grad_M_norm));
  return tol;
}

struct Direction {
  Eigen::VectorXd d;
  int cg_iters = 0;
  bool pd = false;
};

Direction newton_direction(const OuterEvaluation& e, const BilinearDensity& density,
                           const SolverConfig& cfg) {
  const int n = e.cloud.size();
  const int cg_max = cfg.cg_max > 0 ? cfg.cg_max : 2 * n;
  Direction out;
  try {
    const TransportDerivatives h = second_derivatives(e.cloud, density, e.diagram, e.cells);
    CgResult cg;
    if (cfg.mode == Mode::Stippling) {
      cg = cg_lanczos([&](const Eigen::VectorXd& v) { return Eigen::VectorXd(h.hess_zz * v); },
                      e.grad_metric, e.cells.masses, cg_max, cfg.cg_tol);
    } else {
      const ReducedHessianOperator op(h);
      cg = cg_lanczos([&](const Eigen::VectorXd& v) { return op.apply(v); }, e.grad_metric,
                      e.cells.masses, cg_max, cfg.cg_tol);
    }
    out.d = cg.direction;
    out.cg_iters = cg.iters;
    out.pd = cg.pd_flag;
  } catch (const Error&) {
    // Degenerate Hessian: fall back to the Lloyd step.
    out.d = -e.grad_metric;
    out.pd = false;
  }
  return out;
}

PositionsResult run(const DiracCloud& start, const BilinearDensity& density,
                    const SolverConfig& cfg, Method method) {
  cfg.validate();
  start.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int n = start.size();

  DiracCloud cloud = start;
  if (cfg.mode == Mode::BlueNoise) cloud.masses = Eigen::VectorXd::Constant(n, 1.0 / n);
  Eigen::VectorXd phi = cfg.mode == Mode::BlueNoise ? Eigen::VectorXd(start.potentials)
                                                    : Eigen::VectorXd::Zero(n);

  PositionsResult res;
  OuterEvaluation cur = evaluate_outer(cloud, density, cfg, phi, cfg.dual_tol);
  if (!cur.ok) {
    res.status = SolverStatus::DualFailure;
  }
  int dual_iters = cur.dual_iters;

  for (int k = 0; cur.ok; ++k) {
    TraceRecord rec;
    rec.iter = k;
    rec.objective = cur.objective;
    rec.grad_M_norm = cur.grad_M_norm;
    rec.grad_l2_norm = cur.first.grad_z.norm();
    rec.dual_iters = dual_iters;

    if (cur.grad_M_norm <= cfg.outer_tol) {
      rec.wall_ms = elapsed_ms(t0);
      res.trace.records.push_back(rec);
      res.status = SolverStatus::Converged;
      break;
    }
    if (k >= cfg.max_outer) {
      rec.wall_ms = elapsed_ms(t0);
      res.trace.records.push_back(rec);
      res.status = SolverStatus::MaxIterations;
      break;
    }

    Direction dir;
    if (method == Method::Lloyd) {
      dir.d = -cur.grad_metric;
    } else {
      dir = newton_direction(cur, density, cfg);
    }
    rec.cg_iters = dir.cg_iters;
    rec.pd_flag = dir.pd;

    const Eigen::VectorXd z = cur.cloud.flat_positions();
    const double directional = cur.first.grad_z.dot(dir.d);  // <grad G, d>_M
    const double round = roundoff_scale(cur.objective);
    double sigma = 1.0;
    std::optional<OuterEvaluation> next;
    int trial_dual_iters = 0;
    while (sigma >= 1e-12) {
      const Eigen::VectorXd zt = z + sigma * dir.d;
      if (trial_admissible(zt, cfg.domain)) {
        DiracCloud trial = cloud;
        trial.set_flat_positions(zt);
        try {
          OuterEvaluation e = evaluate_outer(trial, density, cfg, cur.cloud.potentials,
                                             inner_tolerance(cfg, cur.grad_M_norm));
          trial_dual_iters += e.dual_iters;
          bool ok = e.ok && wolfe_accept(e.objective, cur.objective, sigma * directional,
                                         cfg.wolfe_c1);
          if (e.ok && !ok && std::abs(sigma * directional) <= round) {
            // Objective change is below its evaluation noise: accept on a
            // strictly smaller gradient with the objective within that noise.
            ok = e.objective <= cur.objective + round && e.grad_M_norm < cur.grad_M_norm;
            rec.roundoff_accept = ok;
          }
          if (ok) {
            next = std::move(e);
            break;
          }
        } catch (const Error& err) {
          if (err.code() != ErrorCode::CoincidentSites &&
              err.code() != ErrorCode::DegenerateConfiguration)
            throw;
        }
      }
      sigma *= 0.5;
    }
    rec.step_sigma = next ? sigma : 0.0;
    rec.wall_ms = elapsed_ms(t0);
    res.trace.records.push_back(rec);
    if (!next) {
      res.status = SolverStatus::LineSearchStall;
      break;
    }
    cur = std::move(*next);
    cloud.positions = cur.cloud.positions;
    dual_iters = trial_dual_iters;
  }

  res.cloud = cur.cloud;
  if (cfg.mode == Mode::Stippling) res.cloud.masses = cur.cells.masses;
  res.iterations = static_cast<int>(res.trace.records.size()) - 1;
  res.objective = cur.objective;
  res.grad_M_norm = cur.grad_M_norm;
  res.cell_masses = cur.cells.masses;
  return res;
}

}  // namespace

PositionsResult lloyd_solve(const DiracCloud& cloud, const BilinearDensity& density,
                            const SolverConfig& cfg) {
  return run(cloud, density, cfg, Method::Lloyd);
}

PositionsResult newton_solve(const DiracCloud& cloud, const BilinearDensity& density,
                             const SolverConfig& cfg) {
  return run(cloud, density, cfg, Method::Newton);
}

}  // namespace sdot
