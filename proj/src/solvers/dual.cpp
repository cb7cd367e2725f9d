#include "sdot/solvers.hpp"

#include <Eigen/SparseCholesky>

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace sdot {

const char* mode_name(Mode mode) { return mode == Mode::Stippling ? "stipple" : "bluenoise"; }

const char* status_name(SolverStatus status) {
  switch (status) {
    case SolverStatus::Converged:
      return "converged";
    case SolverStatus::MaxIterations:
      return "max-iterations";
    case SolverStatus::LineSearchStall:
      return "line-search-stall";
    case SolverStatus::EmptyCellStall:
      return "empty-cell-stall";
    case SolverStatus::DualFailure:
      return "dual-failure";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (!(dual_tol > 0.0) || !(outer_tol > 0.0) || !(cg_tol > 0.0))
    throw Error(ErrorCode::InvalidInput, "solver tolerances must be positive");
  if (!(wolfe_c1 > 0.0 && wolfe_c1 < 1.0))
    throw Error(ErrorCode::InvalidInput, "wolfe_c1 must lie in (0, 1)");
  if (max_outer < 0 || max_inner < 1)
    throw Error(ErrorCode::InvalidInput, "iteration limits must be positive");
  if (!(lm_sigma0 > 0.0)) throw Error(ErrorCode::InvalidInput, "lm_sigma0 must be positive");
}

double roundoff_scale(double value) {
  return 64.0 * std::numeric_limits<double>::epsilon() * std::abs(value);
}

bool SolverTrace::strictly_monotone(bool decreasing) const {
  for (std::size_t k = 1; k < records.size(); ++k) {
    const double a = records[k - 1].objective, b = records[k].objective;
    if (decreasing ? !(b < a) : !(b > a)) return false;
  }
  return true;
}

bool SolverTrace::monotone(bool decreasing) const {
  for (std::size_t k = 1; k < records.size(); ++k) {
    const double a = records[k - 1].objective, b = records[k].objective;
    const double slack = roundoff_scale(a);
    const bool ok = records[k - 1].roundoff_accept
                        ? (decreasing ? b <= a + slack : b >= a - slack)
                        : (decreasing ? b < a : b > a);
    if (!ok) return false;
  }
  return true;
}

int SolverTrace::roundoff_steps() const {
  int count = 0;
  for (const TraceRecord& r : records) count += r.roundoff_accept;
  return count;
}

std::string SolverTrace::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << kTraceHeader << '\n';
  for (const TraceRecord& r : records) {
    os << r.iter << ',' << r.objective << ',' << r.grad_M_norm << ',' << r.grad_l2_norm << ','
       << r.step_sigma << ',' << r.cg_iters << ',' << (r.pd_flag ? 1 : 0) << ',' << r.dual_iters
       << ',' << r.wall_ms << '\n';
  }
  return os.str();
}

bool wolfe_accept(double objective_new, double objective_old, double directional, double c1) {
  return objective_new < objective_old + c1 * directional;
}

namespace {

struct DualState {
  DiracCloud cloud;
  LaguerreDiagram diagram;
  TransportDerivatives derivs;
};

DualState dual_state(const DiracCloud& base, const BilinearDensity& density,
                     const Eigen::VectorXd& phi, const SolverConfig& cfg, bool hessian) {
  DualState s;
  s.cloud = base;
  s.cloud.potentials = phi;
  s.diagram = build_diagram(s.cloud, cfg.domain, cfg.geometry);
  const CellIntegrals cells = integrate_cells(s.cloud, density, s.diagram);
  if (hessian) {
    s.derivs = second_derivatives(s.cloud, density, s.diagram, cells);
  } else {
    static_cast<FirstDerivatives&>(s.derivs) = first_derivatives(s.cloud, cells);
  }
  return s;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

DualResult solve_dual(const DiracCloud& cloud, const BilinearDensity& density,
                      const Eigen::VectorXd& phi_init, const SolverConfig& cfg) {
  cfg.validate();
  const int n = cloud.size();
  if (phi_init.size() != n) throw Error(ErrorCode::InvalidInput, "phi_init size mismatch");
  if ((cloud.masses.array() <= 0.0).any())
    throw Error(ErrorCode::InvalidInput, "solve_dual needs strictly positive target masses");
  const auto t0 = std::chrono::steady_clock::now();

  DualResult res;
  Eigen::VectorXd phi = phi_init.array() - phi_init.mean();
  DualState cur = dual_state(cloud, density, phi, cfg, true);

  // Damped Newton safeguard: every cell keeps at least this much mass.
  double mass_floor = 0.5 * std::min(cloud.masses.minCoeff(), cur.derivs.cell_masses.minCoeff());

  int empty_streak = 0;
  int last_empty = -1;
  for (int it = 0;; ++it) {
    const TransportDerivatives& d = cur.derivs;
    const double ginf = d.grad_phi.cwiseAbs().maxCoeff();
    TraceRecord rec;
    rec.iter = it;
    rec.objective = d.value;
    rec.grad_M_norm = ginf;
    rec.grad_l2_norm = d.grad_phi.norm();
    rec.pd_flag = true;
    rec.wall_ms = elapsed_ms(t0);

    if (ginf <= cfg.dual_tol || n == 1) {
      res.trace.records.push_back(rec);
      res.status = SolverStatus::Converged;
      break;
    }
    if (it >= cfg.max_inner) {
      res.trace.records.push_back(rec);
      res.status = SolverStatus::MaxIterations;
      break;
    }

    if (!d.empty_cells.empty()) {
      const int e = d.empty_cells.front();
      empty_streak = (e == last_empty) ? empty_streak + 1 : 1;
      last_empty = e;
      if (empty_streak >= 20) {
        res.trace.records.push_back(rec);
        res.status = SolverStatus::EmptyCellStall;
        res.stalled_index = e;
        break;
      }
    } else {
      empty_streak = 0;
      last_empty = -1;
    }

    // Candidate dampings: plain Newton first, then lm_sigma0, lm_sigma0/2, ...
    const Eigen::VectorXd& grad = d.grad_phi;
    bool accepted = false;
    double sigma = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 64 && !accepted; ++attempt) {
      if (attempt == 1) sigma = cfg.lm_sigma0;
      if (attempt > 1) sigma *= 0.5;
      Eigen::VectorXd step;
      if (std::isinf(sigma)) {
        try {
          const DualSystemSolver solver(d.hess_phiphi);
          step = -solver.solve(Eigen::VectorXd(grad));
        } catch (const Error&) {
          continue;
        }
      } else {
        SparseMatrix k = -d.hess_phiphi;
        for (int i = 0; i < n; ++i) k.coeffRef(i, i) += 1.0 / sigma;
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(k);
        if (ldlt.info() != Eigen::Success) continue;
        step = ldlt.solve(grad);
      }
      if (!step.allFinite()) continue;

      const Eigen::VectorXd trial_phi = phi + step;
      DualState trial = dual_state(cloud, density, trial_phi, cfg, true);
      if (trial.derivs.cell_masses.minCoeff() < mass_floor) continue;
      const double predicted = grad.dot(step);  // > 0 for an ascent direction
      // Sufficient ascent, i.e. Wolfe's first condition for the maximization.
      bool ok = trial.derivs.value > d.value + cfg.wolfe_c1 * predicted;
      if (!ok && predicted <= roundoff_scale(d.value)) {
        // g is flat to machine precision here; judge by the gradient instead.
        ok = trial.derivs.value >= d.value - roundoff_scale(d.value) &&
             trial.derivs.grad_phi.cwiseAbs().maxCoeff() < ginf;
        rec.roundoff_accept = ok;
      }
      if (!ok) continue;

      accepted = true;
      phi = trial_phi.array() - trial_phi.mean();
      cur = std::move(trial);
      cur.cloud.potentials = phi;
    }
    rec.step_sigma = sigma;
    res.trace.records.push_back(rec);
    if (!accepted) {
      res.status = d.empty_cells.empty() ? SolverStatus::LineSearchStall
                                         : SolverStatus::EmptyCellStall;
      if (!d.empty_cells.empty()) res.stalled_index = d.empty_cells.front();
      break;
    }
    if (mass_floor <= 0.0 && cur.derivs.empty_cells.empty())
      mass_floor = 0.5 * std::min(cloud.masses.minCoeff(), cur.derivs.cell_masses.minCoeff());
  }

  res.phi = phi;
  res.iterations = static_cast<int>(res.trace.records.size()) - 1;
  res.at_solution = cur.derivs;
  return res;
}

}  // namespace sdot
