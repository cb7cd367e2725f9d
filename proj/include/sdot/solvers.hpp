#pragma once

#include "sdot/density.hpp"
#include "sdot/geometry.hpp"
#include "sdot/transport.hpp"
#include "sdot/types.hpp"

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace sdot {

enum class Mode { Stippling, BlueNoise };

const char* mode_name(Mode mode);

struct SolverConfig {
  /// Stop the dual ascent once |grad_phi|_inf <= dual_tol.
  double dual_tol = 1e-10;
  /// Stop the outer loop once the M-norm of the outer gradient <= outer_tol.
  double outer_tol = 1e-9;
  int max_outer = 500;
  int max_inner = 100;
  double wolfe_c1 = 1e-4;
  double lm_sigma0 = 1.0;
  /// CG iteration cap; 0 means 2n.
  int cg_max = 0;
  double cg_tol = 1e-12;
  Mode mode = Mode::Stippling;
  /// Loosen the dual tolerance while the outer gradient is still large.
  bool inner_adaptive = false;
  Rect domain = Rect::unit();
  GeometryOptions geometry;

  /// Throws InvalidInput on non-positive tolerances or c1 outside (0, 1).
  void validate() const;
};

/// Evaluation noise floor of an objective of this size (64 eps |value|).
double roundoff_scale(double value);

struct TraceRecord {
  int iter = 0;
  double objective = 0.0;
  double grad_M_norm = 0.0;
  double grad_l2_norm = 0.0;
  double step_sigma = 0.0;
  int cg_iters = 0;
  bool pd_flag = false;
  int dual_iters = 0;
  double wall_ms = 0.0;
  /// Step accepted by the round-off branch of the line search: the predicted
  /// change was below roundoff_scale(objective), the gradient norm dropped and
  /// the objective moved by at most that scale. Not serialized.
  bool roundoff_accept = false;
};

struct SolverTrace {
  std::vector<TraceRecord> records;

  /// Objective strictly decreasing (or increasing, for the dual ascent) from
  /// each record to the next.
  bool strictly_monotone(bool decreasing = true) const;
  /// Strict across steps accepted by the sufficient-decrease test; across
  /// round-off accepted steps the objective may not get worse by more than
  /// roundoff_scale.
  bool monotone(bool decreasing = true) const;
  int roundoff_steps() const;
  /// CSV with header iter,objective,grad_M_norm,grad_l2_norm,step_sigma,
  /// cg_iters,pd_flag,dual_iters,wall_ms.
  std::string to_csv() const;
};

inline constexpr const char* kTraceHeader =
    "iter,objective,grad_M_norm,grad_l2_norm,step_sigma,cg_iters,pd_flag,dual_iters,wall_ms";

enum class SolverStatus { Converged, MaxIterations, LineSearchStall, EmptyCellStall, DualFailure };

const char* status_name(SolverStatus status);

/// Sufficient-decrease test G(z + s) < G(z) + c1 <grad G, s>_M, where
/// `directional` is the M-inner product <grad G, s>_M.
bool wolfe_accept(double objective_new, double objective_old, double directional, double c1);

// ---------------------------------------------------------------------------
// Dual ascent

struct DualResult {
  Eigen::VectorXd phi;
  SolverTrace trace;
  SolverStatus status = SolverStatus::MaxIterations;
  int iterations = 0;
  /// Offending cell for EmptyCellStall, else -1.
  int stalled_index = -1;
  /// Derivatives at the returned phi.
  FirstDerivatives at_solution;
};

/// Maximizes the concave g(., z, m) by damped Newton steps: the direction
/// solves (H_phiphi - Id / sigma) d = -grad g, sigma starting at infinity
/// (plain Newton) and then lm_sigma0, halved until Wolfe's sufficient-ascent
/// condition holds and every cell keeps at least half of the smallest
/// initial/target mass. The returned phi has mean zero.
DualResult solve_dual(const DiracCloud& cloud, const BilinearDensity& density,
                      const Eigen::VectorXd& phi_init, const SolverConfig& cfg);

// ---------------------------------------------------------------------------
// Mass-preconditioned conjugate gradient with Lanczos pivot monitoring

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct CgResult {
  /// Descent direction d in position space (flattened).
  Eigen::VectorXd direction;
  /// All Lanczos pivots stayed positive.
  bool pd_flag = true;
  int iters = 0;
  /// A pivot vanished (|pivot| < 1e-14); direction is -grad.
  bool breakdown = false;
};

/// Solves A (M^1/2 d) = -M^1/2 grad with A = M^-1/2 H M^-1/2, where `grad` is
/// the M-metric gradient (z - zbar) and `mass` holds one weight per site
/// (floored at 1e-12). Stops at the first non-positive pivot of the Lanczos
/// tridiagonal matrix and returns the solution over the last positive-definite
/// Krylov subspace; with no such subspace, returns -grad.
CgResult cg_lanczos(const LinearOperator& hessian, const Eigen::VectorXd& grad,
                    const Eigen::VectorXd& mass, int cg_max, double tol);

// ---------------------------------------------------------------------------
// Position solvers

struct PositionsResult {
  /// Final positions; potentials are phi* (zero for stippling); masses are the
  /// final cell masses (stippling) or the fixed targets (blue noise).
  DiracCloud cloud;
  SolverTrace trace;
  SolverStatus status = SolverStatus::MaxIterations;
  int iterations = 0;
  double objective = 0.0;
  double grad_M_norm = 0.0;
  Eigen::VectorXd cell_masses;
};

/// Lloyd iterations z <- z + sigma (zbar - z) with Wolfe backtracking.
/// Stippling uses phi = 0, blue noise re-solves phi* at every trial point.
PositionsResult lloyd_solve(const DiracCloud& cloud, const BilinearDensity& density,
                            const SolverConfig& cfg);

/// Newton iterations with directions from cg_lanczos on H_zz g (stippling) or
/// the reduced Hessian (blue noise), same line search as lloyd_solve.
PositionsResult newton_solve(const DiracCloud& cloud, const BilinearDensity& density,
                             const SolverConfig& cfg);

/// Outer objective at fixed positions: G_S (stippling) or G_B (blue noise,
/// with an inner dual solve from phi_warm).
struct OuterEvaluation {
  DiracCloud cloud;  ///< positions, potentials actually used, target masses
  LaguerreDiagram diagram;
  CellIntegrals cells;
  FirstDerivatives first;
  double objective = 0.0;
  /// z - zbar per site (zero for massless cells), flattened.
  Eigen::VectorXd grad_metric;
  double grad_M_norm = 0.0;
  int dual_iters = 0;
  bool ok = true;
};

OuterEvaluation evaluate_outer(const DiracCloud& cloud, const BilinearDensity& density,
                               const SolverConfig& cfg, const Eigen::VectorXd& phi_warm,
                               double dual_tol);

}  // namespace sdot
