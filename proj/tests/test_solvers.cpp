#include "sdot/oracle.hpp"
#include "sdot/solvers.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace sdot;

namespace {

LinearOperator dense_op(const Eigen::MatrixXd& a) {
  return [a](const Eigen::VectorXd& v) { return Eigen::VectorXd(a * v); };
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd b(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) b(i, j) = g(rng);
  return b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(dim, dim);
}

}  // namespace

TEST_CASE("cg_lanczos stops at the first negative pivot") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = -1.0;
  const CgResult r = cg_lanczos(dense_op(a), Eigen::Vector2d(2.0, 1.0), Eigen::VectorXd::Ones(1), 10, 1e-12);
  CHECK_FALSE(r.pd_flag);
  CHECK(r.iters == 1);
  CHECK(r.direction[0] == doctest::Approx(-10.0 / 3.0));
  CHECK(r.direction[1] == doctest::Approx(-5.0 / 3.0));
}

TEST_CASE("cg_lanczos returns the negative gradient on immediate negative curvature") {
  const Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(4, 4);
  const Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(4, 1.0, 4.0);
  const CgResult r = cg_lanczos(dense_op(a), g, Eigen::VectorXd::Ones(2), 10, 1e-12);
  CHECK_FALSE(r.pd_flag);
  CHECK(r.iters == 0);
  CHECK((r.direction + g).norm() == 0.0);
}

TEST_CASE("cg_lanczos solves SPD systems in the mass metric") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + trial;
    const Eigen::MatrixXd h = random_spd(rng, 2 * n);
    Eigen::VectorXd mass(n);
    for (int i = 0; i < n; ++i) mass[i] = u(rng);
    const Eigen::VectorXd g = Eigen::VectorXd::Random(2 * n);
    const CgResult r = cg_lanczos(dense_op(h), g, mass, 4 * n, 1e-14);
    // Newton step in the M metric: H d = -M g.
    Eigen::VectorXd mg(2 * n);
    for (int i = 0; i < n; ++i) mg.segment<2>(2 * i) = mass[i] * g.segment<2>(2 * i);
    const Eigen::VectorXd direct = h.ldlt().solve(-mg);
    CHECK(r.pd_flag);
    CHECK((r.direction - direct).norm() <= 1e-8 * direct.norm());
  }
}

TEST_CASE("cg_lanczos with a zero gradient") {
  const CgResult r = cg_lanczos(dense_op(Eigen::MatrixXd::Identity(2, 2)), Eigen::Vector2d::Zero(),
                                Eigen::VectorXd::Ones(1), 5, 1e-12);
  CHECK(r.direction.norm() == 0.0);
  CHECK(r.pd_flag);
}

TEST_CASE("Wolfe sufficient decrease") {
  CHECK(wolfe_accept(0.9, 1.0, -1.0, 1e-4));
  CHECK_FALSE(wolfe_accept(1.0, 1.0, -1.0, 1e-4));
  CHECK_FALSE(wolfe_accept(0.99995, 1.0, -1.0, 1e-4));
}

TEST_CASE("solver configuration validation") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.wolfe_c1 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SolverConfig{};
  cfg.dual_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("dual solver on uniform density reaches tight tolerance monotonically") {
  const BilinearDensity d = BilinearDensity::uniform();
  std::mt19937_64 rng(10);
  for (int n : {10, 60}) {
    const DiracCloud c = oracle::random_cloud(rng, n);
    const DualResult r = solve_dual(c, d, Eigen::VectorXd::Zero(n), SolverConfig{});
    REQUIRE(r.status == SolverStatus::Converged);
    CHECK(r.iterations <= 30);
    CHECK(r.at_solution.grad_phi.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(r.trace.monotone(false));
  }
}

TEST_CASE("dual solver on an image density with unequal masses") {
  const BilinearDensity d = testutil::wavy_density(12);
  std::mt19937_64 rng(12);
  DiracCloud c = oracle::random_cloud(rng, 30);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (int i = 0; i < 30; ++i) c.masses[i] = u(rng);
  c.masses /= c.masses.sum();
  const DualResult r = solve_dual(c, d, Eigen::VectorXd::Zero(30), SolverConfig{});
  REQUIRE(r.status == SolverStatus::Converged);
  CHECK((r.at_solution.cell_masses - c.masses).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("dual solver rejects zero target masses") {
  DiracCloud c = DiracCloud::uniform({Point(0.2, 0.2), Point(0.8, 0.8)});
  c.masses << 1.0, 0.0;
  CHECK_THROWS_AS(solve_dual(c, BilinearDensity::uniform(), Eigen::VectorXd::Zero(2), SolverConfig{}),
                  Error);
}

TEST_CASE("Lloyd and Newton agree on two points") {
  const BilinearDensity d = BilinearDensity::uniform();
  const DiracCloud c = DiracCloud::uniform({Point(0.3, 0.2), Point(0.6, 0.7)});
  SolverConfig cfg;
  const PositionsResult l = lloyd_solve(c, d, cfg);
  const PositionsResult n = newton_solve(c, d, cfg);
  REQUIRE(l.status == SolverStatus::Converged);
  REQUIRE(n.status == SolverStatus::Converged);
  CHECK(std::abs(l.objective - n.objective) < 1e-12);
  CHECK(std::abs(n.objective - 5.0 / 96.0) < 1e-12);
  CHECK(n.iterations < l.iterations);
  CHECK(l.trace.monotone());
  CHECK(n.trace.monotone());
}

TEST_CASE("one point converges to the barycenter") {
  const BilinearDensity d = testutil::wavy_density(10);
  const DiracCloud c = DiracCloud::uniform({Point(0.1, 0.9)});
  for (Mode mode : {Mode::Stippling, Mode::BlueNoise}) {
    SolverConfig cfg;
    cfg.mode = mode;
    const PositionsResult r = newton_solve(c, d, cfg);
    REQUIRE(r.status == SolverStatus::Converged);
    const CellMoments m = polygon_moments(d, rectangle_polygon(Rect::unit()).vertices, Point(0, 0));
    CHECK((r.cloud.positions[0] - m.first_moment / m.mass).norm() < 1e-9);
  }
}

TEST_CASE("blue-noise result keeps equal masses") {
  const BilinearDensity d = testutil::wavy_density(10);
  std::mt19937_64 rng(31);
  const DiracCloud c = oracle::random_cloud(rng, 20);
  SolverConfig cfg;
  cfg.mode = Mode::BlueNoise;
  const PositionsResult r = newton_solve(c, d, cfg);
  REQUIRE(r.status == SolverStatus::Converged);
  CHECK((r.cell_masses.array() - 1.0 / 20).abs().maxCoeff() <= 10 * cfg.dual_tol);
  CHECK(r.trace.monotone());
}

TEST_CASE("trace CSV layout") {
  SolverTrace t;
  TraceRecord a;
  a.iter = 0;
  a.objective = 0.5;
  a.pd_flag = true;
  t.records.push_back(a);
  const std::string csv = t.to_csv();
  CHECK(csv.rfind(std::string(kTraceHeader) + "\n", 0) == 0);
  CHECK(csv.find("\n0,0.5,0,0,0,0,1,0,0\n") != std::string::npos);
}

TEST_CASE("max-outer zero returns the start") {
  const DiracCloud c = DiracCloud::uniform({Point(0.3, 0.2), Point(0.6, 0.7)});
  SolverConfig cfg;
  cfg.max_outer = 0;
  const PositionsResult r = lloyd_solve(c, BilinearDensity::uniform(), cfg);
  CHECK(r.status == SolverStatus::MaxIterations);
  CHECK(r.iterations == 0);
  CHECK(r.cloud.positions[0] == c.positions[0]);
}

TEST_CASE("Newton squares the gradient near the two-point CVT") {
  const BilinearDensity d = BilinearDensity::uniform();
  const DiracCloud c = DiracCloud::uniform({Point(0.2506, 0.5004), Point(0.7497, 0.4993)});
  SolverConfig cfg;
  cfg.outer_tol = 1e-12;
  const PositionsResult r = newton_solve(c, d, cfg);
  REQUIRE(r.status == SolverStatus::Converged);
  CHECK(r.iterations <= 4);
  const auto& rec = r.trace.records;
  for (std::size_t k = 0; k + 1 < rec.size(); ++k) {
    INFO("k=" << k << " g=" << rec[k].grad_M_norm << " next=" << rec[k + 1].grad_M_norm);
    // 1e-15: round-off floor of the gradient.
    CHECK(rec[k + 1].grad_M_norm <= std::max(10.0 * rec[k].grad_M_norm * rec[k].grad_M_norm, 1e-15));
  }
  CHECK(r.trace.monotone());
}

TEST_CASE("Newton moves a single site to the center in one step") {
  const DiracCloud c = DiracCloud::uniform({Point(0.2, 0.2)});
  const PositionsResult r = newton_solve(c, BilinearDensity::uniform(), SolverConfig{});
  REQUIRE(r.status == SolverStatus::Converged);
  CHECK(r.iterations == 1);
  CHECK((r.cloud.positions[0] - Point(0.5, 0.5)).norm() < 1e-14);
}

TEST_CASE("Newton from three close collinear sites meets negative curvature") {
  const DiracCloud c =
      DiracCloud::uniform({Point(0.49, 0.5), Point(0.5, 0.5), Point(0.51, 0.5)});
  const PositionsResult r = newton_solve(c, BilinearDensity::uniform(), SolverConfig{});
  REQUIRE(r.status == SolverStatus::Converged);
  bool indefinite = false;
  for (std::size_t k = 0; k < 3 && k < r.trace.records.size(); ++k)
    indefinite = indefinite || !r.trace.records[k].pd_flag;
  CHECK(indefinite);
  CHECK(r.trace.monotone());
}

TEST_CASE("blue-noise gradient obeys the envelope identity") {
  const BilinearDensity d = testutil::wavy_density(8);
  std::mt19937_64 rng(41);
  const DiracCloud c = oracle::random_cloud(rng, 6);
  SolverConfig cfg;
  cfg.dual_tol = 1e-14;
  auto blue_noise_value = [&](const Eigen::VectorXd& z) {
    DiracCloud t = c;
    t.set_flat_positions(z);
    const DualResult r = solve_dual(t, d, Eigen::VectorXd::Zero(t.size()), cfg);
    REQUIRE(r.status == SolverStatus::Converged);
    return r.at_solution.value;
  };
  const DualResult at = solve_dual(c, d, Eigen::VectorXd::Zero(c.size()), cfg);
  const Eigen::VectorXd fd = oracle::fd_gradient(blue_noise_value, c.flat_positions(), 1e-5);
  CHECK(oracle::relative_error(at.at_solution.grad_z, fd) <= 1e-5);
}

TEST_CASE("Lloyd and Newton reach consistent critical points") {
  const BilinearDensity d = BilinearDensity::uniform();
  std::mt19937_64 rng(25);
  const DiracCloud c = oracle::random_cloud(rng, 25);
  SolverConfig cfg;
  cfg.max_outer = 20000;
  const PositionsResult l = lloyd_solve(c, d, cfg);
  const PositionsResult n = newton_solve(c, d, cfg);
  REQUIRE(l.status == SolverStatus::Converged);
  REQUIRE(n.status == SolverStatus::Converged);
  const bool same = std::abs(l.objective - n.objective) <= 1e-8;
  CHECK((same || (l.grad_M_norm <= cfg.outer_tol && n.grad_M_norm <= cfg.outer_tol)));
  CHECK(l.trace.monotone());
  CHECK(n.trace.monotone());
}
