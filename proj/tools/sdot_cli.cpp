#include "sdot/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace {

void add_common(CLI::App* app, sdot::RunConfig& cfg, bool solver_flags) {
  app->add_option("--input", cfg.input, "Grayscale PGM (P5) or PNG; uniform density if omitted");
  app->add_flag("--invert", cfg.invert, "Dark pixels are dense");
  app->add_flag("--pixels-are-corners", cfg.pixels_are_corners,
                "Use pixel samples as bilinear corner values");
  app->add_option("--seed", cfg.seed, "Random seed");
  app->add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
  app->add_flag("--jitter-coincident", cfg.solver_cfg.geometry.jitter_coincident,
                "Perturb coincident sites instead of failing");
  if (!solver_flags) return;

  static const std::map<std::string, sdot::SolverKind> solvers{
      {"lloyd", sdot::SolverKind::Lloyd}, {"newton", sdot::SolverKind::Newton}};
  static const std::map<std::string, sdot::Mode> modes{
      {"stipple", sdot::Mode::Stippling}, {"bluenoise", sdot::Mode::BlueNoise}};
  app->add_option("--solver", cfg.solver, "lloyd | newton")
      ->transform(CLI::CheckedTransformer(solvers, CLI::ignore_case));
  app->add_option("--mode", cfg.solver_cfg.mode, "stipple | bluenoise")
      ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case));
  app->add_option("--dual-tol", cfg.solver_cfg.dual_tol, "Inner tolerance on |grad_phi g|_inf");
  app->add_option("--outer-tol", cfg.solver_cfg.outer_tol, "Outer tolerance on |grad G|_M");
  app->add_option("--max-outer", cfg.solver_cfg.max_outer, "Outer iteration cap");
  app->add_flag("--inner-adaptive", cfg.solver_cfg.inner_adaptive,
                "Loosen inner solves while the outer gradient is large");
  app->add_option("--points-out", cfg.points_out, "Output point set (JSON)");
  app->add_option("--trace", cfg.trace_path, "Output convergence trace (CSV)");
  app->add_option("--svg", cfg.svg_path, "Output render (SVG); empty to skip");
  app->add_flag("--svg-cells", cfg.svg_cells, "Draw cells in the SVG render");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-discrete optimal transport: stippling and blue-noise sampling"};
  app.require_subcommand(1);

  sdot::RunConfig cfg;
  auto* stipple = app.add_subcommand("stipple", "Optimize point positions (Voronoi masses)");
  auto* bluenoise = app.add_subcommand("bluenoise", "Optimize point positions with equal masses");
  auto* add_point = app.add_subcommand("add-point", "Insert one point into a converged set and re-solve with both solvers");
  auto* check = app.add_subcommand("check-derivatives", "Compare analytic derivatives with finite differences");

  for (auto* sub : {stipple, bluenoise, add_point}) {
    add_common(sub, cfg, true);
    sub->add_option("--n", cfg.n_points, "Number of points");
  }
  add_point->add_option("--prior", cfg.prior_points, "points.json of a converged run")->required();
  std::vector<double> at;
  add_point->add_option("--at", at, "Place the new point at X Y instead of at random")->expected(2);

  add_common(check, cfg, false);
  cfg.fd_config.clear();
  int check_n = 10;
  check->add_option("--n", check_n, "Number of sites");
  check->add_option("--step", cfg.fd_step, "Finite-difference step");
  check->add_option("--config", cfg.fd_config, "two-point-symmetric")
      ->check(CLI::IsMember({"two-point-symmetric"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sdot::kExitBadInput;
  }

  if (*stipple) cfg.command = "stipple";
  if (*bluenoise) cfg.command = "bluenoise";
  if (*add_point) {
    cfg.command = "add-point";
    if (at.size() == 2) cfg.insert_at = sdot::Point(at[0], at[1]);
  }
  if (*check) {
    cfg.command = "check-derivatives";
    cfg.n_points = check_n;
  }
  return sdot::run_command(cfg, std::cout);
}
