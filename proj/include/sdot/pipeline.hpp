#pragma once

#include "sdot/oracle.hpp"
#include "sdot/solvers.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace sdot {

enum class SolverKind { Lloyd, Newton };

const char* solver_name(SolverKind kind);

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerification = 1,
  kExitBadInput = 2,
  kExitNonConvergence = 3,
};

struct RunConfig {
  std::string command;
  /// Grayscale PGM/PNG; empty means the uniform density on the domain.
  std::string input;
  int n_points = 1000;
  std::uint64_t seed = 0;
  SolverKind solver = SolverKind::Newton;
  bool invert = false;
  bool pixels_are_corners = false;
  SolverConfig solver_cfg;
  int threads = 1;

  std::string points_out = "points.json";
  std::string trace_path = "trace.csv";
  std::string svg_path = "render.svg";
  bool svg_cells = false;

  // add-point
  std::string prior_points;
  std::optional<Point> insert_at;

  // check-derivatives
  double fd_step = 1e-5;
  std::string fd_config;  ///< "" (random) or "two-point-symmetric"

  void validate() const;
};

/// Density described by cfg.input (uniform if empty), normalized on the domain.
BilinearDensity load_run_density(const RunConfig& cfg);

/// n i.i.d. uniform points in the domain from a seeded mt19937_64, equal masses.
DiracCloud seeded_cloud(int n, std::uint64_t seed, const Rect& domain);

/// Point added to an n-point seeded run: draw n + 1 of the same stream.
Point seeded_insertion(int n, std::uint64_t seed, const Rect& domain);

/// Prior sites plus `added` with equal masses; prior potentials warm-start
/// the dual (0 for the new site), shifted to mean zero.
DiracCloud add_point_start(const DiracCloud& prior, const Point& added);

nlohmann::json points_to_json(const PositionsResult& result, Mode mode, SolverKind solver,
                              std::uint64_t seed);
/// Reads positions (and potentials, if present) of a points.json file.
DiracCloud read_points_json(const std::string& path);

/// Static SVG: optional outlined/filled cells and dots with area proportional to mass.
std::string render_svg(const LaguerreDiagram& diagram, const DiracCloud& cloud,
                       bool draw_cells);

/// `trace.csv` -> `trace_<tag>.csv`.
std::string tagged_path(const std::string& path, const std::string& tag);

int cmd_stipple(const RunConfig& cfg, std::ostream& log);
int cmd_bluenoise(const RunConfig& cfg, std::ostream& log);
int cmd_add_point(const RunConfig& cfg, std::ostream& log);
int cmd_check_derivatives(const RunConfig& cfg, std::ostream& log);

/// Dispatches on cfg.command; maps exceptions to exit codes.
int run_command(const RunConfig& cfg, std::ostream& log);

}  // namespace sdot
