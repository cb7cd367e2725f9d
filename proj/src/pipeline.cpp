#include "sdot/pipeline.hpp"

#include "sdot/image_io.hpp"
#include "sdot/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace sdot {

using nlohmann::json;

const char* solver_name(SolverKind kind) { return kind == SolverKind::Lloyd ? "lloyd" : "newton"; }

void RunConfig::validate() const {
  if (n_points < 1) throw Error(ErrorCode::InvalidInput, "n must be at least 1");
  if (threads < 1) throw Error(ErrorCode::InvalidInput, "threads must be at least 1");
  if (!(fd_step > 0.0)) throw Error(ErrorCode::InvalidInput, "step must be positive");
  if (!fd_config.empty() && fd_config != "two-point-symmetric")
    throw Error(ErrorCode::InvalidInput, "unknown config '" + fd_config + "'");
  solver_cfg.validate();
}

BilinearDensity load_run_density(const RunConfig& cfg) {
  const Rect& domain = cfg.solver_cfg.domain;
  if (cfg.input.empty()) return BilinearDensity::uniform(1, 1, domain);
  const GrayImage img = read_gray_image(cfg.input, cfg.invert);
  return load_density(img, cfg.pixels_are_corners ? PixelMode::Corner : PixelMode::CellMean,
                      domain);
}

DiracCloud seeded_cloud(int n, std::uint64_t seed, const Rect& domain) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(domain.xmin, domain.xmax);
  std::uniform_real_distribution<double> uy(domain.ymin, domain.ymax);
  Points pts(static_cast<std::size_t>(n));
  for (Point& p : pts) {
    const double x = ux(rng);
    p = Point(x, uy(rng));
  }
  return DiracCloud::uniform(std::move(pts));
}

json points_to_json(const PositionsResult& result, Mode mode, SolverKind solver,
                    std::uint64_t seed) {
  const DiracCloud& c = result.cloud;
  json positions = json::array();
  for (const Point& p : c.positions) positions.push_back({p.x(), p.y()});
  json masses = json::array(), potentials = json::array();
  for (int i = 0; i < c.size(); ++i) {
    masses.push_back(c.masses[i]);
    potentials.push_back(c.potentials[i]);
  }
  json j;
  j["schema"] = 1;
  j["n"] = c.size();
  j["mode"] = mode_name(mode);
  j["solver"] = solver_name(solver);
  j["status"] = status_name(result.status);
  j["iterations"] = result.iterations;
  j["positions"] = std::move(positions);
  j["masses"] = std::move(masses);
  j["potentials"] = std::move(potentials);
  j["objective"] = result.objective;
  j["grad_norm"] = result.grad_M_norm;
  j["seed"] = seed;
  return j;
}

DiracCloud read_points_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, path + ": cannot open");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, path + ": " + e.what());
  }
  if (!j.contains("positions") || !j["positions"].is_array())
    throw Error(ErrorCode::InvalidInput, path + ": missing positions");
  Points pts;
  try {
    for (const auto& p : j["positions"]) pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, path + ": " + e.what());
  }
  if (pts.empty()) throw Error(ErrorCode::InvalidInput, path + ": no points");
  DiracCloud cloud = DiracCloud::uniform(std::move(pts));
  if (j.contains("potentials") && j["potentials"].is_array() &&
      j["potentials"].size() == cloud.positions.size()) {
    for (int i = 0; i < cloud.size(); ++i) cloud.potentials[i] = j["potentials"][i].get<double>();
  }
  return cloud;
}

std::string render_svg(const LaguerreDiagram& diagram, const DiracCloud& cloud, bool draw_cells) {
  const Rect& d = diagram.domain;
  const double size = 800.0;
  const double scale = size / std::max(d.width(), d.height());
  const double w = d.width() * scale, h = d.height() * scale;
  auto sx = [&](double x) { return (x - d.xmin) * scale; };
  auto sy = [&](double y) { return (d.ymax - y) * scale; };

  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
  os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  if (draw_cells) {
    os << "<g fill=\"#dde6f0\" stroke=\"#5a7391\" stroke-width=\"0.6\">\n";
    for (const CellPolygon& cell : diagram.cells) {
      if (cell.empty()) continue;
      os << "<polygon points=\"";
      for (std::size_t k = 0; k < cell.vertices.size(); ++k)
        os << (k ? " " : "") << sx(cell.vertices[k].x()) << ',' << sy(cell.vertices[k].y());
      os << "\"/>\n";
    }
    os << "</g>\n";
  }
  const int n = cloud.size();
  const double r0 = 0.35 * size / std::sqrt(static_cast<double>(n));
  os << "<g fill=\"black\">\n";
  for (int i = 0; i < n; ++i) {
    const double r = r0 * std::sqrt(std::max(0.0, cloud.masses[i] * n));
    if (r <= 0.0) continue;
    os << "<circle cx=\"" << sx(cloud.positions[i].x()) << "\" cy=\"" << sy(cloud.positions[i].y())
       << "\" r=\"" << r << "\"/>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

std::string tagged_path(const std::string& path, const std::string& tag) {
  const std::size_t slash = path.find_last_of('/');
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "_" + tag;
  return path.substr(0, dot) + "_" + tag + path.substr(dot);
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, path + ": cannot open for writing");
  out << text;
  if (!out) throw Error(ErrorCode::Io, path + ": write failed");
}

PositionsResult solve(const DiracCloud& start, const BilinearDensity& density,
                      const SolverConfig& cfg, SolverKind kind) {
  return kind == SolverKind::Lloyd ? lloyd_solve(start, density, cfg)
                                   : newton_solve(start, density, cfg);
}

void write_outputs(const RunConfig& cfg, const PositionsResult& res, SolverKind kind,
                   const std::string& points_path, const std::string& trace_path,
                   const std::string& svg_path) {
  write_text(points_path, points_to_json(res, cfg.solver_cfg.mode, kind, cfg.seed).dump(2) + "\n");
  write_text(trace_path, res.trace.to_csv());
  if (!svg_path.empty()) {
    const LaguerreDiagram diagram =
        build_diagram(res.cloud, cfg.solver_cfg.domain, cfg.solver_cfg.geometry);
    write_text(svg_path, render_svg(diagram, res.cloud, cfg.svg_cells));
  }
}

void log_result(std::ostream& log, const char* label, const PositionsResult& res) {
  log << label << ": status=" << status_name(res.status) << " iterations=" << res.iterations
      << " objective=" << std::setprecision(17) << res.objective
      << " grad_M_norm=" << std::setprecision(6) << res.grad_M_norm << '\n';
}

int run_positions(const RunConfig& cfg, Mode mode, std::ostream& log) {
  RunConfig c = cfg;
  c.solver_cfg.mode = mode;
  c.validate();
  set_num_threads(c.threads);
  const BilinearDensity density = load_run_density(c);
  const DiracCloud start = seeded_cloud(c.n_points, c.seed, c.solver_cfg.domain);
  const PositionsResult res = solve(start, density, c.solver_cfg, c.solver);
  write_outputs(c, res, c.solver, c.points_out, c.trace_path, c.svg_path);
  log_result(log, solver_name(c.solver), res);
  return res.status == SolverStatus::Converged ? kExitOk : kExitNonConvergence;
}

}  // namespace

int cmd_stipple(const RunConfig& cfg, std::ostream& log) {
  return run_positions(cfg, Mode::Stippling, log);
}

int cmd_bluenoise(const RunConfig& cfg, std::ostream& log) {
  return run_positions(cfg, Mode::BlueNoise, log);
}

Point seeded_insertion(int n, std::uint64_t seed, const Rect& domain) {
  return seeded_cloud(n + 1, seed, domain).positions.back();
}

DiracCloud add_point_start(const DiracCloud& prior, const Point& added) {
  Points pts = prior.positions;
  pts.push_back(added);
  DiracCloud start = DiracCloud::uniform(std::move(pts));
  start.potentials.head(prior.size()) = prior.potentials;
  start.potentials.array() -= start.potentials.mean();
  return start;
}

int cmd_add_point(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.prior_points.empty()) throw Error(ErrorCode::InvalidInput, "add-point needs --prior");
  set_num_threads(cfg.threads);
  const BilinearDensity density = load_run_density(cfg);
  const DiracCloud prior = read_points_json(cfg.prior_points);
  const Rect& domain = cfg.solver_cfg.domain;

  Point added;
  if (cfg.insert_at) {
    added = *cfg.insert_at;
  } else {
    added = seeded_insertion(prior.size(), cfg.seed, domain);
  }
  if (!domain.contains(added)) throw Error(ErrorCode::InvalidInput, "inserted point lies outside the domain");

  const DiracCloud start = add_point_start(prior, added);
  // Coincidence is resolved (jitter) or reported here, before either solve.
  build_diagram(start, domain, cfg.solver_cfg.geometry);

  int code = kExitOk;
  for (SolverKind kind : {SolverKind::Lloyd, SolverKind::Newton}) {
    const PositionsResult res = solve(start, density, cfg.solver_cfg, kind);
    const std::string tag = solver_name(kind);
    write_outputs(cfg, res, kind, tagged_path(cfg.points_out, tag), tagged_path(cfg.trace_path, tag),
                  cfg.svg_path.empty() ? std::string() : tagged_path(cfg.svg_path, tag));
    log_result(log, solver_name(kind), res);
    if (res.status != SolverStatus::Converged) code = kExitNonConvergence;
  }
  return code;
}

int cmd_check_derivatives(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  set_num_threads(cfg.threads);
  oracle::DerivativeCheckOptions opt;
  opt.step = cfg.fd_step;

  BilinearDensity density = load_run_density(cfg);
  DiracCloud cloud;
  std::vector<oracle::FDReport> rows;
  if (cfg.fd_config == "two-point-symmetric") {
    cloud = DiracCloud::uniform({Point(0.25, 0.5), Point(0.75, 0.5)});
  } else {
    std::mt19937_64 rng(cfg.seed);
    auto sampled = oracle::sample_smooth_cloud(rng, cfg.n_points, 0.1);
    if (!sampled) throw Error(ErrorCode::DegenerateConfiguration, "no admissible random configuration found");
    cloud = std::move(*sampled);
  }
  rows = oracle::check_derivatives(cloud, density, opt);
  if (cfg.fd_config == "two-point-symmetric") {
    const LaguerreDiagram diagram = build_diagram(cloud, cfg.solver_cfg.domain);
    const TransportDerivatives d = second_derivatives(cloud, density, diagram);
    const double cross = std::abs(Eigen::MatrixXd(d.hess_phiphi)(0, 1));
    oracle::FDReport r = oracle::residual("phiphi_cross_magnitude", cross - 2.0, 1e-9);
    r.analytic = cross;
    r.oracle = 2.0;
    rows.push_back(r);
  }

  bool all = true;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %12s %12s %12s %12s %10s %s\n", "quantity", "analytic",
                "oracle", "abs_error", "rel_error", "tolerance", "result");
  log << line;
  for (const oracle::FDReport& r : rows) {
    char rel[32];
    if (r.relative)
      std::snprintf(rel, sizeof rel, "%12.5e", r.rel_error);
    else
      std::snprintf(rel, sizeof rel, "%12s", "-");
    std::snprintf(line, sizeof line, "%-24s %12.5e %12.5e %12.5e %s %10.1e %s\n",
                  r.quantity.c_str(), r.analytic, r.oracle, r.abs_error, rel, r.tolerance,
                  r.pass ? "PASS" : "FAIL");
    log << line;
    all = all && r.pass;
  }
  return all ? kExitOk : kExitVerification;
}

int run_command(const RunConfig& cfg, std::ostream& log) {
  try {
    if (cfg.command == "stipple") return cmd_stipple(cfg, log);
    if (cfg.command == "bluenoise") return cmd_bluenoise(cfg, log);
    if (cfg.command == "add-point") return cmd_add_point(cfg, log);
    if (cfg.command == "check-derivatives") return cmd_check_derivatives(cfg, log);
    log << "error: unknown command '" << cfg.command << "'\n";
    return kExitBadInput;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::InvalidInput:
      case ErrorCode::CoincidentSites:
      case ErrorCode::Io:
        return kExitBadInput;
      case ErrorCode::DegenerateConfiguration:
      case ErrorCode::SingularDual:
        return kExitNonConvergence;
    }
    return kExitBadInput;
  }
}

}  // namespace sdot
