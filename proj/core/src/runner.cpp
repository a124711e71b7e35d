#include "ptf/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include <json.hpp>

#include "ptf/errors.hpp"

namespace ptf {
namespace {

namespace fs = std::filesystem;
using std::numbers::pi;

Coords to_coords(const std::vector<double>& v) { return Coords(std::span<const double>(v)); }

TargetPoint point_or_origin(const TargetManifold& target, const std::vector<double>& v) {
  return v.empty() ? target.origin() : target.from_normal_coordinates(to_coords(v));
}

fs::path prepare_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("[run] output", "cannot create directory '" + dir.string() + "'");
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("[run] output", "cannot write '" + path.string() + "'");
  return out;
}

std::vector<int> ladder(const RunConfig& config) {
  if (!config.resolutions.empty()) return config.resolutions;
  return {config.resolution};
}

struct FlowOutcome {
  FlowReport report;
  std::vector<EstimateCheckResult> checks;
  double lambda = 0.0;
  double mu = 0.0;
};

double first_eigenvalue_or_zero(const DomainMesh& mesh) {
  return mesh.periodic() ? 0.0 : first_dirichlet_eigenvalue(mesh).lambda;
}

double gate_mu(const FlowConfig& flow, std::uint64_t seed) {
  const auto& target = flow.initial.target();
  double radius = 0.0;
  for (std::size_t i = 0; i < flow.initial.size(); ++i)
    radius = std::max(radius, target.dist(target.origin(), flow.initial.point(i)));
  std::mt19937_64 rng(seed);
  return estimate_mu(flow.field, 256, rng, ProbeRegion{target.origin(), radius + 0.5}).gate();
}

// Runs one flow, writing diagnostics, checkpoints and the final map under `dir`.
FlowOutcome run_flow_into(const RunConfig& config, int resolution, const fs::path& dir, std::ostream& log,
                          bool warn_gate = true) {
  prepare_directory(dir);
  FlowConfig flow = build_flow_config(config, resolution);
  FlowOutcome outcome;
  outcome.lambda = first_eigenvalue_or_zero(flow.initial.mesh());
  outcome.mu = gate_mu(flow, config.seed);
  if (warn_gate && !flow.initial.mesh().periodic() && outcome.mu > 0.75 * outcome.lambda)
    log << fmt::format("warning: mu estimate {:.6g} exceeds 3/4 of the first Dirichlet eigenvalue ({:.6g}); "
                       "the monotonicity hypothesis does not hold\n",
                       outcome.mu, 0.75 * outcome.lambda);

  std::optional<FlowState> start;
  if (!config.flow.resume.empty()) {
    std::ifstream in(config.flow.resume, std::ios::binary);
    if (!in) throw ConfigError("[flow] resume", "cannot read '" + config.flow.resume + "'");
    start = read_checkpoint(in, flow);
    log << fmt::format("resuming from step {} at t = {:.6g}\n", start->step, start->t);
  }
  CheckpointSink sink;
  if (flow.checkpoint_every > 0) {
    const fs::path cdir = prepare_directory(dir / "checkpoints");
    sink = [cdir, &flow](const FlowState& s) {
      auto out = open_output(cdir / fmt::format("step_{:010d}.json", s.step));
      write_checkpoint(out, flow, s);
    };
  }
  outcome.report = run(flow, start, sink);
  {
    auto out = open_output(dir / "diagnostics.csv");
    write_diagnostics_csv(out, outcome.report);
  }
  if (outcome.report.final_state) {
    auto out = open_output(dir / "final_map.csv");
    write_map_csv(out, outcome.report.final_state->f);
  }
  outcome.checks = check_flow_report(outcome.report, flow, {outcome.lambda, outcome.mu, "flow"});
  log << fmt::format("flow h = {:.6g}: {} after {} steps, t = {:.6g}{}\n", flow.initial.mesh().min_spacing(),
                     to_string(outcome.report.termination),
                     outcome.report.final_state ? outcome.report.final_state->step : 0,
                     outcome.report.final_state ? outcome.report.final_state->t : 0.0,
                     outcome.report.message.empty() ? "" : " (" + outcome.report.message + ")");
  return outcome;
}

int termination_code(Termination t) {
  switch (t) {
    case Termination::stationary: return exit_ok;
    case Termination::t_max: return exit_t_max;
    case Termination::blowup: return exit_blowup;
    case Termination::error: return exit_config_error;
  }
  return exit_config_error;
}

// Severity order for combining several runs: blowup, failed estimate, t_max, ok.
int combine(int a, int b) {
  const auto rank = [](int c) {
    switch (c) {
      case exit_config_error: return 4;
      case exit_blowup: return 3;
      case exit_failed_estimate: return 2;
      case exit_t_max: return 1;
      default: return 0;
    }
  };
  return rank(a) >= rank(b) ? a : b;
}

void write_results(const fs::path& dir, const std::vector<EstimateCheckResult>& rows) {
  auto js = open_output(dir / "estimates.json");
  write_results_json(js, rows);
  auto csv = open_output(dir / "estimates.csv");
  write_results_csv(csv, rows);
}

std::optional<double> geodesic_error(const RunConfig& config, const MapField& f) {
  if (config.map.kind != "geodesic" || config.field.kind != "zero" || f.mesh().dimension() != 1) return std::nullopt;
  const auto& target = f.target();
  const TargetPoint p = point_or_origin(target, config.map.from), q = point_or_origin(target, config.map.to);
  double err = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    err = std::max(err, target.dist(f.point(i), target.geodesic_point(p, q, f.mesh().coordinate(i, 0) /
                                                                                f.mesh().length(0))));
  return err;
}

int command_flow(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto resolutions = ladder(config);
  int code = exit_ok;
  std::vector<EstimateCheckResult> all;
  std::vector<double> hs, errs;
  std::ofstream refinement;
  if (resolutions.size() > 1) {
    refinement = open_output(out / "refinement.csv");
    refinement << "resolution,h,termination,steps,final_t,energy,sup_residual,geodesic_error\n";
  }
  for (int r : resolutions) {
    const fs::path dir = resolutions.size() > 1 ? out / fmt::format("res_{}", r) : out;
    const auto outcome = run_flow_into(config, r, dir, log);
    int run_code = termination_code(outcome.report.termination);
    if (run_code != exit_blowup && !all_required_pass(outcome.checks)) run_code = exit_failed_estimate;
    code = combine(code, run_code);
    all.insert(all.end(), outcome.checks.begin(), outcome.checks.end());
    if (resolutions.size() > 1 && outcome.report.final_state) {
      const auto& f = outcome.report.final_state->f;
      const auto& last = outcome.report.rows.back();
      const auto err = geodesic_error(config, f);
      refinement << fmt::format("{},{:.17g},{},{},{:.17g},{:.17g},{:.17g},{}\n", r, f.mesh().min_spacing(),
                                to_string(outcome.report.termination), outcome.report.final_state->step,
                                outcome.report.final_state->t, last.energy, last.sup_residual,
                                err ? fmt::format("{:.17g}", *err) : "");
      if (err) {
        hs.push_back(f.mesh().min_spacing());
        errs.push_back(*err);
      }
    }
  }
  if (hs.size() >= 2) {
    const double order = convergence_order(hs, errs);
    log << fmt::format("observed geodesic error order {:.4g}\n", order);
    // Informational: the three-point stencil reproduces constant-speed geodesics exactly, so the
    // error can sit at the stationarity floor on every level.
    all.push_back(make_result("flow_geodesic_refinement_order", -order, -1.8, 0.0, "flow", hs.back(), false,
                              fmt::format("observed order {:.4g}, max error {:.3e}", order,
                                          *std::max_element(errs.begin(), errs.end()))));
  }
  write_results(out, all);
  return code;
}

int command_verify(const RunConfig& config, const fs::path& out, std::ostream& log) {
  std::vector<EstimateCheckResult> rows;
  std::vector<int> resolutions = config.resolutions;
  if (resolutions.empty()) resolutions.push_back(config.resolution > 0 ? config.resolution : config.suite.resolution);
  for (int r : resolutions) {
    SuiteOptions options;
    options.resolution = r;
    options.scenarios = config.suite.scenarios;
    options.seed = config.seed;
    options.selection = config.suite.estimates;
    auto part = run_estimate_suite(options);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  int code = exit_ok;
  if (config.suite.flow_checks) {
    const auto outcome = run_flow_into(config, config.resolution, out / "flow", log);
    rows.insert(rows.end(), outcome.checks.begin(), outcome.checks.end());
    if (outcome.report.termination == Termination::blowup) code = exit_blowup;
  }
  write_results(out, rows);
  std::size_t failed = 0, required_failed = 0;
  for (const auto& r : rows) {
    if (!r.pass) ++failed;
    if (!r.pass && r.required) ++required_failed;
  }
  log << fmt::format("verify: {} rows, {} failed ({} required)\n", rows.size(), failed, required_failed);
  if (required_failed > 0) code = combine(code, exit_failed_estimate);
  return code;
}

int command_spectrum(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto resolutions = ladder(config);
  auto table = open_output(out / "spectrum.csv");
  table << "resolution,h,lambda,iterations\n";
  for (std::size_t k = 0; k < resolutions.size(); ++k) {
    const auto mesh = build_mesh(config.mesh, resolutions[k]);
    const auto eig = first_dirichlet_eigenvalue(*mesh);
    table << fmt::format("{},{:.17g},{:.17g},{}\n", resolutions[k], mesh->min_spacing(), eig.lambda, eig.iterations);
    log << fmt::format("lambda = {:.12g} at h = {:.6g} ({} iterations)\n", eig.lambda, mesh->min_spacing(),
                       eig.iterations);
    if (k + 1 == resolutions.size()) {
      auto field = open_output(out / "eigenfield.csv");
      const std::string names[] = {"eigenfield"};
      const ScalarField* fields[] = {&eig.eigenfield};
      write_fields_csv(field, *mesh, names, fields);
    }
  }
  return exit_ok;
}

int command_sweep(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto mesh = build_mesh(config.mesh, config.resolution);
  const double lambda = first_dirichlet_eigenvalue(*mesh).lambda;
  const double gate = 0.75;
  auto summary = open_output(out / "sweep_summary.csv");
  summary << "ratio,k,mu,mu_over_gate,termination,steps,final_t,monotone,worst_increase,initial_bound\n";
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  double largest_passing = -1.0, smallest_failing = std::numeric_limits<double>::infinity();
  bool all_below_pass = true;
  for (std::size_t k = 0; k < config.sweep.ratios.size(); ++k) {
    const double ratio = config.sweep.ratios[k];
    RunConfig run_config = config;
    run_config.field = FieldConfig{};
    run_config.field.kind = "potential_dist_sq";
    run_config.field.center = config.field.center;
    run_config.field.coefficient = -ratio * lambda;
    run_config.flow.resume.clear();
    const auto outcome = run_flow_into(run_config, config.resolution, out / "runs" / fmt::format("ratio_{:02d}", k),
                                       log, false);
    const auto find = [&](std::string_view id) {
      for (const auto& r : outcome.checks)
        if (r.id == id) return r;
      return EstimateCheckResult{};
    };
    const auto mono = find("flow_residual_monotonicity");
    const auto bound = find("flow_residual_initial_bound");
    const bool pass = mono.pass && bound.pass;
    if (pass) largest_passing = std::max(largest_passing, ratio);
    else smallest_failing = std::min(smallest_failing, ratio);
    if (ratio <= 0.9 * gate && !pass) all_below_pass = false;
    const auto& fs_final = outcome.report.final_state;
    summary << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{},{},{:.17g},{},{:.17g},{}\n", ratio, ratio * lambda,
                           outcome.mu, outcome.mu / (gate * lambda), to_string(outcome.report.termination),
                           fs_final ? fs_final->step : 0, fs_final ? fs_final->t : 0.0, mono.pass ? 1 : 0, mono.lhs,
                           bound.pass ? 1 : 0);
    runs.push_back({{"ratio", ratio}, {"monotone", pass}, {"termination", to_string(outcome.report.termination)}});
  }
  nlohmann::ordered_json boundary;
  boundary["lambda"] = lambda;
  boundary["gate_ratio"] = gate;
  boundary["largest_passing_ratio"] = largest_passing;
  boundary["smallest_failing_ratio"] =
      std::isfinite(smallest_failing) ? nlohmann::ordered_json(smallest_failing) : nlohmann::ordered_json(nullptr);
  boundary["all_pass_at_or_below_0.9_gate"] = all_below_pass;
  boundary["some_failure_above_gate"] = std::isfinite(smallest_failing) && smallest_failing > gate;
  boundary["runs"] = runs;
  auto js = open_output(out / "phase_boundary.json");
  js << boundary.dump(2) << '\n';
  log << fmt::format("sweep: lambda = {:.6g}, largest passing ratio {:.4g}, smallest failing ratio {}\n", lambda,
                     largest_passing, std::isfinite(smallest_failing) ? fmt::format("{:.4g}", smallest_failing) : "none");
  return exit_ok;
}

}  // namespace

std::shared_ptr<const DomainMesh> build_mesh(const MeshConfig& config, int resolution) {
  MeshSpec spec;
  spec.topology = config.topology;
  spec.lengths = config.lengths;
  spec.nodes = config.nodes;
  if (resolution > 0) {
    const bool periodic = config.topology == Topology::torus_periodic;
    for (std::size_t a = 0; a < spec.nodes.size(); ++a)
      spec.nodes[a] = static_cast<int>(std::lround(resolution * config.lengths[a])) + (periodic ? 0 : 1);
  }
  if (config.conformal == "linear") {
    const auto c = config.conformal_coefficients;
    spec.conformal_factor = [c](DomainPoint x) { return c[0] + c[1] * x[0] + (x.size() > 1 ? c[2] * x[1] : 0.0); };
  }
  if (config.region == "disk") {
    const auto center = config.region_center;
    const double radius = config.region_radius;
    spec.region = [center, radius](DomainPoint x) {
      return std::hypot(x[0] - center[0], x[1] - center[1]) <= radius;
    };
  }
  try {
    return std::make_shared<const DomainMesh>(DomainMesh::build(spec));
  } catch (const InvalidArgument& e) {
    throw ConfigError("[mesh]", e.what());
  }
}

std::shared_ptr<const TargetManifold> build_target(const TargetConfig& config) {
  switch (config.kind) {
    case ChartKind::euclidean:
      return std::make_shared<const TargetManifold>(TargetManifold::euclidean(config.dimension, config.scale));
    case ChartKind::hyperboloid:
      return std::make_shared<const TargetManifold>(TargetManifold::hyperboloid(config.dimension, config.scale));
    case ChartKind::flat_torus:
      return std::make_shared<const TargetManifold>(TargetManifold::flat_torus(config.periods, config.scale));
  }
  throw ConfigError("[target] kind", "unsupported target");
}

MapField build_map(const RunConfig& config, const std::shared_ptr<const DomainMesh>& mesh,
                   const std::shared_ptr<const TargetManifold>& target) {
  const auto& m = config.map;
  const int dims = mesh->dimension();
  HomotopyDescriptor homotopy;
  if (!m.homotopy.empty()) homotopy = {target->dimension(), dims, m.homotopy, m.shift};
  std::optional<MapField> base;
  if (m.kind == "constant") {
    const TargetPoint p = point_or_origin(*target, m.point);
    base = MapField::from_function(mesh, target, [&](DomainPoint) { return p; }, homotopy);
  } else if (m.kind == "geodesic") {
    const TargetPoint p = point_or_origin(*target, m.from), q = point_or_origin(*target, m.to);
    base = MapField::from_function(
        mesh, target, [&](DomainPoint x) { return target->geodesic_point(p, q, x[0] / mesh->length(0)); }, homotopy);
  } else if (m.kind == "affine") {
    const int n = target->dimension();
    base = MapField::from_function(
        mesh, target,
        [&](DomainPoint x) {
          Coords v = m.point.empty() ? Coords(n) : to_coords(m.point);
          for (int r = 0; r < n; ++r)
            for (int a = 0; a < dims; ++a) v[r] += m.matrix[static_cast<std::size_t>(r * dims + a)] * x[a] / mesh->length(a);
          return target->from_normal_coordinates(v);
        },
        homotopy);
  } else if (m.kind == "torus_affine") {
    base = harmonic_affine_representative(mesh, target, homotopy);
  } else if (m.kind == "random") {
    ScenarioFamily family("config", mesh, target, homotopy, m.amplitude, config.seed);
    base = family.sample();
  } else if (m.kind == "file") {
    std::ifstream in(m.file, std::ios::binary);
    if (!in) throw ConfigError("[map] file", "cannot read '" + m.file + "'");
    try {
      base = read_map_csv(in, mesh);
    } catch (const Error& e) {
      throw ConfigError("[map] file", e.what());
    }
  } else {
    throw ConfigError("[map] kind", "unknown map kind '" + m.kind + "'");
  }
  if (m.bump != 0.0) {
    MapField bumped = *base;
    const int axis = target->dimension() > 1 ? 1 : 0;
    for (std::size_t i = 0; i < bumped.size(); ++i) {
      if (!mesh->is_interior(i)) continue;
      double shape = 1.0;
      for (int a = 0; a < dims; ++a) {
        const double s = mesh->coordinate(i, a) / mesh->length(a);
        shape *= mesh->periodic() ? std::sin(2 * pi * s) : std::sin(pi * s);
      }
      const TargetPoint p = base->point(i);
      const auto frame = target->orthonormal_frame(p);
      bumped.set_point(i, target->exp_map(p, TangentVector{p, frame[static_cast<std::size_t>(axis)].components *
                                                                  (m.bump * shape)}));
    }
    base = std::move(bumped);
  }
  try {
    base->validate();
  } catch (const Error& e) {
    throw ConfigError("[map]", e.what());
  }
  return *base;
}

PrescribedField build_field(const FieldConfig& config, const std::shared_ptr<const TargetManifold>& target) {
  std::optional<PrescribedField> field;
  if (config.kind == "zero") {
    field = zero_vector_field(target);
  } else if (config.kind == "potential_dist_sq") {
    field = dist_sq_potential(target, point_or_origin(*target, config.center), config.coefficient);
  } else if (config.kind == "linear") {
    field = linear_field(target, config.matrix);
  } else if (config.kind == "rotational") {
    std::optional<TargetPoint> center;
    if (!config.center.empty()) center = point_or_origin(*target, config.center);
    field = rotational_field(target, config.strength, center);
  } else if (config.kind == "sum") {
    std::vector<PrescribedField> terms;
    for (const auto& t : config.term_fields) terms.push_back(build_field(t, target));
    field = sum_field(std::move(terms));
  } else {
    throw ConfigError("[field] kind", "unknown field kind '" + config.kind + "'");
  }
  if (config.mu) field->set_analytic_mu(config.mu);
  if (config.sup) field->set_analytic_sup(config.sup);
  return *field;
}

FlowConfig build_flow_config(const RunConfig& config, int resolution) {
  const auto mesh = build_mesh(config.mesh, resolution);
  const auto target = build_target(config.target);
  FlowConfig flow(build_map(config, mesh, target), build_field(config.field, target));
  flow.policy = config.flow.policy;
  flow.dt = config.flow.dt;
  flow.cfl_fraction = config.flow.cfl_fraction;
  flow.t_max = config.flow.t_max;
  flow.tol_stat = config.flow.tol_stat;
  flow.diagnostic_every = static_cast<std::size_t>(config.flow.diagnostic_every);
  flow.checkpoint_every = static_cast<std::size_t>(config.flow.checkpoint_every);
  flow.blowup_factor = config.flow.blowup_factor;
  flow.seed = config.seed;
  flow.threads = threads_from_environment();
  try {
    flow.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("[flow]", e.what());
  }
  return flow;
}

int threads_from_environment() {
  const char* value = std::getenv("PTF_THREADS");
  if (!value || !*value) return 1;
  char* end = nullptr;
  const long n = std::strtol(value, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024)
    throw ConfigError("PTF_THREADS", fmt::format("expected a positive integer, got '{}'", value));
  return static_cast<int>(n);
}

int run_command(const RunConfig& config, std::ostream& log) {
  try {
    config.validate();
    if (config.output.empty()) throw ConfigError("[run] output", "no output directory");
    const fs::path out = prepare_directory(config.output);
    {
      auto echo = open_output(out / "config.echo");
      echo << echo_config(config);
    }
    switch (config.command) {
      case Command::flow: return command_flow(config, out, log);
      case Command::verify: return command_verify(config, out, log);
      case Command::spectrum: return command_spectrum(config, out, log);
      case Command::sweep: return command_sweep(config, out, log);
    }
    return exit_config_error;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return exit_config_error;
  } catch (const CheckpointError& e) {
    log << "checkpoint error: " << e.what() << '\n';
    return exit_config_error;
  } catch (const InvalidArgument& e) {
    log << "invalid configuration: " << e.what() << '\n';
    return exit_config_error;
  } catch (const HomotopyMismatch& e) {
    log << "invalid configuration: " << e.what() << '\n';
    return exit_config_error;
  } catch (const ChartMismatch& e) {
    log << "invalid configuration: " << e.what() << '\n';
    return exit_config_error;
  }
}

}  // namespace ptf
