#include "ptf/flow.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include <json.hpp>

#include "ptf/errors.hpp"

namespace ptf {
namespace {

constexpr const char* kCheckpointSchema = "ptf-checkpoint/1";

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void add(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    bytes(&bits, sizeof bits);
  }
  void add(std::uint64_t v) { bytes(&v, sizeof v); }
  void add(std::string_view s) {
    add(static_cast<std::uint64_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::uint64_t value() const noexcept { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

// Runs body(begin, end) over [0, n) split across `threads` workers; returns after all finish.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2 * workers) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = std::min(n, w * chunk), end = std::min(n, begin + chunk);
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  body(std::size_t{0}, std::min(n, chunk));
}

TangentVector field_at(const FlowConfig& config, const MapField& f, std::size_t node) {
  const auto pos = f.mesh().position(node);
  return config.field(DomainPoint(pos.data(), static_cast<std::size_t>(f.mesh().dimension())), f.point(node));
}

double hexfloat_parse(const nlohmann::json& v) {
  const std::string s = v.get<std::string>();
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw CheckpointError("malformed number in checkpoint: " + s);
  return x;
}

std::uint64_t payload_checksum(double t, std::uint64_t step, std::span<const double> coords) {
  Fnv1a h;
  h.add(t);
  h.add(step);
  for (double c : coords) h.add(c);
  return h.value();
}

}  // namespace

std::string_view to_string(StepPolicy policy) { return policy == StepPolicy::fixed ? "fixed" : "cfl"; }

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::stationary: return "stationary";
    case Termination::t_max: return "t_max";
    case Termination::blowup: return "blowup";
    case Termination::error: return "error";
  }
  return "error";
}

void FlowConfig::validate() const {
  if (!(cfl_fraction > 0.0 && cfl_fraction <= 1.0)) throw InvalidArgument("cfl fraction must lie in (0, 1]");
  if (!(t_max > 0.0)) throw InvalidArgument("t_max must be positive");
  if (!(tol_stat > 0.0)) throw InvalidArgument("stationarity tolerance must be positive");
  if (policy == StepPolicy::fixed && !(dt > 0.0)) throw InvalidArgument("fixed time step must be positive");
  if (diagnostic_every == 0) throw InvalidArgument("diagnostic cadence must be positive");
  if (!(blowup_factor > 1.0)) throw InvalidArgument("blowup factor must exceed 1");
  if (!(initial.target() == field.target())) throw InvalidArgument("map and prescribed field use different targets");
  initial.validate();
  for (std::size_t i = 0; i < initial.size(); ++i)
    if (!tension_at(initial, i).components.all_finite()) throw InvalidArgument("initial map has non-finite tension");
}

double FlowConfig::time_step() const {
  if (policy == StepPolicy::fixed) return dt;
  const auto& mesh = initial.mesh();
  const auto& phi = mesh.conformal();
  const double min_phi = phi.empty() ? 0.0 : *std::min_element(phi.begin(), phi.end());
  const double h = mesh.min_spacing();
  return cfl_fraction * h * h * std::exp(2 * min_phi) / (2.0 * mesh.dimension());
}

std::uint64_t FlowConfig::hash() const {
  Fnv1a h;
  const auto& mesh = initial.mesh();
  h.add(to_string(mesh.topology()));
  for (int a = 0; a < mesh.dimension(); ++a) {
    h.add(static_cast<std::uint64_t>(mesh.nodes_per_axis(a)));
    h.add(mesh.length(a));
  }
  for (double v : mesh.conformal()) h.add(v);
  for (std::size_t i = 0; i < mesh.node_count(); ++i) h.add(static_cast<std::uint64_t>(mesh.kind(i)));
  const auto& target = initial.target();
  h.add(to_string(target.kind()));
  h.add(static_cast<std::uint64_t>(target.dimension()));
  for (double p : target.periods()) h.add(p);
  h.add(target.metric_scale());
  for (int a : initial.homotopy().matrix) h.add(static_cast<std::uint64_t>(static_cast<std::int64_t>(a)));
  for (double s : initial.homotopy().shift) h.add(s);
  for (double c : initial.raw()) h.add(c);
  h.add(field.description());
  h.add(to_string(policy));
  h.add(dt);
  h.add(cfl_fraction);
  h.add(t_max);
  h.add(tol_stat);
  h.add(seed);
  h.add(blowup_factor);
  return h.value();
}

TangentField residual(const FlowConfig& config, const MapField& f) {
  TangentField r;
  r.vectors.resize(f.size());
  parallel_for(f.size(), config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      TangentVector v = tension_at(f, i);
      if (f.mesh().is_interior(i)) v.components -= field_at(config, f, i).components;
      r.vectors[i] = v;
    }
  });
  return r;
}

FlowState initialize(const FlowConfig& config) {
  config.validate();
  return FlowState{0.0, config.initial, residual(config, config.initial), 0};
}

FlowState step(const FlowConfig& config, const FlowState& state, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  const auto& mesh = state.f.mesh();
  const auto& target = state.f.target();
  std::vector<TargetPoint> moved(state.f.size());
  parallel_for(state.f.size(), config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (!mesh.is_interior(i)) {
        moved[i] = config.initial.point(i);
        continue;
      }
      const TangentVector& r = state.r[i];
      moved[i] = target.exp_map(state.f.point(i), TangentVector{r.base, r.components * dt});
    }
  });
  MapField next = state.f;
  for (std::size_t i = 0; i < moved.size(); ++i) {
    if (!moved[i].coords.all_finite()) throw BlowupError(i, fmt::format("non-finite coordinates at node {}", i));
    next.set_point(i, moved[i]);
  }
  TangentField r = residual(config, next);
  return FlowState{state.t + dt, std::move(next), std::move(r), state.step + 1};
}

FlowRow diagnostics(const FlowConfig& config, const FlowState& state) {
  const MapField& f = state.f;
  const auto& mesh = f.mesh();
  const auto& target = f.target();
  FlowRow row;
  row.t = state.t;
  row.step = state.step;
  row.energy = energy(f);
  row.energy_phi = config.field.variational() ? variational_energy(f, config.field)
                                              : std::numeric_limits<double>::quiet_NaN();
  const ScalarField e = energy_density(f);
  const ScalarField d = distance_field(f, config.initial);
  ScalarField r2(f.size(), 0.0), r4(f.size(), 0.0);
  const double near = 2 * mesh.min_spacing() * (1 + 1e-9);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double rn = target.norm(state.r[i]);
    r2[i] = rn * rn;
    r4[i] = r2[i] * r2[i];
    if (mesh.weight(i) > 0.0) row.sup_energy_density = std::max(row.sup_energy_density, e[i]);
    row.sup_distance_to_initial = std::max(row.sup_distance_to_initial, d[i]);
    if (!mesh.is_interior(i)) continue;
    if (mesh.boundary_distance(i) <= near)
      row.sup_energy_density_near_boundary = std::max(row.sup_energy_density_near_boundary, e[i]);
    row.sup_residual = std::max(row.sup_residual, rn);
    row.sup_residual_plus_field =
        std::max(row.sup_residual_plus_field, rn + target.norm(field_at(config, f, i)));
  }
  row.residual_l2 = integrate(mesh, r2);
  row.residual_l4 = integrate(mesh, r4);
  return row;
}

FlowReport run(const FlowConfig& config, std::optional<FlowState> start, const CheckpointSink& sink) {
  FlowReport report;
  FlowState state = start ? std::move(*start) : initialize(config);
  if (start) config.validate();
  const double dt = config.time_step();
  report.dt = dt;

  const MapField& g = config.initial;
  const ScalarField e0 = energy_density(g);
  const double threshold = config.blowup_factor * std::max(1.0, *std::max_element(e0.begin(), e0.end()));
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.mesh().is_interior(i))
      report.sup_tension_initial = std::max(report.sup_tension_initial, g.target().norm(tension_at(g, i)));
  report.max_distance_to_initial.assign(g.size(), 0.0);

  const auto record = [&](const FlowState& s) {
    const FlowRow row = diagnostics(config, s);
    report.sup_residual_plus_field = std::max(report.sup_residual_plus_field, row.sup_residual_plus_field);
    const ScalarField d = distance_field(s.f, g);
    for (std::size_t i = 0; i < d.size(); ++i)
      report.max_distance_to_initial[i] = std::max(report.max_distance_to_initial[i], d[i]);
    report.rows.push_back(row);
  };
  const auto sup_residual = [&](const FlowState& s) {
    double m = 0.0;
    for (std::size_t i = 0; i < s.f.size(); ++i)
      if (s.f.mesh().is_interior(i)) m = std::max(m, s.f.target().norm(s.r[i]));
    return m;
  };

  record(state);
  const double t_eps = 1e-12 * std::max(1.0, config.t_max);
  while (true) {
    if (sup_residual(state) < config.tol_stat) {
      report.termination = Termination::stationary;
      break;
    }
    if (state.t >= config.t_max - t_eps) {
      report.termination = Termination::t_max;
      break;
    }
    const double h = std::min(dt, config.t_max - state.t);
    try {
      FlowState next = step(config, state, h);
      const ScalarField e = energy_density(next.f);
      double sup_e = 0.0;
      bool finite = true;
      for (double v : e) {
        finite = finite && std::isfinite(v);
        sup_e = std::max(sup_e, v);
      }
      if (!finite || sup_e > threshold) {
        report.termination = Termination::blowup;
        report.message = fmt::format("energy density {:.6g} exceeds blowup threshold {:.6g} at t = {:.6g}", sup_e,
                                     threshold, next.t);
        break;
      }
      state = std::move(next);
    } catch (const BlowupError& err) {
      report.termination = Termination::blowup;
      report.message = fmt::format("{} at t = {:.6g}", err.what(), state.t + h);
      break;
    }
    if (state.step % config.diagnostic_every == 0) record(state);
    if (config.checkpoint_every != 0 && sink && state.step % config.checkpoint_every == 0) sink(state);
  }
  if (report.rows.back().step != state.step) record(state);
  report.final_state = std::move(state);
  return report;
}

double variational_energy(const MapField& f, const PrescribedField& field) {
  if (!field.variational()) throw InvalidArgument("prescribed field has no potential");
  ScalarField phi(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) phi[i] = field.potential()(f.point(i));
  return energy(f) + integrate(f.mesh(), phi);
}

void write_checkpoint(std::ostream& out, const FlowConfig& config, const FlowState& state) {
  nlohmann::json j;
  j["schema"] = kCheckpointSchema;
  j["config_hash"] = fmt::format("{:016x}", config.hash());
  j["seed"] = config.seed;
  j["t"] = fmt::format("{:a}", state.t);
  j["step"] = state.step;
  j["stride"] = state.f.stride();
  j["nodes"] = state.f.size();
  auto& payload = j["coordinates"] = nlohmann::json::array();
  for (double c : state.f.raw()) payload.push_back(fmt::format("{:a}", c));
  j["checksum"] = fmt::format("{:016x}", payload_checksum(state.t, state.step, state.f.raw()));
  out << j.dump(1) << '\n';
}

FlowState read_checkpoint(std::istream& in, const FlowConfig& config) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& err) {
    throw CheckpointError(std::string("unreadable checkpoint: ") + err.what());
  }
  try {
    if (j.at("schema").get<std::string>() != kCheckpointSchema)
      throw CheckpointError("checkpoint schema mismatch: " + j.at("schema").get<std::string>());
    if (j.at("config_hash").get<std::string>() != fmt::format("{:016x}", config.hash()))
      throw CheckpointError("checkpoint was written for a different configuration");
    MapField f = config.initial;
    if (j.at("nodes").get<std::size_t>() != f.size() || j.at("stride").get<int>() != f.stride())
      throw CheckpointError("checkpoint shape does not match the mesh");
    const auto& payload = j.at("coordinates");
    if (payload.size() != f.raw().size()) throw CheckpointError("checkpoint payload has the wrong length");
    auto raw = f.raw();
    for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = hexfloat_parse(payload[k]);
    const double t = hexfloat_parse(j.at("t"));
    const auto step_count = j.at("step").get<std::uint64_t>();
    if (j.at("checksum").get<std::string>() != fmt::format("{:016x}", payload_checksum(t, step_count, f.raw())))
      throw CheckpointError("checkpoint checksum mismatch");
    f.validate();
    TangentField r = residual(config, f);
    return FlowState{t, std::move(f), std::move(r), step_count};
  } catch (const nlohmann::json::exception& err) {
    throw CheckpointError(std::string("malformed checkpoint: ") + err.what());
  } catch (const ChartMismatch& err) {
    throw CheckpointError(std::string("checkpoint coordinates are off the target: ") + err.what());
  }
}

void write_diagnostics_csv(std::ostream& out, const FlowReport& report) {
  out << "t,step,energy,energy_phi,residual_l4,residual_l2,sup_energy_density,"
         "sup_energy_density_near_boundary,sup_distance_to_initial,sup_residual,sup_residual_plus_field\n";
  for (const auto& r : report.rows)
    out << fmt::format("{:.17g},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.t,
                       r.step, r.energy, r.energy_phi, r.residual_l4, r.residual_l2, r.sup_energy_density,
                       r.sup_energy_density_near_boundary, r.sup_distance_to_initial, r.sup_residual,
                       r.sup_residual_plus_field);
}

}  // namespace ptf
