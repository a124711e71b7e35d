#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ptf/calculus.hpp"
#include "ptf/fields.hpp"
#include "ptf/map_field.hpp"

namespace ptf {

enum class StepPolicy { fixed, cfl };
enum class Termination { stationary, t_max, blowup, error };

std::string_view to_string(StepPolicy policy);
std::string_view to_string(Termination termination);

/// Parameters of the geodesic heat flow  df/dt = tau(f) - V(x, f),  f(., 0) = g,  f = g on the boundary.
struct FlowConfig {
  FlowConfig(MapField initial_map, PrescribedField prescribed) : initial(std::move(initial_map)), field(std::move(prescribed)) {}

  /// Initial map and Dirichlet data g.
  MapField initial;
  PrescribedField field;
  StepPolicy policy = StepPolicy::cfl;
  /// Step for StepPolicy::fixed.
  double dt = 0.0;
  /// CFL fraction c in (0, 1]: dt = c * h_min^2 * e^{2 min phi} / (2m).
  double cfl_fraction = 0.5;
  double t_max = 1.0;
  /// Stationary once sup |tau(f) - V| < tol_stat.
  double tol_stat = 1e-8;
  /// Record a diagnostics row every this many steps (the first and final states are always recorded).
  std::size_t diagnostic_every = 1;
  /// Emit a checkpoint every this many steps through the run's checkpoint sink; 0 disables.
  std::size_t checkpoint_every = 0;
  std::uint64_t seed = 0;
  /// Blowup once sup e(f) exceeds this factor times max(sup e(g), 1).
  double blowup_factor = 1e6;
  /// Worker threads for node-parallel residual and update passes.
  int threads = 1;

  /// Throws InvalidArgument on out-of-range parameters or an inconsistent g.
  void validate() const;
  /// Time step used by step() under this policy.
  double time_step() const;
  /// FNV-1a digest of everything that determines the trajectory (cadences excluded).
  std::uint64_t hash() const;
};

struct FlowState {
  double t = 0.0;
  MapField f;
  /// r = tau(f) - V(., f); zero at Dirichlet boundary nodes.
  TangentField r;
  std::uint64_t step = 0;
};

struct FlowRow {
  double t = 0.0;
  std::uint64_t step = 0;
  double energy = 0.0;
  /// E + integral of Phi(f); NaN for non-variational fields.
  double energy_phi = 0.0;
  double residual_l4 = 0.0;  // integral |r|^4
  double residual_l2 = 0.0;  // integral |r|^2
  double sup_energy_density = 0.0;
  /// sup e(f) over interior nodes within two grid spacings of the boundary (0 on tori).
  double sup_energy_density_near_boundary = 0.0;
  double sup_distance_to_initial = 0.0;
  double sup_residual = 0.0;
  /// sup over nodes of |r| + |V(f)|.
  double sup_residual_plus_field = 0.0;
};

struct FlowReport {
  std::vector<FlowRow> rows;
  Termination termination = Termination::error;
  std::string message;
  std::optional<FlowState> final_state;
  double dt = 0.0;
  /// sup |tau(g)| over interior nodes.
  double sup_tension_initial = 0.0;
  /// sup over recorded times of (|r| + |V|).
  double sup_residual_plus_field = 0.0;
  /// Pointwise maximum over recorded times of d(f(., t), g).
  ScalarField max_distance_to_initial;
};

/// r = tau(f) - V(x, f) at interior nodes, zero elsewhere.
TangentField residual(const FlowConfig& config, const MapField& f);

FlowState initialize(const FlowConfig& config);

/// Interior nodes move to exp_f(dt r); boundary nodes are copied from g. Throws BlowupError
/// on non-finite coordinates.
FlowState step(const FlowConfig& config, const FlowState& state, double dt);

FlowRow diagnostics(const FlowConfig& config, const FlowState& state);

using CheckpointSink = std::function<void(const FlowState&)>;

/// Steps until stationary, t >= t_max, or blowup. Starts from `start` when given
/// (a restored checkpoint), otherwise from initialize(config).
FlowReport run(const FlowConfig& config, std::optional<FlowState> start = std::nullopt,
               const CheckpointSink& sink = {});

/// E(f) + sum_x w_x Phi(f(x)). Throws InvalidArgument for non-variational fields.
double variational_energy(const MapField& f, const PrescribedField& field);

/// Self-describing JSON record: schema tag, config hash, hex-float payload and checksum.
void write_checkpoint(std::ostream& out, const FlowConfig& config, const FlowState& state);
/// Inverse of write_checkpoint; throws CheckpointError on schema, hash or checksum mismatch.
FlowState read_checkpoint(std::istream& in, const FlowConfig& config);

/// Header plus one line per row, fixed column order, round-trip number formatting.
void write_diagnostics_csv(std::ostream& out, const FlowReport& report);

}  // namespace ptf
