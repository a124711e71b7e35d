#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ptf/flow.hpp"
#include "ptf/geometry.hpp"
#include "ptf/mesh.hpp"

namespace ptf {

enum class Command { flow, verify, spectrum, sweep };

std::string_view to_string(Command command);
Command command_from_string(std::string_view name);

struct MeshConfig {
  Topology topology = Topology::interval_dirichlet;
  std::vector<int> nodes{65};
  std::vector<double> lengths{1.0};
  /// "none" or "linear": phi = c0 + c1 x + c2 y.
  std::string conformal = "none";
  std::vector<double> conformal_coefficients;
  /// "none" or "disk" (Dirichlet rectangles only).
  std::string region = "none";
  std::vector<double> region_center;
  double region_radius = 0.0;

  friend bool operator==(const MeshConfig&, const MeshConfig&) = default;
};

struct TargetConfig {
  ChartKind kind = ChartKind::hyperboloid;
  int dimension = 2;
  double scale = 1.0;
  std::vector<double> periods;

  friend bool operator==(const TargetConfig&, const TargetConfig&) = default;
};

/// Initial map and Dirichlet data g. Points are given in normal coordinates about the target origin.
struct MapConfig {
  /// constant | geodesic | affine | torus_affine | random | file
  std::string kind = "constant";
  std::vector<double> point;
  std::vector<double> from;
  std::vector<double> to;
  /// affine: target-dim x domain-dim row-major, applied to x / L.
  std::vector<double> matrix;
  std::vector<int> homotopy;
  std::vector<double> shift;
  /// Interior bump along the second frame vector (first in 1-D targets), zero on Dirichlet boundaries.
  double bump = 0.0;
  /// random: perturbation amplitude.
  double amplitude = 0.3;
  std::string file;

  friend bool operator==(const MapConfig&, const MapConfig&) = default;
};

struct FieldConfig {
  /// zero | potential_dist_sq | linear | rotational | sum
  std::string kind = "zero";
  std::vector<double> center;
  double coefficient = 1.0;
  double strength = 1.0;
  std::vector<double> matrix;
  std::optional<double> mu;
  std::optional<double> sup;
  /// sum: names of [field.<name>] sections, in order.
  std::vector<std::string> terms;
  std::vector<FieldConfig> term_fields;

  friend bool operator==(const FieldConfig&, const FieldConfig&) = default;
};

struct FlowParams {
  StepPolicy policy = StepPolicy::cfl;
  double dt = 0.0;
  double cfl_fraction = 0.5;
  double t_max = 1.0;
  double tol_stat = 1e-8;
  int diagnostic_every = 1;
  int checkpoint_every = 0;
  double blowup_factor = 1e6;
  /// Checkpoint file to resume from (empty: start at t = 0).
  std::string resume;

  friend bool operator==(const FlowParams&, const FlowParams&) = default;
};

struct SuiteConfig {
  /// Estimate ids to run; empty runs all.
  std::vector<std::string> estimates;
  int scenarios = 10;
  int resolution = 64;
  /// verify: also run the configured flow and append its report checks.
  bool flow_checks = false;

  friend bool operator==(const SuiteConfig&, const SuiteConfig&) = default;
};

struct SweepConfig {
  /// Repelling strengths k as multiples of the first Dirichlet eigenvalue: V = -k grad(1/2 d^2(., o)).
  std::vector<double> ratios{0.5, 0.6, 0.675, 0.75, 0.9, 1.1, 1.3};

  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct RunConfig {
  Command command = Command::flow;
  MeshConfig mesh;
  TargetConfig target;
  MapConfig map;
  FieldConfig field;
  FlowParams flow;
  SuiteConfig suite;
  SweepConfig sweep;
  std::string output;
  std::uint64_t seed = 1;
  /// Nodes per unit length; overrides mesh.nodes when positive.
  int resolution = 0;
  /// Refinement ladder: one run per entry (resolution semantics).
  std::vector<int> resolutions;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Strict INI parser. Sections: [run] [mesh] [target] [map] [field] [field.<name>] [flow] [suite] [sweep].
/// Unknown sections or keys, malformed values and missing required keys raise ConfigError with
/// "line N: [section] key" locations. Absent keys take the defaults above. `command` overrides [run] command
/// (the CLI subcommand) and decides which sections are required.
RunConfig parse_config(std::string_view text, std::optional<Command> command = std::nullopt);

/// Normalized INI: every key, defaults filled, doubles round-trip exactly. parse_config(echo) == config.
std::string echo_config(const RunConfig& config);

}  // namespace ptf
