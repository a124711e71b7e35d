#pragma once

#include <iosfwd>
#include <memory>

#include "ptf/config.hpp"
#include "ptf/estimates.hpp"
#include "ptf/fields.hpp"

namespace ptf {

enum ExitCode : int {
  exit_ok = 0,
  exit_failed_estimate = 1,
  exit_t_max = 2,
  exit_blowup = 3,
  exit_config_error = 4,
};

/// Mesh for the config at `resolution` nodes per unit length (0 keeps mesh.nodes).
std::shared_ptr<const DomainMesh> build_mesh(const MeshConfig& config, int resolution = 0);
std::shared_ptr<const TargetManifold> build_target(const TargetConfig& config);
MapField build_map(const RunConfig& config, const std::shared_ptr<const DomainMesh>& mesh,
                   const std::shared_ptr<const TargetManifold>& target);
PrescribedField build_field(const FieldConfig& config, const std::shared_ptr<const TargetManifold>& target);
FlowConfig build_flow_config(const RunConfig& config, int resolution = 0);

/// Worker threads from PTF_THREADS (default 1). Throws ConfigError on a malformed value.
int threads_from_environment();

/// Executes config.command, writing artifacts under config.output and progress to `log`.
/// Returns an ExitCode; configuration problems are reported on `log` and return exit_config_error.
int run_command(const RunConfig& config, std::ostream& log);

}  // namespace ptf
