#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ptf/calculus.hpp"
#include "ptf/flow.hpp"

namespace ptf {

/// One evaluated inequality lhs <= rhs. pass <=> slack >= -tolerance.
struct EstimateCheckResult {
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = false;
  double tolerance = 0.0;
  std::string scenario;
  double resolution = 0.0;
  /// Informational rows never fail a run.
  bool required = true;
  std::string note;
};

EstimateCheckResult make_result(std::string id, double lhs, double rhs, double tolerance, std::string scenario,
                                double resolution, bool required = true, std::string note = {});

/// Seeded generator of maps sharing mesh, target, homotopy class and (on Dirichlet meshes)
/// boundary values: base(), perturbed by exp of a random low-mode tangent field.
class ScenarioFamily {
 public:
  ScenarioFamily(std::string name, std::shared_ptr<const DomainMesh> mesh, std::shared_ptr<const TargetManifold> target,
                 HomotopyDescriptor homotopy, double amplitude, std::uint64_t seed);

  const std::string& name() const noexcept { return name_; }
  const DomainMesh& mesh() const noexcept { return *mesh_; }
  const std::shared_ptr<const DomainMesh>& mesh_ptr() const noexcept { return mesh_; }
  const std::shared_ptr<const TargetManifold>& target_ptr() const noexcept { return target_; }
  double amplitude() const noexcept { return amplitude_; }
  std::mt19937_64& rng() noexcept { return rng_; }

  /// Torus pairs: the affine representative. Otherwise a fixed smooth map.
  const MapField& base() const noexcept { return base_; }
  /// base() moved by exp of a random perturbation of the family amplitude, zero off the interior.
  MapField sample();
  /// base() moved by amplitude * (a fixed lowest mode) along the first frame vector.
  MapField single_mode(double amplitude) const;

 private:
  std::string name_;
  std::shared_ptr<const DomainMesh> mesh_;
  std::shared_ptr<const TargetManifold> target_;
  double amplitude_;
  std::mt19937_64 rng_;
  MapField base_;
};

/// Distance-Laplacian comparison Delta d(f1, f2) >= -(|tau1| + |tau2|), worst interior node.
EstimateCheckResult check_distance_subharmonic(const MapField& f1, const MapField& f2, const std::string& scenario);

/// Delta d^2 >= 2|df1 - P df2|^2 - c d (|tau1| + |tau2|) with c = 2 (required) or the printed
/// c = 1 (informational), worst interior node.
EstimateCheckResult check_distance_squared_convexity(const MapField& f1, const MapField& f2,
                                                     const std::string& scenario, bool printed_coefficient = false);

/// |sqrt E(f1) - sqrt E(f2)| <= sqrt E(f1, f2).
EstimateCheckResult check_energy_triangle(const MapField& f1, const MapField& f2, const std::string& scenario);

/// |sqrt E(f1, f3) - sqrt E(f3, f2)| <= sqrt E(f1, f2).
EstimateCheckResult check_difference_triangle(const MapField& f1, const MapField& f2, const MapField& f3,
                                              const std::string& scenario);

/// ||d(f1, f2)|| <= lambda^{-1} (||tau1|| + ||tau2||); equal boundary values required.
EstimateCheckResult check_eigenvalue_estimate(const MapField& f1, const MapField& f2, double lambda,
                                              const std::string& scenario);

/// Dirichlet meshes: E(f1, f2) <= lambda^{-1}(||tau1||^2 + ||tau2||^2).
/// Tori: E(f1, f2) <= k ||d|| (||tau1|| + ||tau2||), k = 1/2 (required) or 1/4 (informational).
EstimateCheckResult check_difference_energy_bound(const MapField& f1, const MapField& f2, double lambda,
                                                  const std::string& scenario, double torus_coefficient = 0.5);

/// sqrt E(f_t) convex along t -> geodesic_interpolate(f0, f1, t): minimum second difference on `samples` points.
EstimateCheckResult check_geodesic_energy_convexity(const MapField& f0, const MapField& f1,
                                                    const std::string& scenario, int samples = 11);

struct AdmissibleConstant {
  /// Smallest constant making the inequality hold for this map (0 if it holds with any constant).
  double value = 0.0;
  double lhs = 0.0;
  double rhs_fixed = 0.0;
  double rhs_coefficient_of = 0.0;
};

/// Smallest C with ||df|| <= ||dh|| + C ||tau(f)||, h the affine representative of f's class.
AdmissibleConstant homotopy_energy_constant(const MapField& f);
/// Smallest C1 with int|df|^2 + int|nabla df|^2 <= C1 int|tau|^2 + C2 int|dh|^2, C2 = 1 + sup|Ric|.
AdmissibleConstant w22_constant(const MapField& f, const MapField& h);

/// Family-boundedness of a smallest-admissible constant: max/min over the family <= ratio_limit.
EstimateCheckResult check_constant_stability(const std::string& id, const std::vector<double>& constants,
                                             double ratio_limit, const std::string& scenario, double resolution,
                                             bool required = true);

struct BochnerResidual {
  /// max |Delta e - |nabla df|^2 - <nabla tau, df>| over nodes two spacings from any boundary.
  double max_abs = 0.0;
  /// min of the same expression (one-sided check for curved targets).
  double min = 0.0;
};

/// Pointwise Bochner terms on a flat domain with e = |df|^2 / 2 from the central differential.
BochnerResidual bochner_residual(const MapField& f);

/// Least-squares slope of log(err) against log(h).
double convergence_order(const std::vector<double>& spacing, const std::vector<double>& error);
/// Least-squares slope of y against x.
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Scales the target metric by s: energy by s^2 and distances by s (two rows).
std::vector<EstimateCheckResult> check_rescaling(const MapField& f1, const MapField& f2, double s,
                                                 const std::string& scenario);

struct FlowCheckContext {
  double lambda = 0.0;  // first Dirichlet eigenvalue (ignored on tori)
  double mu = 0.0;      // monotonicity constant of V used for gating
  std::string scenario;
};

/// Monotonicity, uniform bounds, dominance, decay and descent rows for a finished run.
std::vector<EstimateCheckResult> check_flow_report(const FlowReport& report, const FlowConfig& config,
                                                   const FlowCheckContext& context);

struct SuiteOptions {
  /// Nodes per unit length along each axis (h = 1 / resolution).
  int resolution = 32;
  int scenarios = 10;
  std::uint64_t seed = 1;
  /// Restrict to these ids (empty = all).
  std::vector<std::string> selection;
};

/// Every identifier run_estimate_suite can produce.
const std::vector<std::string>& estimate_ids();

/// Inequality suite over seeded scenario families on interval, square and torus domains.
std::vector<EstimateCheckResult> run_estimate_suite(const SuiteOptions& options);

/// Fails if any required row fails.
bool all_required_pass(const std::vector<EstimateCheckResult>& results);

void write_results_json(std::ostream& out, const std::vector<EstimateCheckResult>& results);
void write_results_csv(std::ostream& out, const std::vector<EstimateCheckResult>& results);

}  // namespace ptf
