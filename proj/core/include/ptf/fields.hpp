#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ptf/geometry.hpp"
#include "ptf/mesh.hpp"

namespace ptf {

/// A prescribed right-hand side V(x, y) of tau(f) = V: for each domain point x and
/// target point y, a tangent vector at y.
class PrescribedField {
 public:
  using Evaluator = std::function<TangentVector(DomainPoint, const TargetPoint&)>;
  using Potential = std::function<double(const TargetPoint&)>;

  PrescribedField(std::shared_ptr<const TargetManifold> target, Evaluator evaluator, std::string description);

  TangentVector operator()(DomainPoint x, const TargetPoint& y) const { return evaluator_(x, y); }
  /// Autonomous evaluation V(y).
  TangentVector at(const TargetPoint& y) const { return evaluator_({}, y); }

  const TargetManifold& target() const noexcept { return *target_; }
  const std::shared_ptr<const TargetManifold>& target_ptr() const noexcept { return target_; }
  const std::string& description() const noexcept { return description_; }

  bool variational() const noexcept { return static_cast<bool>(potential_); }
  /// Potential Phi with V = grad Phi, when the field is variational.
  const Potential& potential() const noexcept { return potential_; }
  std::optional<double> analytic_mu() const noexcept { return analytic_mu_; }
  std::optional<double> analytic_sup() const noexcept { return analytic_sup_; }

  PrescribedField& set_potential(Potential phi) {
    potential_ = std::move(phi);
    return *this;
  }
  PrescribedField& set_analytic_mu(std::optional<double> mu) {
    analytic_mu_ = mu;
    return *this;
  }
  PrescribedField& set_analytic_sup(std::optional<double> sup) {
    analytic_sup_ = sup;
    return *this;
  }

 private:
  std::shared_ptr<const TargetManifold> target_;
  Evaluator evaluator_;
  std::string description_;
  Potential potential_;
  std::optional<double> analytic_mu_;
  std::optional<double> analytic_sup_;
};

PrescribedField zero_vector_field(std::shared_ptr<const TargetManifold> target);

/// V = grad phi by Richardson-extrapolated central differences (step 1e-5) along an orthonormal frame.
PrescribedField from_potential(std::shared_ptr<const TargetManifold> target, PrescribedField::Potential phi);

/// V = coefficient * grad(1/2 d^2(., center)) = -coefficient * log_y(center), in closed form.
/// Carries its potential; analytic mu = 0 for coefficient >= 0 and -coefficient on flat targets.
PrescribedField dist_sq_potential(std::shared_ptr<const TargetManifold> target, const TargetPoint& center,
                                  double coefficient);

/// V(y) = A y on a Euclidean target (A row-major n x n).
PrescribedField linear_field(std::shared_ptr<const TargetManifold> target, std::vector<double> matrix);

/// Quarter-turn of the radial field -log_y(center) inside T_y, times `strength`. Two-dimensional targets only.
PrescribedField rotational_field(std::shared_ptr<const TargetManifold> target, double strength,
                                 std::optional<TargetPoint> center = std::nullopt);

/// Pointwise sum. Variational iff every term is.
PrescribedField sum_field(std::vector<PrescribedField> terms);

/// (nabla_X V)(y) by transported central differences, step 1e-5, one Richardson level.
TangentVector covariant_derivative(const PrescribedField& v, const TargetPoint& y, const TangentVector& x);

struct MuEstimate {
  double sampled = 0.0;
  std::optional<double> analytic;
  std::size_t samples = 0;

  /// The analytic value when known, otherwise the sampled estimate.
  double value() const noexcept { return analytic ? *analytic : sampled; }
  /// Conservative value used to gate flows: the larger of the two.
  double gate() const noexcept { return analytic ? std::max(*analytic, sampled) : sampled; }
};

struct ProbeRegion {
  TargetPoint center;
  double radius = 1.0;
};

/// max(0, -min <nabla_X V, X>) over sampled points y of the probe and unit X at y.
/// The minimum over X is taken exactly from the symmetrized frame matrix at each y.
MuEstimate estimate_mu(const PrescribedField& v, std::size_t samples, std::mt19937_64& rng, const ProbeRegion& probe);

/// max |V(y)| over the probe points; throws on an empty probe.
double sup_norm(const PrescribedField& v, std::span<const TargetPoint> probe);

/// Smallest eigenvalue of a small symmetric matrix (row-major, cyclic Jacobi).
double min_symmetric_eigenvalue(std::vector<double> matrix, int n);

}  // namespace ptf
