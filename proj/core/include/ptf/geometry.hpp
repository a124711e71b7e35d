#pragma once

#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ptf/coords.hpp"

namespace ptf {

enum class ChartKind { euclidean, hyperboloid, flat_torus };

std::string_view to_string(ChartKind kind);
/// Throws InvalidArgument for unknown names.
ChartKind chart_kind_from_string(std::string_view name);

/// A point of the target. Hyperboloid points use ambient Minkowski coordinates
/// (x0 > 0, <x,x> = -1); flat-torus points are lifts to the universal cover.
struct TargetPoint {
  ChartKind chart = ChartKind::euclidean;
  Coords coords;

  friend bool operator==(const TargetPoint&, const TargetPoint&) = default;
};

/// A tangent vector, stored in the same ambient chart as its base point.
struct TangentVector {
  TargetPoint base;
  Coords components;
};

/// Closed-form Riemannian geometry of a nonpositively curved target.
///
/// All charts carry an optional metric scale s: the metric is s^2 times the
/// unit model, so distances scale by s and sectional curvature by 1/s^2.
/// Geodesics (as sets and parametrizations in chart coordinates) do not
/// depend on s.
///
/// Every member function is const and thread-safe.
class TargetManifold {
 public:
  static TargetManifold euclidean(int dimension, double metric_scale = 1.0);
  static TargetManifold hyperboloid(int dimension, double metric_scale = 1.0);
  static TargetManifold flat_torus(std::vector<double> periods, double metric_scale = 1.0);

  ChartKind kind() const noexcept { return kind_; }
  int dimension() const noexcept { return dimension_; }
  int ambient_dimension() const noexcept { return kind_ == ChartKind::hyperboloid ? dimension_ + 1 : dimension_; }
  const std::vector<double>& periods() const noexcept { return periods_; }
  double metric_scale() const noexcept { return scale_; }
  /// Same manifold with the metric multiplied by s^2.
  TargetManifold rescaled(double s) const;

  /// Base point: the origin of R^n, the hyperboloid vertex (1,0,...,0), or the zero lift.
  TargetPoint origin() const;
  /// exp at the origin of the tangent vector with the given frame components.
  TargetPoint from_normal_coordinates(const Coords& v) const;
  /// Frame components of log_origin(p); inverse of from_normal_coordinates.
  Coords normal_coordinates(const TargetPoint& p) const;

  bool contains(const TargetPoint& p, double tol = 1e-9) const;
  /// Re-projects onto the chart constraint (hyperboloid only; identity otherwise).
  TargetPoint project(TargetPoint p) const;
  /// Projects arbitrary ambient components onto T_p.
  TangentVector tangent(const TargetPoint& p, const Coords& ambient) const;
  TangentVector zero_tangent(const TargetPoint& p) const;
  bool is_tangent(const TangentVector& v, double tol = 1e-9) const;

  double inner(const TangentVector& u, const TangentVector& w) const;
  double norm(const TangentVector& v) const;
  /// Inner product of two ambient component vectors at an (implied) common base.
  double inner_components(const Coords& u, const Coords& w) const;

  TargetPoint exp_map(const TargetPoint& p, const TangentVector& v) const;
  TangentVector log_map(const TargetPoint& p, const TargetPoint& q) const;
  double dist(const TargetPoint& p, const TargetPoint& q) const;
  TangentVector parallel_transport(const TargetPoint& p, const TargetPoint& q, const TangentVector& v) const;
  double sectional_curvature(const TargetPoint& p, const TangentVector& u, const TangentVector& w) const;
  /// exp_p(t log_p q). With strict = true, t outside [0,1] throws.
  TargetPoint geodesic_point(const TargetPoint& p, const TargetPoint& q, double t, bool strict = false) const;

  /// Orthonormal basis of T_p (continuous in p, positively oriented for n = 2).
  std::vector<TangentVector> orthonormal_frame(const TargetPoint& p) const;
  /// Components of v in orthonormal_frame(p).
  Coords frame_components(const TangentVector& v) const;
  TangentVector from_frame_components(const TargetPoint& p, const Coords& c) const;

  /// Distance in the torus quotient: minimum over lattice translates. Equals dist() otherwise.
  double quotient_dist(const TargetPoint& p, const TargetPoint& q) const;

  /// Point exp_center(v) with |v| uniform in radius^n-measure inside the ball.
  TargetPoint random_point(std::mt19937_64& rng, const TargetPoint& center, double radius) const;
  /// Tangent vector at p with isotropic direction and norm `length`.
  TangentVector random_tangent(std::mt19937_64& rng, const TargetPoint& p, double length) const;

  friend bool operator==(const TargetManifold&, const TargetManifold&) = default;

 private:
  TargetManifold(ChartKind kind, int dimension, std::vector<double> periods, double scale);
  void check_point(const TargetPoint& p) const;
  void check_tangent(const TargetPoint& p, const TangentVector& v) const;

  ChartKind kind_ = ChartKind::euclidean;
  int dimension_ = 0;
  std::vector<double> periods_;
  double scale_ = 1.0;
};

/// Minkowski product -x0 y0 + sum_i xi yi.
double minkowski(const Coords& x, const Coords& y) noexcept;

}  // namespace ptf
