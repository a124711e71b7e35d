#include "ptf/geometry.hpp"

#include <cmath>
#include <numbers>

#include "ptf/errors.hpp"

namespace ptf {
namespace {

// sinh(x)/x, accurate near 0.
double sinhc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 + x * x / 6.0;
  return std::sinh(x) / x;
}

// x/sinh(x), accurate near 0.
double inv_sinhc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return x / std::sinh(x);
}

Coords unit_axis(int size, int axis) {
  Coords e(size);
  e[axis] = 1.0;
  return e;
}

// Unit-model hyperbolic distance; exactly symmetric in (p, q).
double hyperbolic_distance(const Coords& p, const Coords& q) {
  const Coords diff = q - p;
  const double chord_sq = std::max(minkowski(diff, diff), 0.0);
  return 2.0 * std::asinh(0.5 * std::sqrt(chord_sq));
}

}  // namespace

double minkowski(const Coords& x, const Coords& y) noexcept {
  double s = -x[0] * y[0];
  for (int i = 1; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

std::string_view to_string(ChartKind kind) {
  switch (kind) {
    case ChartKind::euclidean: return "euclidean";
    case ChartKind::hyperboloid: return "hyperboloid";
    case ChartKind::flat_torus: return "flat_torus";
  }
  return "unknown";
}

ChartKind chart_kind_from_string(std::string_view name) {
  if (name == "euclidean") return ChartKind::euclidean;
  if (name == "hyperboloid") return ChartKind::hyperboloid;
  if (name == "flat_torus") return ChartKind::flat_torus;
  throw InvalidArgument("unknown target kind '" + std::string(name) + "'");
}

TargetManifold::TargetManifold(ChartKind kind, int dimension, std::vector<double> periods, double scale)
    : kind_(kind), dimension_(dimension), periods_(std::move(periods)), scale_(scale) {
  if (dimension < 1 || ambient_dimension() > kMaxAmbient)
    throw InvalidArgument("target dimension must be in [1, " + std::to_string(kMaxAmbient - 1) + "]");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("metric scale must be positive");
}

TargetManifold TargetManifold::euclidean(int dimension, double metric_scale) {
  return TargetManifold(ChartKind::euclidean, dimension, {}, metric_scale);
}

TargetManifold TargetManifold::hyperboloid(int dimension, double metric_scale) {
  return TargetManifold(ChartKind::hyperboloid, dimension, {}, metric_scale);
}

TargetManifold TargetManifold::flat_torus(std::vector<double> periods, double metric_scale) {
  if (periods.empty()) throw InvalidArgument("flat torus needs at least one period");
  for (double p : periods)
    if (!(p > 0.0) || !std::isfinite(p)) throw InvalidArgument("torus periods must be positive");
  const int n = static_cast<int>(periods.size());
  return TargetManifold(ChartKind::flat_torus, n, std::move(periods), metric_scale);
}

TargetManifold TargetManifold::rescaled(double s) const {
  TargetManifold copy = *this;
  if (!(s > 0.0)) throw InvalidArgument("rescaling factor must be positive");
  copy.scale_ = scale_ * s;
  return copy;
}

void TargetManifold::check_point(const TargetPoint& p) const {
  if (p.chart != kind_ || p.coords.size() != ambient_dimension())
    throw ChartMismatch("point does not belong to the " + std::string(to_string(kind_)) + " chart of dimension " +
                        std::to_string(dimension_));
  if (kind_ == ChartKind::hyperboloid) {
    const double x0 = p.coords[0];
    if (!(x0 > 0.0) || std::abs(minkowski(p.coords, p.coords) + 1.0) > 1e-6 * std::max(1.0, x0 * x0))
      throw ChartMismatch("point is off the hyperboloid");
  }
}

void TargetManifold::check_tangent(const TargetPoint& p, const TangentVector& v) const {
  check_point(p);
  if (v.base.chart != kind_ || v.components.size() != ambient_dimension())
    throw ChartMismatch("tangent vector does not belong to the " + std::string(to_string(kind_)) + " chart");
}

TargetPoint TargetManifold::origin() const {
  TargetPoint o{kind_, Coords(ambient_dimension())};
  if (kind_ == ChartKind::hyperboloid) o.coords[0] = 1.0;
  return o;
}

TargetPoint TargetManifold::from_normal_coordinates(const Coords& v) const {
  if (v.size() != dimension_) throw InvalidArgument("normal coordinates must have the target dimension");
  const TargetPoint o = origin();
  return exp_map(o, from_frame_components(o, v));
}

Coords TargetManifold::normal_coordinates(const TargetPoint& p) const {
  return frame_components(log_map(origin(), p));
}

bool TargetManifold::contains(const TargetPoint& p, double tol) const {
  if (p.chart != kind_ || p.coords.size() != ambient_dimension() || !p.coords.all_finite()) return false;
  if (kind_ != ChartKind::hyperboloid) return true;
  return p.coords[0] > 0.0 && std::abs(minkowski(p.coords, p.coords) + 1.0) <= tol * std::max(1.0, p.coords[0] * p.coords[0]);
}

TargetPoint TargetManifold::project(TargetPoint p) const {
  check_point(p);
  if (kind_ == ChartKind::hyperboloid) {
    double s = 1.0;
    for (int i = 1; i < p.coords.size(); ++i) s += p.coords[i] * p.coords[i];
    p.coords[0] = std::sqrt(s);
  }
  return p;
}

TangentVector TargetManifold::tangent(const TargetPoint& p, const Coords& ambient) const {
  check_point(p);
  if (ambient.size() != ambient_dimension()) throw ChartMismatch("tangent components have the wrong ambient size");
  TangentVector v{p, ambient};
  if (kind_ == ChartKind::hyperboloid) v.components += minkowski(ambient, p.coords) * p.coords;
  return v;
}

TangentVector TargetManifold::zero_tangent(const TargetPoint& p) const {
  check_point(p);
  return {p, Coords(ambient_dimension())};
}

bool TargetManifold::is_tangent(const TangentVector& v, double tol) const {
  if (v.base.chart != kind_ || v.components.size() != ambient_dimension()) return false;
  if (kind_ != ChartKind::hyperboloid) return true;
  const double scale = std::max(1.0, v.base.coords.max_abs() * v.components.max_abs());
  return std::abs(minkowski(v.base.coords, v.components)) <= tol * scale;
}

double TargetManifold::inner_components(const Coords& u, const Coords& w) const {
  const double unit = kind_ == ChartKind::hyperboloid ? minkowski(u, w) : u.dot(w);
  return scale_ * scale_ * unit;
}

double TargetManifold::inner(const TangentVector& u, const TangentVector& w) const {
  if (u.base.chart != kind_ || w.base.chart != kind_) throw ChartMismatch("inner product across charts");
  return inner_components(u.components, w.components);
}

double TargetManifold::norm(const TangentVector& v) const { return std::sqrt(std::max(inner(v, v), 0.0)); }

TargetPoint TargetManifold::exp_map(const TargetPoint& p, const TangentVector& v) const {
  check_tangent(p, v);
  if (kind_ != ChartKind::hyperboloid) return {kind_, p.coords + v.components};
  const double speed = std::sqrt(std::max(minkowski(v.components, v.components), 0.0));
  TargetPoint q{kind_, std::cosh(speed) * p.coords + sinhc(speed) * v.components};
  return project(q);
}

TangentVector TargetManifold::log_map(const TargetPoint& p, const TargetPoint& q) const {
  check_point(p);
  check_point(q);
  if (kind_ != ChartKind::hyperboloid) return {p, q.coords - p.coords};
  const double d = hyperbolic_distance(p.coords, q.coords);
  const Coords u = q.coords + minkowski(p.coords, q.coords) * p.coords;
  return tangent(p, inv_sinhc(d) * u);
}

double TargetManifold::dist(const TargetPoint& p, const TargetPoint& q) const {
  check_point(p);
  check_point(q);
  if (kind_ != ChartKind::hyperboloid) return scale_ * (q.coords - p.coords).norm();
  return scale_ * hyperbolic_distance(p.coords, q.coords);
}

TangentVector TargetManifold::parallel_transport(const TargetPoint& p, const TargetPoint& q,
                                                 const TangentVector& v) const {
  check_tangent(p, v);
  check_point(q);
  if (kind_ != ChartKind::hyperboloid) return {q, v.components};
  const double denom = 1.0 - minkowski(p.coords, q.coords);
  const Coords moved = v.components + (minkowski(q.coords, v.components) / denom) * (p.coords + q.coords);
  return tangent(q, moved);
}

double TargetManifold::sectional_curvature(const TargetPoint& p, const TangentVector& u,
                                           const TangentVector& w) const {
  check_tangent(p, u);
  check_tangent(p, w);
  const double uu = inner(u, u), ww = inner(w, w), uw = inner(u, w);
  const double area_sq = uu * ww - uw * uw;
  if (!(area_sq >= 1e-24)) throw InvalidArgument("sectional curvature of a degenerate plane");
  if (kind_ == ChartKind::hyperboloid) return -1.0 / (scale_ * scale_);
  return 0.0;
}

TargetPoint TargetManifold::geodesic_point(const TargetPoint& p, const TargetPoint& q, double t, bool strict) const {
  if (strict && (t < 0.0 || t > 1.0)) throw InvalidArgument("geodesic parameter outside [0,1] in strict mode");
  if (t == 0.0 || t == 1.0) {
    check_point(p);
    check_point(q);
    return t == 0.0 ? p : q;
  }
  TangentVector v = log_map(p, q);
  v.components *= t;
  return exp_map(p, v);
}

std::vector<TangentVector> TargetManifold::orthonormal_frame(const TargetPoint& p) const {
  check_point(p);
  const int amb = ambient_dimension();
  const int offset = kind_ == ChartKind::hyperboloid ? 1 : 0;
  std::vector<TangentVector> frame;
  frame.reserve(static_cast<std::size_t>(dimension_));
  for (int i = 0; i < dimension_; ++i) {
    TangentVector e = tangent(p, unit_axis(amb, i + offset));
    for (const auto& prev : frame) e.components -= inner(e, prev) * prev.components;
    e.components *= 1.0 / norm(e);
    frame.push_back(e);
  }
  return frame;
}

Coords TargetManifold::frame_components(const TangentVector& v) const {
  const auto frame = orthonormal_frame(v.base);
  Coords c(dimension_);
  for (int i = 0; i < dimension_; ++i) c[i] = inner(v, frame[static_cast<std::size_t>(i)]);
  return c;
}

TangentVector TargetManifold::from_frame_components(const TargetPoint& p, const Coords& c) const {
  if (c.size() != dimension_) throw InvalidArgument("frame components must have the target dimension");
  const auto frame = orthonormal_frame(p);
  TangentVector v = zero_tangent(p);
  for (int i = 0; i < dimension_; ++i) v.components += c[i] * frame[static_cast<std::size_t>(i)].components;
  return v;
}

double TargetManifold::quotient_dist(const TargetPoint& p, const TargetPoint& q) const {
  if (kind_ != ChartKind::flat_torus) return dist(p, q);
  check_point(p);
  check_point(q);
  Coords d = q.coords - p.coords;
  for (int i = 0; i < d.size(); ++i) {
    const double L = periods_[static_cast<std::size_t>(i)];
    d[i] -= L * std::round(d[i] / L);
  }
  return scale_ * d.norm();
}

TargetPoint TargetManifold::random_point(std::mt19937_64& rng, const TargetPoint& center, double radius) const {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double r = radius * std::pow(uniform(rng), 1.0 / dimension_);
  return exp_map(center, random_tangent(rng, center, r));
}

TangentVector TargetManifold::random_tangent(std::mt19937_64& rng, const TargetPoint& p, double length) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Coords c(dimension_);
  double n2 = 0.0;
  while (n2 < 1e-20) {
    for (int i = 0; i < dimension_; ++i) c[i] = normal(rng);
    n2 = c.dot(c);
  }
  c *= length / std::sqrt(n2);
  return from_frame_components(p, c);
}

}  // namespace ptf
