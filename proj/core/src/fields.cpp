#include "ptf/fields.hpp"

#include <cmath>
#include <limits>

#include "ptf/errors.hpp"

namespace ptf {
namespace {

constexpr double kStep = 1e-5;

void require_target(const std::shared_ptr<const TargetManifold>& target) {
  if (!target) throw InvalidArgument("prescribed field needs a target");
}

// Richardson-extrapolated central difference of a scalar function of t at 0.
double central_derivative(const std::function<double(double)>& g) {
  const auto d = [&](double h) { return (g(h) - g(-h)) / (2 * h); };
  return (4 * d(kStep / 2) - d(kStep)) / 3;
}

}  // namespace

PrescribedField::PrescribedField(std::shared_ptr<const TargetManifold> target, Evaluator evaluator,
                                 std::string description)
    : target_(std::move(target)), evaluator_(std::move(evaluator)), description_(std::move(description)) {
  require_target(target_);
  if (!evaluator_) throw InvalidArgument("prescribed field needs an evaluator");
}

PrescribedField zero_vector_field(std::shared_ptr<const TargetManifold> target) {
  require_target(target);
  auto t = target;
  PrescribedField v(target, [t](DomainPoint, const TargetPoint& y) { return t->zero_tangent(y); }, "zero");
  v.set_potential([](const TargetPoint&) { return 0.0; });
  v.set_analytic_mu(0.0).set_analytic_sup(0.0);
  return v;
}

PrescribedField from_potential(std::shared_ptr<const TargetManifold> target, PrescribedField::Potential phi) {
  require_target(target);
  if (!phi) throw InvalidArgument("empty potential");
  auto t = target;
  auto eval = [t, phi](DomainPoint, const TargetPoint& y) {
    const auto frame = t->orthonormal_frame(y);
    Coords grad(t->ambient_dimension());
    for (const auto& e : frame) {
      const double g = central_derivative([&](double s) {
        return phi(t->exp_map(y, TangentVector{y, e.components * s}));
      });
      grad += g * e.components;
    }
    return t->tangent(y, grad);
  };
  PrescribedField v(target, eval, "gradient of potential");
  v.set_potential(std::move(phi));
  return v;
}

PrescribedField dist_sq_potential(std::shared_ptr<const TargetManifold> target, const TargetPoint& center,
                                  double coefficient) {
  require_target(target);
  if (!target->contains(center)) throw ChartMismatch("potential center is not on the target");
  auto t = target;
  auto eval = [t, center, coefficient](DomainPoint, const TargetPoint& y) {
    TangentVector v = t->log_map(y, center);
    v.components *= -coefficient;
    return v;
  };
  PrescribedField v(target, eval, "distance-squared potential");
  v.set_potential([t, center, coefficient](const TargetPoint& y) {
    const double d = t->dist(y, center);
    return 0.5 * coefficient * d * d;
  });
  if (coefficient >= 0.0)
    v.set_analytic_mu(0.0);
  else if (target->kind() != ChartKind::hyperboloid)
    v.set_analytic_mu(-coefficient);
  return v;
}

PrescribedField linear_field(std::shared_ptr<const TargetManifold> target, std::vector<double> matrix) {
  require_target(target);
  if (target->kind() != ChartKind::euclidean) throw InvalidArgument("linear fields need a Euclidean target");
  const int n = target->dimension();
  if (matrix.size() != static_cast<std::size_t>(n * n))
    throw InvalidArgument("linear field matrix must be n x n for the target dimension");
  auto t = target;
  auto eval = [t, matrix, n](DomainPoint, const TargetPoint& y) {
    Coords c(n);
    for (int r = 0; r < n; ++r)
      for (int k = 0; k < n; ++k) c[r] += matrix[static_cast<std::size_t>(r * n + k)] * y.coords[k];
    return TangentVector{y, c};
  };
  std::vector<double> sym(matrix.size());
  bool symmetric = true;
  for (int r = 0; r < n; ++r)
    for (int k = 0; k < n; ++k) {
      const double a = matrix[static_cast<std::size_t>(r * n + k)], b = matrix[static_cast<std::size_t>(k * n + r)];
      sym[static_cast<std::size_t>(r * n + k)] = 0.5 * (a + b);
      symmetric = symmetric && a == b;
    }
  PrescribedField v(target, eval, "linear");
  v.set_analytic_mu(std::max(0.0, -min_symmetric_eigenvalue(sym, n)));
  if (symmetric) {
    const double s2 = target->metric_scale() * target->metric_scale();
    v.set_potential([matrix, n, s2](const TargetPoint& y) {
      double q = 0.0;
      for (int r = 0; r < n; ++r)
        for (int k = 0; k < n; ++k) q += y.coords[r] * matrix[static_cast<std::size_t>(r * n + k)] * y.coords[k];
      return 0.5 * s2 * q;
    });
  }
  return v;
}

PrescribedField rotational_field(std::shared_ptr<const TargetManifold> target, double strength,
                                 std::optional<TargetPoint> center) {
  require_target(target);
  if (target->dimension() != 2) throw InvalidArgument("rotational fields need a two-dimensional target");
  const TargetPoint o = center ? *center : target->origin();
  if (!target->contains(o)) throw ChartMismatch("rotation center is not on the target");
  auto t = target;
  auto eval = [t, o, strength](DomainPoint, const TargetPoint& y) {
    TangentVector radial = t->log_map(y, o);
    radial.components *= -1.0;
    const Coords c = t->frame_components(radial);
    return t->from_frame_components(y, Coords{-strength * c[1], strength * c[0]});
  };
  PrescribedField v(target, eval, "rotational");
  if (target->kind() != ChartKind::hyperboloid) v.set_analytic_mu(0.0);
  return v;
}

PrescribedField sum_field(std::vector<PrescribedField> terms) {
  if (terms.empty()) throw InvalidArgument("sum of no fields");
  const auto target = terms.front().target_ptr();
  for (const auto& term : terms)
    if (!(term.target() == *target)) throw InvalidArgument("summed fields must share a target");
  auto eval = [terms](DomainPoint x, const TargetPoint& y) {
    TangentVector v = terms.front()(x, y);
    for (std::size_t k = 1; k < terms.size(); ++k) v.components += terms[k](x, y).components;
    return v;
  };
  std::string description;
  bool variational = true;
  for (const auto& term : terms) {
    if (!description.empty()) description += " + ";
    description += term.description();
    variational = variational && term.variational();
  }
  PrescribedField v(target, eval, description);
  if (variational) {
    std::vector<PrescribedField::Potential> potentials;
    for (const auto& term : terms) potentials.push_back(term.potential());
    v.set_potential([potentials](const TargetPoint& y) {
      double s = 0.0;
      for (const auto& p : potentials) s += p(y);
      return s;
    });
  }
  return v;
}

TangentVector covariant_derivative(const PrescribedField& v, const TargetPoint& y, const TangentVector& x) {
  const auto& t = v.target();
  const auto d = [&](double h) {
    const TargetPoint plus = t.exp_map(y, TangentVector{y, x.components * h});
    const TargetPoint minus = t.exp_map(y, TangentVector{y, x.components * -h});
    const TangentVector vp = t.parallel_transport(plus, y, v.at(plus));
    const TangentVector vm = t.parallel_transport(minus, y, v.at(minus));
    return (vp.components - vm.components) * (1.0 / (2 * h));
  };
  return t.tangent(y, (4.0 * d(kStep / 2) - d(kStep)) * (1.0 / 3.0));
}

MuEstimate estimate_mu(const PrescribedField& v, std::size_t samples, std::mt19937_64& rng,
                       const ProbeRegion& probe) {
  const auto& t = v.target();
  const int n = t.dimension();
  double lowest = std::numeric_limits<double>::infinity();
  std::vector<double> s(static_cast<std::size_t>(n * n));
  for (std::size_t k = 0; k < samples; ++k) {
    const TargetPoint y = t.random_point(rng, probe.center, probe.radius);
    const auto frame = t.orthonormal_frame(y);
    std::vector<TangentVector> derivs;
    derivs.reserve(frame.size());
    for (const auto& e : frame) derivs.push_back(covariant_derivative(v, y, e));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        s[static_cast<std::size_t>(i * n + j)] =
            0.5 * (t.inner(derivs[static_cast<std::size_t>(i)], frame[static_cast<std::size_t>(j)]) +
                   t.inner(derivs[static_cast<std::size_t>(j)], frame[static_cast<std::size_t>(i)]));
    lowest = std::min(lowest, min_symmetric_eigenvalue(s, n));
  }
  MuEstimate out;
  out.samples = samples;
  out.sampled = samples == 0 ? 0.0 : std::max(0.0, -lowest);
  out.analytic = v.analytic_mu();
  return out;
}

double sup_norm(const PrescribedField& v, std::span<const TargetPoint> probe) {
  if (probe.empty()) throw InvalidArgument("sup norm over an empty probe");
  double m = 0.0;
  for (const auto& y : probe) m = std::max(m, v.target().norm(v.at(y)));
  return m;
}

double min_symmetric_eigenvalue(std::vector<double> a, int n) {
  if (n <= 0 || a.size() != static_cast<std::size_t>(n * n)) throw InvalidArgument("matrix size mismatch");
  const auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i * n + j)]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (int i = 0; i < n; ++i) {
      diag += at(i, i) * at(i, i);
      for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    }
    if (off <= 1e-30 * std::max(diag, 1e-300)) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (at(p, q) == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2 * at(p, q));
        const double tan = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(tan * tan + 1), s = tan * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  double m = at(0, 0);
  for (int i = 1; i < n; ++i) m = std::min(m, at(i, i));
  return m;
}

}  // namespace ptf
