#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ptf/calculus.hpp"
#include "ptf/errors.hpp"
#include "support.hpp"

using namespace ptf;
using namespace ptf::test;
using std::numbers::pi;

namespace {

// Smooth random map: normal coordinates are low Fourier modes with seeded amplitudes.
MapField smooth_map(std::shared_ptr<const DomainMesh> mesh, std::shared_ptr<const TargetManifold> target,
                    std::mt19937_64& rng, double amplitude) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = target->dimension();
  std::vector<double> a(static_cast<std::size_t>(4 * n));
  for (double& c : a) c = amplitude * u(rng);
  const double lx = mesh->length(0), ly = mesh->dimension() > 1 ? mesh->length(1) : 1.0;
  return MapField::from_function(mesh, target, [&](DomainPoint x) {
    const double s = x[0] / lx, t = x.size() > 1 ? x[1] / ly : 0.3;
    Coords v(n);
    for (int k = 0; k < n; ++k) {
      const auto b = static_cast<std::size_t>(4 * k);
      v[k] = a[b] * std::sin(2 * pi * s) + a[b + 1] * std::cos(2 * pi * t) + a[b + 2] * s * t + a[b + 3];
    }
    return target->from_normal_coordinates(v);
  });
}

TangentField random_variation(const MapField& f, std::mt19937_64& rng) {
  TangentField w;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.mesh().is_interior(i))
      w.vectors.push_back(f.target().random_tangent(rng, f.point(i), 1.0));
    else
      w.vectors.push_back(f.target().zero_tangent(f.point(i)));
  }
  return w;
}

}  // namespace

TEST_CASE("tension is the negative quadrature gradient of the energy") {
  std::mt19937_64 rng(21);
  const auto mesh = square_mesh(17, 1.0, [](DomainPoint x) { return 0.2 * x[0] - 0.1 * x[1] * x[1]; });
  for (auto target : {share(TargetManifold::euclidean(2)), share(TargetManifold::hyperboloid(2)),
                      share(TargetManifold::hyperboloid(3, 0.6))}) {
    for (int k = 0; k < 5; ++k) {
      const MapField f = smooth_map(mesh, target, rng, 0.8);
      const TangentField w = random_variation(f, rng);
      const double s = 1e-4;
      const double dE = (energy(exp_perturb(f, w, s)) - energy(exp_perturb(f, w, -s))) / (2 * s);
      const double pair = pairing(f, tension_field(f), w);
      CHECK(pair == doctest::Approx(-dE).epsilon(1e-6));
    }
  }
}

TEST_CASE("constant-speed geodesics have zero tension") {
  const auto mesh = interval_mesh(33);
  const auto h = share(TargetManifold::hyperboloid(3));
  const TargetPoint p = h->from_normal_coordinates({0.4, -1.0, 0.2});
  const TargetPoint q = h->from_normal_coordinates({-1.2, 0.5, 0.9});
  const auto f = MapField::from_function(mesh, h, [&](DomainPoint x) { return h->geodesic_point(p, q, x[0]); });
  for (const auto& v : tension_field(f).vectors) CHECK(h->norm(v) < 1e-10);
}

TEST_CASE("Euclidean tension equals the scalar Laplace-Beltrami per component") {
  std::mt19937_64 rng(4);
  const auto mesh = square_mesh(9, 1.0, [](DomainPoint x) { return std::sin(x[0] + 2 * x[1]) * 0.3; });
  const auto e = share(TargetManifold::euclidean(2));
  const MapField f = smooth_map(mesh, e, rng, 1.0);
  const auto tau = tension_field(f);
  for (int k = 0; k < 2; ++k) {
    ScalarField u(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) u[i] = f.point(i).coords[k];
    const auto lap = laplace_beltrami(*mesh, u);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(tau[i].components[k] == doctest::Approx(lap[i]).epsilon(1e-12).scale(1));
  }
}

TEST_CASE("energy and energy density of affine maps") {
  const auto mesh = square_mesh(9, 2.0);
  const auto e = share(TargetManifold::euclidean(1, 1.5));
  const auto f = MapField::from_function(mesh, e, [](DomainPoint x) { return TargetPoint{ChartKind::euclidean, {3 * x[0] - x[1]}}; });
  // 1/2 |grad|^2 * s^2 * area
  CHECK(energy(f) == doctest::Approx(0.5 * 10 * 2.25 * 4).epsilon(1e-12));
  CHECK(integrate(*mesh, energy_density(f)) == doctest::Approx(energy(f)).epsilon(1e-12));
  const auto df = differential(f);
  const std::size_t mid = mesh->index(4, 4);
  CHECK(df.at(mid, 0).components[0] == doctest::Approx(3.0));
  CHECK(df.at(mid, 1).components[0] == doctest::Approx(-1.0));
  const std::size_t corner = mesh->index(0, 0);
  CHECK(df.at(corner, 0).components[0] == doctest::Approx(3.0));
}

TEST_CASE("Hessian norm matches a symbolic oracle on a conformal square") {
  // u = x^2 y + y^3 into R, metric e^{2 phi}, phi = a x + b y: Hess_ab = u_ab - Gamma^c_ab u_c.
  const double a = 0.3, b = -0.2;
  const auto oracle = [&](double x, double y) {
    const double ux = 2 * x * y, uy = x * x + 3 * y * y;
    const double uxx = 2 * y, uxy = 2 * x, uyy = 6 * y;
    const double hxx = uxx - (a * ux - b * uy), hyy = uyy - (-a * ux + b * uy), hxy = uxy - (b * ux + a * uy);
    return (hxx * hxx + hyy * hyy + 2 * hxy * hxy) * std::exp(-4 * (a * x + b * y));
  };
  double prev = 0.0;
  for (int n : {33, 65}) {
    const auto mesh = square_mesh(n, 1.0, [&](DomainPoint x) { return a * x[0] + b * x[1]; });
    const auto e = share(TargetManifold::euclidean(1));
    const auto f = MapField::from_function(mesh, e, [](DomainPoint x) {
      return TargetPoint{ChartKind::euclidean, {x[0] * x[0] * x[1] + x[1] * x[1] * x[1]}};
    });
    const auto hs = hessian_norm_sq(f);
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!mesh->is_interior(i)) continue;
      const auto p = mesh->position(i);
      err = std::max(err, std::abs(hs[i] - oracle(p[0], p[1])));
    }
    if (prev > 0.0) CHECK(std::log2(prev / err) > 1.8);
    prev = err;
  }
}

TEST_CASE("difference energy reductions") {
  std::mt19937_64 rng(8);
  const auto mesh = square_mesh(13);
  SUBCASE("against a constant map it is the energy") {
    const auto h = share(TargetManifold::hyperboloid(2));
    const MapField f = smooth_map(mesh, h, rng, 1.0);
    const MapField c(mesh, h);
    CHECK(difference_energy(f, c) == doctest::Approx(energy(f)).epsilon(1e-12));
    CHECK(std::abs(difference_energy(f, f)) < 1e-20);
  }
  SUBCASE("Euclidean target: energy of the difference") {
    const auto e = share(TargetManifold::euclidean(2));
    const MapField f1 = smooth_map(mesh, e, rng, 1.0), f2 = smooth_map(mesh, e, rng, 1.0);
    MapField d(mesh, e);
    for (std::size_t i = 0; i < d.size(); ++i)
      d.set_point(i, TargetPoint{ChartKind::euclidean, f1.point(i).coords - f2.point(i).coords});
    CHECK(difference_energy(f1, f2) == doctest::Approx(energy(d)).epsilon(1e-12));
  }
}

TEST_CASE("geodesic interpolation copies its endpoints exactly") {
  std::mt19937_64 rng(9);
  const auto mesh = interval_mesh(9);
  const auto h = share(TargetManifold::hyperboloid(2));
  const MapField f0 = smooth_map(mesh, h, rng, 1.0), f1 = smooth_map(mesh, h, rng, 1.0);
  CHECK(geodesic_interpolate(f0, f1, 0.0) == f0);
  CHECK(geodesic_interpolate(f0, f1, 1.0) == f1);
  const auto mid = geodesic_interpolate(f0, f1, 0.5);
  const auto d = distance_field(f0, mid), full = distance_field(f0, f1);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] == doctest::Approx(0.5 * full[i]).scale(1));
}

TEST_CASE("affine torus maps are harmonic with energy 1/2 |P A / L|^2 vol") {
  const auto mesh = torus_mesh({16, 12}, {2.0, 1.5});
  const auto t = share(TargetManifold::flat_torus({1.0, 3.0}));
  const HomotopyDescriptor hom{2, 2, {1, -2, 0, 3}, {0.1, 0.2}};
  const auto f = harmonic_affine_representative(mesh, t, hom);
  for (const auto& v : tension_field(f).vectors) CHECK(t->norm(v) < 1e-12);
  const double p[2] = {1.0, 3.0}, l[2] = {2.0, 1.5};
  double sq = 0.0;
  for (int k = 0; k < 2; ++k)
    for (int a = 0; a < 2; ++a) sq += std::pow(p[k] * hom.at(k, a) / l[a], 2);
  CHECK(energy(f) == doctest::Approx(0.5 * sq * 3.0).epsilon(1e-9));
  CHECK_THROWS_AS(harmonic_affine_representative(square_mesh(5), t, hom), InvalidArgument);
}

TEST_CASE("incompatible maps are rejected") {
  const auto mesh = interval_mesh(5);
  const MapField a(mesh, share(TargetManifold::hyperboloid(2)));
  const MapField b(mesh, share(TargetManifold::euclidean(2)));
  CHECK_THROWS_AS(distance_field(a, b), ChartMismatch);
  const MapField c(interval_mesh(7), share(TargetManifold::hyperboloid(2)));
  CHECK_THROWS_AS(difference_energy(a, c), InvalidArgument);
}
