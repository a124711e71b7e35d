#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ptf/errors.hpp"
#include "ptf/geometry.hpp"

using namespace ptf;

namespace {

// Fourth-order Runge-Kutta on the hyperboloid geodesic equation x'' = <x', x'> x.
TargetPoint rk4_hyperboloid_geodesic(const TargetPoint& p, const Coords& v, int steps) {
  Coords x = p.coords, u = v;
  const double h = 1.0 / steps;
  auto accel = [](const Coords& pos, const Coords& vel) { return minkowski(vel, vel) * pos; };
  for (int k = 0; k < steps; ++k) {
    const Coords k1x = u, k1u = accel(x, u);
    const Coords k2x = u + 0.5 * h * k1u, k2u = accel(x + 0.5 * h * k1x, u + 0.5 * h * k1u);
    const Coords k3x = u + 0.5 * h * k2u, k3u = accel(x + 0.5 * h * k2x, u + 0.5 * h * k2u);
    const Coords k4x = u + h * k3u, k4u = accel(x + h * k3x, u + h * k3u);
    x += (h / 6) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    u += (h / 6) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  }
  return {ChartKind::hyperboloid, x};
}

// Schild's ladder transport of v from p to q along the geodesic, with n rungs.
TangentVector schild_transport(const TargetManifold& m, const TargetPoint& p, const TargetPoint& q,
                               const TangentVector& v, int rungs) {
  // The ladder is only consistent for short rungs, so transport a scaled-down copy.
  const double shrink = 1.0 / rungs;
  TargetPoint a = p;
  TangentVector w{p, v.components * shrink};
  for (int k = 1; k <= rungs; ++k) {
    const TargetPoint b = m.geodesic_point(p, q, static_cast<double>(k) / rungs);
    const TargetPoint tip = m.exp_map(a, w);
    const TargetPoint mid = m.geodesic_point(b, tip, 0.5);
    const TargetPoint far = m.geodesic_point(a, mid, 2.0);
    w = m.log_map(b, far);
    a = b;
  }
  w.components *= 1.0 / shrink;
  return w;
}

std::vector<TargetManifold> all_targets() {
  return {TargetManifold::euclidean(3), TargetManifold::hyperboloid(2), TargetManifold::hyperboloid(3, 0.7),
          TargetManifold::flat_torus({1.0, 2.0}), TargetManifold::euclidean(2, 2.5)};
}

}  // namespace

TEST_CASE("exp and log are inverse and distances match log norms") {
  std::mt19937_64 rng(7);
  for (const auto& m : all_targets()) {
    for (int k = 0; k < 50; ++k) {
      const TargetPoint p = m.random_point(rng, m.origin(), 2.0);
      const TargetPoint q = m.random_point(rng, m.origin(), 2.0);
      const TangentVector v = m.log_map(p, q);
      CHECK(m.is_tangent(v));
      const TargetPoint back = m.exp_map(p, v);
      CHECK(m.dist(back, q) < 1e-10);
      CHECK(m.norm(v) == doctest::Approx(m.dist(p, q)).epsilon(1e-10));
      CHECK(m.dist(p, q) == m.dist(q, p));
    }
  }
}

TEST_CASE("hyperboloid exp agrees with an RK4 geodesic integration") {
  const auto m = TargetManifold::hyperboloid(3);
  std::mt19937_64 rng(11);
  for (int k = 0; k < 10; ++k) {
    const TargetPoint p = m.random_point(rng, m.origin(), 1.5);
    const TangentVector v = m.random_tangent(rng, p, 1.2);
    const TargetPoint expected = rk4_hyperboloid_geodesic(p, v.components, 2000);
    const TargetPoint got = m.exp_map(p, v);
    for (int i = 0; i < 4; ++i) CHECK(got.coords[i] == doctest::Approx(expected.coords[i]).epsilon(1e-9));
  }
}

TEST_CASE("parallel transport matches Schild's ladder and is an isometry") {
  std::mt19937_64 rng(3);
  for (const auto& m : all_targets()) {
    for (int k = 0; k < 5; ++k) {
      const TargetPoint p = m.random_point(rng, m.origin(), 1.0);
      const TargetPoint q = m.random_point(rng, m.origin(), 1.0);
      const TangentVector v = m.random_tangent(rng, p, 0.3);
      const TangentVector w = m.random_tangent(rng, p, 0.5);
      const TangentVector pv = m.parallel_transport(p, q, v);
      const TangentVector pw = m.parallel_transport(p, q, w);
      CHECK(m.is_tangent(pv));
      CHECK(m.inner(pv, pw) == doctest::Approx(m.inner(v, w)).epsilon(1e-11));
      const TangentVector ladder = schild_transport(m, p, q, v, 400);
      const TangentVector diff{q, pv.components - ladder.components};
      CHECK(m.norm(diff) < 2e-3 * m.norm(v));
    }
  }
}

TEST_CASE("sectional curvature agrees with the small-circle circumference defect") {
  for (double scale : {1.0, 0.5, 2.0}) {
    const auto m = TargetManifold::hyperboloid(3, scale);
    std::mt19937_64 rng(5);
    const TargetPoint p = m.random_point(rng, m.origin(), 0.8);
    const auto frame = m.orthonormal_frame(p);
    const double r = 0.02;
    const int n = 4000;
    double circumference = 0.0;
    TargetPoint prev{};
    for (int k = 0; k <= n; ++k) {
      const double th = 2 * std::numbers::pi * k / n;
      const TangentVector dir{p, frame[0].components * std::cos(th) + frame[2].components * std::sin(th)};
      const TargetPoint pt = m.exp_map(p, TangentVector{p, dir.components * r});
      if (k > 0) circumference += m.dist(prev, pt);
      prev = pt;
    }
    const double k_est = 3 * (2 * std::numbers::pi * r - circumference) / (std::numbers::pi * r * r * r);
    CHECK(m.sectional_curvature(p, frame[0], frame[2]) == doctest::Approx(-1 / (scale * scale)));
    CHECK(k_est == doctest::Approx(-1 / (scale * scale)).epsilon(2e-3));
  }
  const auto flat = TargetManifold::euclidean(2);
  const auto f = flat.orthonormal_frame(flat.origin());
  CHECK(flat.sectional_curvature(flat.origin(), f[0], f[1]) == 0.0);
  CHECK_THROWS_AS(flat.sectional_curvature(flat.origin(), f[0], f[0]), InvalidArgument);
}

TEST_CASE("triangle inequality and geodesic midpoints") {
  std::mt19937_64 rng(13);
  for (const auto& m : all_targets()) {
    for (int k = 0; k < 100; ++k) {
      const TargetPoint a = m.random_point(rng, m.origin(), 3.0);
      const TargetPoint b = m.random_point(rng, m.origin(), 3.0);
      const TargetPoint c = m.random_point(rng, m.origin(), 3.0);
      CHECK(m.dist(a, c) <= m.dist(a, b) + m.dist(b, c) + 1e-12);
      const TargetPoint mid = m.geodesic_point(a, c, 0.5);
      CHECK(m.dist(a, mid) == doctest::Approx(0.5 * m.dist(a, c)).epsilon(1e-9).scale(1));
    }
  }
}

TEST_CASE("geodesic_point endpoints are exact and strict mode rejects extrapolation") {
  const auto m = TargetManifold::hyperboloid(2);
  const TargetPoint p = m.from_normal_coordinates({0.3, -0.2});
  const TargetPoint q = m.from_normal_coordinates({-1.0, 0.7});
  CHECK(m.geodesic_point(p, q, 0.0) == p);
  CHECK(m.geodesic_point(p, q, 1.0) == q);
  CHECK_THROWS_AS(m.geodesic_point(p, q, 1.5, true), InvalidArgument);
  CHECK_NOTHROW(m.geodesic_point(p, q, 1.5));
}

TEST_CASE("normal coordinates round trip") {
  for (const auto& m : all_targets()) {
    Coords v(m.dimension());
    for (int i = 0; i < m.dimension(); ++i) v[i] = 0.1 * (i + 1) - 0.15;
    const Coords back = m.normal_coordinates(m.from_normal_coordinates(v));
    for (int i = 0; i < m.dimension(); ++i) CHECK(back[i] == doctest::Approx(v[i]).epsilon(1e-12));
  }
}

TEST_CASE("metric rescaling scales distances and norms") {
  const auto m = TargetManifold::hyperboloid(2);
  const auto s = m.rescaled(3.0);
  const TargetPoint p = m.from_normal_coordinates({0.5, 0.1});
  const TargetPoint q = m.from_normal_coordinates({-0.4, 1.0});
  CHECK(s.dist(p, q) == doctest::Approx(3.0 * m.dist(p, q)).epsilon(1e-13));
  CHECK(s.norm(s.log_map(p, q)) == doctest::Approx(3.0 * m.norm(m.log_map(p, q))).epsilon(1e-13));
}

TEST_CASE("flat torus quotient distance reduces lifts modulo the lattice") {
  const auto t = TargetManifold::flat_torus({1.0, 2.0});
  const TargetPoint p{ChartKind::flat_torus, {0.1, 0.1}};
  const TargetPoint q{ChartKind::flat_torus, {3.05, -1.8}};
  CHECK(t.dist(p, q) == doctest::Approx(std::hypot(2.95, 1.9)));
  CHECK(t.quotient_dist(p, q) == doctest::Approx(std::hypot(0.05, 0.1)));
}

TEST_CASE("chart mismatches are typed errors") {
  const auto h = TargetManifold::hyperboloid(2);
  const auto e = TargetManifold::euclidean(2);
  CHECK_THROWS_AS(h.dist(h.origin(), e.origin()), ChartMismatch);
  const TargetPoint off{ChartKind::hyperboloid, {2.0, 0.0, 0.0}};
  CHECK_FALSE(h.contains(off));
  CHECK_THROWS_AS(h.log_map(h.origin(), off), ChartMismatch);
  CHECK_THROWS_AS(chart_kind_from_string("sphere"), InvalidArgument);
}

TEST_CASE("orthonormal frames are orthonormal and positively oriented in 2-D") {
  std::mt19937_64 rng(17);
  for (const auto& m : all_targets()) {
    const TargetPoint p = m.random_point(rng, m.origin(), 1.5);
    const auto frame = m.orthonormal_frame(p);
    REQUIRE(frame.size() == static_cast<std::size_t>(m.dimension()));
    for (std::size_t i = 0; i < frame.size(); ++i)
      for (std::size_t j = 0; j < frame.size(); ++j)
        CHECK(m.inner(frame[i], frame[j]) == doctest::Approx(i == j ? 1.0 : 0.0).scale(1));
    const TangentVector v = m.random_tangent(rng, p, 0.7);
    const TangentVector back = m.from_frame_components(p, m.frame_components(v));
    for (int i = 0; i < v.components.size(); ++i)
      CHECK(back.components[i] == doctest::Approx(v.components[i]).scale(1));
  }
}
