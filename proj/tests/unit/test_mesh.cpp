#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ptf/errors.hpp"
#include "ptf/mesh.hpp"

using namespace ptf;
using std::numbers::pi;

namespace {

DomainMesh interval(int n, double length, std::function<double(DomainPoint)> phi = {}) {
  return DomainMesh::build({Topology::interval_dirichlet, {n}, {length}, std::move(phi), {}});
}

DomainMesh square(int n, double length, std::function<double(DomainPoint)> phi = {}) {
  return DomainMesh::build({Topology::rectangle_dirichlet, {n, n}, {length, length}, std::move(phi), {}});
}

ScalarField sample(const DomainMesh& mesh, const std::function<double(double, double)>& fn) {
  ScalarField out(mesh.node_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto p = mesh.position(i);
    out[i] = fn(p[0], p[1]);
  }
  return out;
}

double max_interior_error(const DomainMesh& mesh, const ScalarField& a, const ScalarField& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (mesh.is_interior(i)) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

}  // namespace

TEST_CASE("node classification, spacing and quadrature") {
  const auto m = square(5, 2.0);
  CHECK(m.node_count() == 25);
  CHECK(m.interior_count() == 9);
  CHECK(m.spacing(0) == doctest::Approx(0.5));
  double total = 0.0;
  for (double w : m.weights()) total += w;
  CHECK(total == doctest::Approx(4.0));
  CHECK(m.volume() == doctest::Approx(4.0));

  const auto t = DomainMesh::build({Topology::torus_periodic, {8, 4}, {2.0, 1.0}, {}, {}});
  CHECK(t.interior_count() == 32);
  CHECK(t.spacing(0) == doctest::Approx(0.25));
  const auto wrap = t.offset(t.index(7, 0), 1, 0);
  REQUIRE(wrap);
  CHECK(wrap->node == t.index(0, 0));
  CHECK(wrap->wrap[0] == 1);
}

TEST_CASE("first Dirichlet eigenvalue on intervals and squares") {
  SUBCASE("(0, pi)") {
    const auto m = interval(257, pi);
    const auto r = first_dirichlet_eigenvalue(m);
    const double h = m.spacing(0);
    CHECK(r.lambda == doctest::Approx(4 / (h * h) * std::pow(std::sin(h / 2), 2)).epsilon(1e-9));
    CHECK(std::abs(r.lambda - 1.0) < 1e-3);
    double mean = 0.0;
    for (std::size_t i = 0; i < m.node_count(); ++i) mean += m.weight(i) * r.eigenfield[i];
    CHECK(mean > 0.0);
  }
  SUBCASE("(0, 2 pi)") { CHECK(std::abs(first_dirichlet_eigenvalue(interval(257, 2 * pi)).lambda - 0.25) < 1e-3); }
  SUBCASE("(0, pi)^2") {
    const auto m = square(65, pi);
    const double h = m.spacing(0);
    const double exact = 8 / (h * h) * std::pow(std::sin(h / 2), 2);
    const auto r = first_dirichlet_eigenvalue(m);
    CHECK(r.lambda == doctest::Approx(exact).epsilon(1e-8));
    CHECK(std::abs(r.lambda - 2.0) < 5e-3);
  }
}

TEST_CASE("conformal interval eigenvalue matches the arclength reparametrization") {
  // With metric e^{2 phi} dx^2 the interval is isometric to (0, S), S = int e^phi.
  const double a = 0.8;
  const double S = (std::exp(a) - 1) / a;
  double prev_err = 0.0;
  for (int n : {65, 129}) {
    const auto m = interval(n, 1.0, [a](DomainPoint x) { return a * x[0]; });
    const double err = std::abs(first_dirichlet_eigenvalue(m).lambda - pi * pi / (S * S));
    if (prev_err > 0.0) CHECK(std::log2(prev_err / err) > 1.8);
    prev_err = err;
  }
  CHECK(prev_err < 1e-3 * pi * pi / (S * S));
}

TEST_CASE("conformal square eigenvalue agrees with a dense generalized eigensolve") {
  const int n = 9;
  const auto phi = [](DomainPoint x) { return 0.3 * x[0] - 0.2 * x[1] * x[1]; };
  const auto m = square(n, 1.0, phi);
  // Independent assembly: 5-point stencil with edge metric factor 1 (m = 2) and mass h^2 e^{2 phi}.
  std::vector<int> interior;
  std::vector<int> slot(m.node_count(), -1);
  for (std::size_t i = 0; i < m.node_count(); ++i)
    if (m.is_interior(i)) {
      slot[i] = static_cast<int>(interior.size());
      interior.push_back(static_cast<int>(i));
    }
  const auto k = static_cast<Eigen::Index>(interior.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(k, k), M = Eigen::MatrixXd::Zero(k, k);
  const double h = 1.0 / (n - 1);
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto node = static_cast<std::size_t>(interior[static_cast<std::size_t>(r)]);
    const auto idx = m.multi_index(node);
    const auto p = m.position(node);
    const double xy[2] = {p[0], p[1]};
    M(r, r) = h * h * std::exp(2 * phi(DomainPoint(xy, 2)));
    K(r, r) = 4.0;
    for (auto [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      const int s = slot[m.index(idx[0] + di, idx[1] + dj)];
      if (s >= 0) K(r, s) = -1.0;
    }
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(K, M);
  CHECK(first_dirichlet_eigenvalue(m).lambda == doctest::Approx(solver.eigenvalues()(0)).epsilon(1e-8));
}

TEST_CASE("Laplace-Beltrami is second order on flat and conformal metrics") {
  const auto u = [](double x, double y) { return std::sin(2 * x) * std::cos(y) + x * y; };
  const auto lap = [](double x, double y) { return -5 * std::sin(2 * x) * std::cos(y); };
  const auto phi = [](DomainPoint x) { return 0.2 * x[0] * x[1]; };
  for (bool conformal : {false, true}) {
    double prev = 0.0;
    for (int n : {33, 65}) {
      const auto m = square(n, 1.0, conformal ? std::function<double(DomainPoint)>(phi) : nullptr);
      const auto got = laplace_beltrami(m, sample(m, u));
      const auto want = sample(m, [&](double x, double y) {
        return lap(x, y) * (conformal ? std::exp(-0.4 * x * y) : 1.0);
      });
      const double err = max_interior_error(m, got, want);
      if (prev > 0.0) CHECK(std::log2(prev / err) > 1.8);
      prev = err;
    }
  }
}

TEST_CASE("Laplacian is symmetric for the quadrature pairing and matches the Dirichlet integral") {
  const auto m = square(17, 1.3, [](DomainPoint x) { return 0.1 * std::sin(3 * x[0]) + 0.2 * x[1]; });
  const auto u = sample(m, [](double x, double y) { return x * (1.3 - x) * y * (1.3 - y) * std::exp(x); });
  const auto v = sample(m, [](double x, double y) { return std::sin(pi * x / 1.3) * std::sin(2 * pi * y / 1.3); });
  const auto lu = laplace_beltrami(m, u), lv = laplace_beltrami(m, v);
  double a = 0.0, b = 0.0, c = 0.0;
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    a += m.weight(i) * lu[i] * v[i];
    b += m.weight(i) * u[i] * lv[i];
    c += m.weight(i) * lu[i] * u[i];
  }
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
  CHECK(-c == doctest::Approx(dirichlet_integral(m, u)).epsilon(1e-12));
}

TEST_CASE("periodic Laplacian of a Fourier mode") {
  const double L = 2.0;
  const auto m = DomainMesh::build({Topology::torus_periodic, {64}, {L}, {}, {}});
  const auto u = sample(m, [&](double x, double) { return std::sin(2 * pi * x / L); });
  const auto lu = laplace_beltrami(m, u);
  const double h = m.spacing(0);
  const double symbol = 4 / (h * h) * std::pow(std::sin(pi * h / L), 2);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(lu[i] == doctest::Approx(-symbol * u[i]).scale(1));
}

TEST_CASE("Poisson solves reproduce manufactured solutions") {
  double prev = 0.0;
  for (int n : {33, 65}) {
    const auto m = square(n, 1.0);
    const auto exact = sample(m, [](double x, double y) { return std::sin(pi * x) * std::sin(2 * pi * y); });
    const auto rhs = sample(m, [](double x, double y) { return -5 * pi * pi * std::sin(pi * x) * std::sin(2 * pi * y); });
    const auto u = solve_poisson_dirichlet(m, rhs);
    const double err = max_interior_error(m, u, exact);
    if (prev > 0.0) CHECK(std::log2(prev / err) > 1.9);
    prev = err;
  }
  const auto m = interval(41, 2.0);
  const auto g = sample(m, [](double x, double) { return 1.0 + 0.5 * x; });
  const ScalarField zero(m.node_count(), 0.0);
  const auto u = solve_poisson_with_boundary(m, zero, g);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(u[i] == doctest::Approx(g[i]).epsilon(1e-10));
}

TEST_CASE("masked disk: exterior nodes carry no weight and the eigenvalue approaches j01^2") {
  const double j01 = 2.404825557695773;
  const auto disk = [](DomainPoint x) { return std::hypot(x[0] - 1.0, x[1] - 1.0) < 0.9; };
  const auto m = DomainMesh::build({Topology::rectangle_dirichlet, {81, 81}, {2.0, 2.0}, {}, disk});
  CHECK(m.masked());
  for (std::size_t i = 0; i < m.node_count(); ++i)
    if (m.kind(i) == NodeKind::exterior) CHECK(m.weight(i) == 0.0);
  const double lambda = first_dirichlet_eigenvalue(m).lambda;
  CHECK(lambda == doctest::Approx(j01 * j01 / 0.81).epsilon(0.08));
}

TEST_CASE("Ricci bound of conformal metrics") {
  const auto flat = square(9, 1.0);
  CHECK(ricci_bound(flat).bound == 0.0);
  const auto line = interval(9, 1.0, [](DomainPoint x) { return x[0] * x[0]; });
  CHECK(ricci_bound(line).trivially_flat_1d);
  // phi = (x^2 + y^2)/2: Laplacian 2, bound 2 e^{-2 phi} maximal at the origin-nearest interior node.
  const auto m = square(41, 1.0, [](DomainPoint x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); });
  const double h = m.spacing(0);
  CHECK(ricci_bound(m).bound == doctest::Approx(2 * std::exp(-2 * h * h)).epsilon(1e-9));
}

TEST_CASE("mesh validation errors") {
  CHECK_THROWS_AS(interval(2, 1.0), InvalidArgument);
  CHECK_THROWS_AS(DomainMesh::build({Topology::interval_dirichlet, {5}, {-1.0}, {}, {}}), InvalidArgument);
  CHECK_THROWS_AS(
      DomainMesh::build({Topology::torus_periodic, {8}, {1.0}, {}, [](DomainPoint) { return true; }}),
      InvalidArgument);
  CHECK_THROWS_AS(DomainMesh::build({Topology::torus_periodic, {8}, {1.0}, [](DomainPoint x) { return x[0]; }, {}}),
                  InvalidArgument);
  CHECK_THROWS_AS(first_dirichlet_eigenvalue(DomainMesh::build({Topology::torus_periodic, {8}, {1.0}, {}, {}})),
                  InvalidArgument);
  CHECK_THROWS_AS(topology_from_string("sphere"), InvalidArgument);
}

TEST_CASE("field CSV export uses round-trip formatting") {
  const auto m = interval(3, 1.0);
  const ScalarField u{0.1, 1.0 / 3.0, 2.0};
  const std::string names[] = {"u"};
  const ScalarField* fields[] = {&u};
  std::ostringstream out;
  write_fields_csv(out, m, names, fields);
  CHECK(out.str() == "node,x,u\n0,0,0.10000000000000001\n1,0.5,0.33333333333333331\n2,1,2\n");
}
