#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "ptf/errors.hpp"
#include "ptf/estimates.hpp"
#include "support.hpp"

using namespace ptf;
using namespace ptf::test;
using std::numbers::pi;

namespace {

MapField euclidean_map(const std::shared_ptr<const DomainMesh>& mesh, const std::shared_ptr<const TargetManifold>& e,
                       double (*fn)(double, double)) {
  return MapField::from_function(mesh, e, [&](DomainPoint x) {
    return TargetPoint{ChartKind::euclidean, {fn(x[0], x.size() > 1 ? x[1] : 0.0)}};
  });
}

}  // namespace

TEST_CASE("discrete comparison inequalities hold exactly on random scenarios") {
  const auto h = share(TargetManifold::hyperboloid(2));
  ScenarioFamily fam("square-h2", square_mesh(17), h, {}, 0.4, 21);
  for (int k = 0; k < 8; ++k) {
    const MapField f1 = fam.sample(), f2 = fam.sample(), f3 = fam.sample();
    CHECK(check_energy_triangle(f1, f2, "s").slack >= -1e-12);
    CHECK(check_distance_subharmonic(f1, f2, "s").slack >= -1e-9);
    CHECK(check_geodesic_energy_convexity(f1, f2, "s").pass);
    // Boundary values agree across the family.
    for (std::size_t i = 0; i < f1.size(); ++i)
      if (!f1.mesh().is_interior(i)) CHECK(f1.point(i) == f2.point(i));
    (void)f3;
  }
}

TEST_CASE("difference triangle is exact on flat targets") {
  const auto e = share(TargetManifold::euclidean(2));
  ScenarioFamily fam("square-e2", square_mesh(13), e, {}, 0.5, 4);
  for (int k = 0; k < 5; ++k) {
    const MapField f1 = fam.sample(), f2 = fam.sample(), f3 = fam.sample();
    const auto r = check_difference_triangle(f1, f2, f3, "s");
    CHECK(r.required);
    CHECK(r.slack >= -1e-12);
  }
  const auto h = share(TargetManifold::hyperboloid(2));
  ScenarioFamily curved("square-h2", square_mesh(9), h, {}, 0.5, 4);
  const auto r = check_difference_triangle(curved.sample(), curved.sample(), curved.sample(), "s");
  CHECK_FALSE(r.required);
}

TEST_CASE("Euclidean single mode matches the spectral predictions") {
  // f1 harmonic (affine), f2 = f1 + a sin(pi x) sin(pi y): both bounds are ratios of the same Rayleigh quotient.
  const auto mesh = square_mesh(49);
  const auto e = share(TargetManifold::euclidean(1));
  const auto f1 = euclidean_map(mesh, e, [](double x, double y) { return 2 * x - y; });
  MapField f2 = f1;
  for (std::size_t i = 0; i < f2.size(); ++i) {
    if (!mesh->is_interior(i)) continue;
    const auto p = mesh->position(i);
    f2.set_point(i, TargetPoint{ChartKind::euclidean,
                                {f1.point(i).coords[0] + 0.3 * std::sin(pi * p[0]) * std::sin(pi * p[1])}});
  }
  const double lambda = 2 * pi * pi;
  const auto eig = check_eigenvalue_estimate(f1, f2, lambda, "mode");
  CHECK(eig.lhs / eig.rhs == doctest::Approx(1.0).epsilon(0.01));
  const auto en = check_difference_energy_bound(f1, f2, lambda, "mode");
  CHECK(en.lhs / en.rhs == doctest::Approx(0.5).epsilon(0.01));
  CHECK(eig.pass);
  CHECK(en.pass);
}

TEST_CASE("eigenvalue estimate rejects unequal boundary data") {
  const auto mesh = interval_mesh(9);
  const auto e = share(TargetManifold::euclidean(1));
  const auto f1 = euclidean_map(mesh, e, [](double x, double) { return x; });
  const auto f2 = euclidean_map(mesh, e, [](double x, double) { return 2 * x; });
  CHECK_THROWS_AS(check_eigenvalue_estimate(f1, f2, pi * pi, "s"), InvalidArgument);
  CHECK_THROWS_AS(check_difference_energy_bound(f1, f2, pi * pi, "s"), InvalidArgument);
}

TEST_CASE("closed-domain difference energy bound with the derived and printed coefficients") {
  const auto h = share(TargetManifold::hyperboloid(2));
  ScenarioFamily fam("torus-h2", torus_mesh({24, 24}, {1.0, 1.0}), h, {}, 0.3, 9);
  const MapField f1 = fam.sample(), f2 = fam.sample();
  const auto half = check_difference_energy_bound(f1, f2, 0.0, "s");
  const auto quarter = check_difference_energy_bound(f1, f2, 0.0, "s", 0.25);
  CHECK(half.required);
  CHECK(half.pass);
  CHECK_FALSE(quarter.required);
  CHECK(quarter.rhs == doctest::Approx(0.5 * half.rhs));
}

TEST_CASE("Fourier mode on a flat torus gives C1 = (1 + lambda) / lambda") {
  const auto e = share(TargetManifold::euclidean(1));
  const auto mesh = torus_mesh({64, 64}, {1.0, 1.0});
  for (int k : {1, 2}) {
    const auto f = MapField::from_function(mesh, e, [&](DomainPoint x) {
      return TargetPoint{ChartKind::euclidean, {0.2 * std::cos(2 * pi * k * x[1])}};
    });
    const double lk = 4 * pi * pi * k * k;
    const auto c = w22_constant(f, MapField(mesh, e));
    CHECK(c.value == doctest::Approx((1 + lk) / lk).epsilon(0.02));
  }
  CHECK_THROWS_AS(w22_constant(MapField(square_mesh(5), e), MapField(square_mesh(5), e)), InvalidArgument);
}

TEST_CASE("homotopy constant of the null class is amplitude independent") {
  const auto t = share(TargetManifold::flat_torus({1.0, 1.0}));
  const auto mesh = torus_mesh({32, 32}, {1.0, 1.0});
  ScenarioFamily fam("null", mesh, t, HomotopyDescriptor{2, 2, {0, 0, 0, 0}, {}}, 0.0, 1);
  std::vector<double> cs;
  for (double a : {0.01, 0.05, 0.1}) cs.push_back(homotopy_energy_constant(fam.single_mode(a)).value);
  // Oracle: a single Fourier mode has ||dw|| / ||Delta w|| = lambda^{-1/2}.
  const double hgrid = 1.0 / 32;
  const double lambda = 4 / (hgrid * hgrid) * std::pow(std::sin(pi * hgrid), 2);
  for (double c : cs) CHECK(c == doctest::Approx(1 / std::sqrt(lambda)).epsilon(1e-6));
  CHECK(check_constant_stability("s", cs, 2.0, "fam", hgrid).pass);
  CHECK_THROWS_AS(homotopy_energy_constant(MapField(square_mesh(5), t)), InvalidArgument);
}

TEST_CASE("Bochner residual converges at second order on a Euclidean torus") {
  const auto e = share(TargetManifold::euclidean(2));
  std::vector<double> hs, errs;
  for (int n : {16, 32, 64}) {
    const auto mesh = torus_mesh({n, n}, {2 * pi, 2 * pi});
    const auto f = MapField::from_function(mesh, e, [](DomainPoint x) {
      return TargetPoint{ChartKind::euclidean, {std::sin(x[0]) * std::cos(x[1]), std::sin(2 * x[1])}};
    });
    hs.push_back(mesh->min_spacing());
    errs.push_back(bochner_residual(f).max_abs);
  }
  CHECK(convergence_order(hs, errs) > 1.8);
}

TEST_CASE("rescaling rows and slope fitting") {
  const auto h = share(TargetManifold::hyperboloid(2));
  ScenarioFamily fam("interval-h2", interval_mesh(33), h, {}, 0.3, 2);
  const auto rows = check_rescaling(fam.sample(), fam.sample(), 3.0, "s");
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(r.pass);
  CHECK(fitted_slope({0, 1, 2, 3}, {1, 3, 5, 7}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(fitted_slope({1}, {1}), InvalidArgument);
}

TEST_CASE("flow report rows on an attracting potential flow") {
  const auto mesh = interval_mesh(33);
  const auto h = share(TargetManifold::hyperboloid(2));
  auto g = MapField::from_function(mesh, h, [&](DomainPoint x) {
    return h->from_normal_coordinates({x[0] - 0.5, 0.6 * std::sin(pi * x[0])});
  });
  FlowConfig config(std::move(g), dist_sq_potential(h, h->origin(), 1.0));
  config.t_max = 2.0;
  config.tol_stat = 1e-7;
  config.diagnostic_every = 20;
  const auto report = run(config);
  const auto rows = check_flow_report(report, config, {pi * pi, 0.0, "attract"});
  REQUIRE_FALSE(rows.empty());
  for (const auto& r : rows) {
    INFO(r.id << " lhs " << r.lhs << " rhs " << r.rhs << " " << r.note);
    if (r.required) CHECK(r.pass);
  }
}

TEST_CASE("results export as JSON and CSV") {
  std::vector<EstimateCheckResult> rows{make_result("a", 1.0, 2.0, 0.0, "s", 0.1),
                                        make_result("b", 3.0, 2.0, 0.0, "s, \"q\"", 0.1, false, "note")};
  CHECK(all_required_pass(rows));
  rows.push_back(make_result("c", 3.0, 2.0, 0.5, "s", 0.1));
  CHECK_FALSE(all_required_pass(rows));
  std::ostringstream js, csv;
  write_results_json(js, rows);
  const auto parsed = nlohmann::json::parse(js.str());
  CHECK(parsed["results"].size() == 3);
  CHECK(parsed["all_required_pass"] == false);
  write_results_csv(csv, rows);
  CHECK(csv.str().find("\"s, \"\"q\"\"\"") != std::string::npos);
}

TEST_CASE("suite selection runs only the requested ids") {
  SuiteOptions options;
  options.resolution = 16;
  options.scenarios = 2;
  options.selection = {"energy_triangle"};
  const auto rows = run_estimate_suite(options);
  REQUIRE_FALSE(rows.empty());
  for (const auto& r : rows) CHECK(r.id == "energy_triangle");
  options.selection = {"no_such_check"};
  CHECK_THROWS_AS(run_estimate_suite(options), InvalidArgument);
}
