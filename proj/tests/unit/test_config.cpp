#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ptf/config.hpp"
#include "ptf/errors.hpp"
#include "ptf/runner.hpp"

using namespace ptf;
namespace fs = std::filesystem;

namespace {

const char* minimal_flow = R"(
[mesh]
topology = interval_dirichlet
nodes = 17

[target]
kind = hyperboloid

[map]
kind = geodesic
from = -0.5, 0.2
to = 0.7, 0.4
bump = 0.3

[field]
kind = potential_dist_sq
)";

std::string error_of(std::string_view text, std::optional<Command> command = std::nullopt) {
  try {
    parse_config(text, command);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ptf_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("minimal flow config fills defaults") {
  const RunConfig c = parse_config(minimal_flow);
  CHECK(c.command == Command::flow);
  CHECK(c.mesh.nodes == std::vector<int>{17});
  CHECK(c.mesh.lengths == std::vector<double>{1.0});
  CHECK(c.target.dimension == 2);
  CHECK(c.field.kind == "potential_dist_sq");
  CHECK(c.field.coefficient == 1.0);
  CHECK(c.flow.cfl_fraction == 0.5);
  CHECK(c.flow.tol_stat == 1e-8);
  CHECK(c.seed == 1);
}

TEST_CASE("normalized echo reparses to an equal config") {
  RunConfig c = parse_config(std::string(minimal_flow) + "\n[flow]\nt_max = 0.1\ntol_stat = 3e-9\n[run]\nresolutions = 8, 16\n");
  c.output = "somewhere";
  c.field.mu = 0.25;
  const std::string echo = echo_config(c);
  const RunConfig back = parse_config(echo);
  CHECK(back == c);
  CHECK(echo_config(back) == echo);

  const char* sum = R"(
[mesh]
topology = rectangle_dirichlet
[target]
kind = euclidean
[map]
kind = constant
[field]
kind = sum
terms = pull, spin
[field.pull]
kind = potential_dist_sq
coefficient = 0.1
[field.spin]
kind = rotational
strength = 0.3
)";
  const RunConfig s = parse_config(sum);
  REQUIRE(s.field.term_fields.size() == 2);
  CHECK(parse_config(echo_config(s)) == s);
}

TEST_CASE("unknown keys and sections are errors naming the key and line") {
  const std::string text = std::string(minimal_flow) + "[flow]\ndtt = 0.1\n";
  const std::string err = error_of(text);
  CHECK(err.find("dtt") != std::string::npos);
  CHECK(err.find("line 18") != std::string::npos);
  CHECK(error_of(std::string(minimal_flow) + "[extras]\nx = 1\n").find("[extras]") != std::string::npos);
  CHECK(error_of(std::string(minimal_flow) + "[field.orphan]\nkind = zero\n").find("field.orphan") != std::string::npos);
}

TEST_CASE("type mismatches, bad enums and missing keys carry locations") {
  CHECK(error_of("[mesh]\ntopology = interval_dirichlet\nnodes = many\n", Command::spectrum).find("[mesh] nodes") !=
        std::string::npos);
  const std::string bad_kind = error_of("[mesh]\ntopology = interval_dirichlet\n[target]\nkind = sphere\n[map]\nkind = constant\n");
  CHECK(bad_kind.find("[target] kind") != std::string::npos);
  CHECK(bad_kind.find("line 4") != std::string::npos);
  CHECK(error_of("[mesh]\ntopology = interval_dirichlet\n[map]\nkind = constant\n").find("[target] kind") !=
        std::string::npos);
  CHECK(error_of(std::string(minimal_flow) + "[flow]\ncfl_fraction = 2\n").find("[flow] cfl_fraction") !=
        std::string::npos);
  CHECK(error_of(std::string(minimal_flow) + "[suite]\nestimates = energy_triangle, bogus\n").find("bogus") !=
        std::string::npos);
  CHECK(error_of("[mesh]\ntopology = torus_periodic\n", Command::spectrum).find("Dirichlet") != std::string::npos);
  CHECK(error_of("[flow\n").find("line") != std::string::npos);
}

TEST_CASE("verify needs no problem sections") {
  const RunConfig c = parse_config("[suite]\nscenarios = 2\n", Command::verify);
  CHECK(c.command == Command::verify);
  CHECK(c.suite.scenarios == 2);
}

TEST_CASE("builders honour resolution and map kinds") {
  RunConfig c = parse_config(minimal_flow);
  CHECK(build_mesh(c.mesh, 32)->node_count() == 33);
  CHECK(build_mesh(c.mesh)->node_count() == 17);
  const auto flow = build_flow_config(c);
  CHECK(flow.initial.point(0) == build_target(c.target)->from_normal_coordinates({-0.5, 0.2}));
  CHECK(flow.field.variational());

  c.mesh.topology = Topology::torus_periodic;
  c.mesh.nodes = {8, 8};
  c.mesh.lengths = {1.0, 1.0};
  c.target.kind = ChartKind::flat_torus;
  c.target.periods = {1.0, 1.0};
  c.map = MapConfig{};
  c.map.kind = "torus_affine";
  c.map.homotopy = {1, 0, 0, 1};
  c.field = FieldConfig{};
  CHECK_NOTHROW(c.validate());
  const auto torus = build_flow_config(c);
  CHECK(torus.initial.homotopy().matrix == std::vector<int>{1, 0, 0, 1});
}

TEST_CASE("run_command: spectrum, malformed target and byte-identical flow outputs") {
  const fs::path out = scratch("spectrum");
  RunConfig s = parse_config("[mesh]\ntopology = interval_dirichlet\nnodes = 129\nlengths = 3.141592653589793\n",
                             Command::spectrum);
  s.output = out.string();
  std::ostringstream log;
  CHECK(run_command(s, log) == exit_ok);
  CHECK(fs::exists(out / "eigenfield.csv"));
  CHECK(fs::exists(out / "config.echo"));
  CHECK(parse_config(slurp(out / "config.echo")) == s);

  RunConfig bad = parse_config(minimal_flow);
  bad.target.kind = ChartKind::flat_torus;  // no periods
  bad.output = scratch("bad").string();
  std::ostringstream bad_log;
  CHECK(run_command(bad, bad_log) == exit_config_error);
  CHECK(bad_log.str().find("[target] periods") != std::string::npos);

  RunConfig f = parse_config(std::string(minimal_flow) + "[flow]\nt_max = 0.05\ndiagnostic_every = 10\n");
  const fs::path a = scratch("flow_a"), b = scratch("flow_b");
  f.output = a.string();
  std::ostringstream quiet;
  const int code_a = run_command(f, quiet);
  f.output = b.string();
  const int code_b = run_command(f, quiet);
  CHECK(code_a == exit_t_max);
  CHECK(code_a == code_b);
  for (const char* name : {"diagnostics.csv", "final_map.csv", "estimates.csv", "estimates.json"})
    CHECK(slurp(a / name) == slurp(b / name));
}

TEST_CASE("a resumed run reports like the uninterrupted one") {
  RunConfig f = parse_config(std::string(minimal_flow) + "[flow]\nt_max = 0.05\ndiagnostic_every = 10\ncheckpoint_every = 20\n");
  const fs::path a = scratch("resume_a"), b = scratch("resume_b");
  std::ostringstream quiet;
  f.output = a.string();
  const int full = run_command(f, quiet);
  std::vector<fs::path> saved(fs::directory_iterator(a / "checkpoints"), fs::directory_iterator{});
  REQUIRE(!saved.empty());
  std::sort(saved.begin(), saved.end());
  f.output = b.string();
  f.flow.resume = saved.front().string();
  CHECK(run_command(f, quiet) == full);
  CHECK(slurp(a / "final_map.csv") == slurp(b / "final_map.csv"));
}

TEST_CASE("PTF_THREADS is validated") {
  ::setenv("PTF_THREADS", "3", 1);
  CHECK(threads_from_environment() == 3);
  ::setenv("PTF_THREADS", "zero", 1);
  CHECK_THROWS_AS(threads_from_environment(), ConfigError);
  ::unsetenv("PTF_THREADS");
  CHECK(threads_from_environment() == 1);
}
