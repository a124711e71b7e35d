#include "ptf/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "ptf/errors.hpp"
#include "ptf/estimates.hpp"

namespace ptf {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(std::string_view(s).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Line numbers of "[section]" headers and "key = value" lines, for error locations.
class LineIndex {
 public:
  explicit LineIndex(std::string_view text) {
    std::string section;
    int line = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto end = std::min(text.find('\n', pos), text.size());
      const std::string l = trim(text.substr(pos, end - pos));
      ++line;
      if (!l.empty() && l.front() == '[' && l.back() == ']') {
        section = trim(std::string_view(l).substr(1, l.size() - 2));
        lines_.emplace(section + "\n", line);
      } else if (!l.empty() && l.front() != ';' && l.front() != '#') {
        const auto eq = l.find('=');
        if (eq != std::string::npos) lines_.emplace(section + "\n" + trim(std::string_view(l).substr(0, eq)), line);
      }
      pos = end + 1;
    }
  }
  std::string locate(const std::string& section, const std::string& key) const {
    const std::string where = key.empty() ? "[" + section + "]" : "[" + section + "] " + key;
    const auto it = lines_.find(section + "\n" + key);
    return it == lines_.end() ? where : fmt::format("line {}: {}", it->second, where);
  }

 private:
  std::map<std::string, int> lines_;
};

template <class T>
T parse_number(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(where, fmt::format("expected a number, got '{}'", s));
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(v)) throw ConfigError(where, fmt::format("expected a finite number, got '{}'", s));
  return v;
}

// One section of the tree; records which keys were consumed and rejects the rest.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name, const LineIndex& lines)
      : tree_(tree), name_(std::move(name)), lines_(lines) {}

  bool present() const { return tree_ != nullptr; }
  bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }
  std::string where(const std::string& key) const { return lines_.locate(name_, key); }

  std::optional<std::string> raw(const std::string& key) {
    allowed_.insert(key);
    if (!tree_) return std::nullopt;
    const auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    if (!it->second.empty()) throw ConfigError(where(key), "nested keys are not supported");
    return trim(it->second.data());
  }
  void require(const std::string& key) {
    allowed_.insert(key);
    if (!has(key)) throw ConfigError(where(key), "missing required key");
  }

  void get(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }
  void get(const std::string& key, double& out) {
    if (auto v = raw(key)) out = parse_number<double>(*v, where(key));
  }
  void get(const std::string& key, int& out) {
    if (auto v = raw(key)) out = parse_number<int>(*v, where(key));
  }
  void get(const std::string& key, std::uint64_t& out) {
    if (auto v = raw(key)) out = parse_number<std::uint64_t>(*v, where(key));
  }
  void get(const std::string& key, bool& out) {
    if (auto v = raw(key)) {
      if (*v == "true") out = true;
      else if (*v == "false") out = false;
      else throw ConfigError(where(key), fmt::format("expected true or false, got '{}'", *v));
    }
  }
  void get(const std::string& key, std::optional<double>& out) {
    if (auto v = raw(key)) out = *v == "none" ? std::nullopt : std::optional<double>(parse_number<double>(*v, where(key)));
  }
  template <class T>
  void get(const std::string& key, std::vector<T>& out) {
    if (auto v = raw(key)) {
      out.clear();
      for (const auto& item : split_list(*v)) {
        if constexpr (std::is_same_v<T, std::string>)
          out.push_back(item);
        else
          out.push_back(parse_number<T>(item, where(key)));
      }
    }
  }
  template <class Enum, class Parse>
  void get_enum(const std::string& key, Enum& out, Parse parse) {
    if (auto v = raw(key)) {
      try {
        out = parse(*v);
      } catch (const InvalidArgument& e) {
        throw ConfigError(where(key), e.what());
      }
    }
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_)
      if (!allowed_.count(key)) throw ConfigError(where(key), "unknown key '" + key + "'");
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
  const LineIndex& lines_;
  std::set<std::string> allowed_;
};

StepPolicy step_policy_from_string(std::string_view s) {
  if (s == "cfl") return StepPolicy::cfl;
  if (s == "fixed") return StepPolicy::fixed;
  throw InvalidArgument("unknown step policy '" + std::string(s) + "' (expected cfl or fixed)");
}

void read_field(Section& s, FieldConfig& f) {
  s.get("kind", f.kind);
  s.get("center", f.center);
  s.get("coefficient", f.coefficient);
  s.get("strength", f.strength);
  s.get("matrix", f.matrix);
  s.get("mu", f.mu);
  s.get("sup", f.sup);
}

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_same_v<T, double>)
      out += fmt_double(v[i]);
    else
      out += fmt::format("{}", v[i]);
  }
  return out;
}

void echo_field(std::ostream& out, const FieldConfig& f, bool with_terms) {
  out << "kind = " << f.kind << '\n';
  out << "center = " << join(f.center) << '\n';
  out << "coefficient = " << fmt_double(f.coefficient) << '\n';
  out << "strength = " << fmt_double(f.strength) << '\n';
  out << "matrix = " << join(f.matrix) << '\n';
  out << "mu = " << (f.mu ? fmt_double(*f.mu) : "none") << '\n';
  out << "sup = " << (f.sup ? fmt_double(*f.sup) : "none") << '\n';
  if (with_terms) out << "terms = " << join(f.terms) << '\n';
}

[[noreturn]] void fail(const std::string& where, const std::string& message) { throw ConfigError(where, message); }

void validate_field(const FieldConfig& f, const std::string& sec, const TargetConfig& target, bool top) {
  static const std::set<std::string> kinds{"zero", "potential_dist_sq", "linear", "rotational", "sum"};
  if (!kinds.count(f.kind)) fail("[" + sec + "] kind", "unknown field kind '" + f.kind + "'");
  if (!f.center.empty() && static_cast<int>(f.center.size()) != target.dimension)
    fail("[" + sec + "] center", fmt::format("expected {} normal coordinates", target.dimension));
  if (f.kind == "linear") {
    if (target.kind != ChartKind::euclidean) fail("[" + sec + "] kind", "linear fields need a euclidean target");
    if (static_cast<int>(f.matrix.size()) != target.dimension * target.dimension)
      fail("[" + sec + "] matrix", fmt::format("expected {} entries", target.dimension * target.dimension));
  }
  if (f.kind == "rotational" && target.dimension != 2)
    fail("[" + sec + "] kind", "rotational fields need a two-dimensional target");
  if (f.kind == "sum") {
    if (!top) fail("[" + sec + "] kind", "sum terms cannot themselves be sums");
    if (f.terms.empty()) fail("[" + sec + "] terms", "a sum needs at least one term");
    for (std::size_t k = 0; k < f.term_fields.size(); ++k)
      validate_field(f.term_fields[k], "field." + f.terms[k], target, false);
  } else if (top && !f.terms.empty()) {
    fail("[" + sec + "] terms", "terms are only allowed for kind = sum");
  }
}

}  // namespace

std::string_view to_string(Command command) {
  switch (command) {
    case Command::flow: return "flow";
    case Command::verify: return "verify";
    case Command::spectrum: return "spectrum";
    case Command::sweep: return "sweep";
  }
  return "unknown";
}

Command command_from_string(std::string_view name) {
  if (name == "flow") return Command::flow;
  if (name == "verify") return Command::verify;
  if (name == "spectrum") return Command::spectrum;
  if (name == "sweep") return Command::sweep;
  throw InvalidArgument("unknown command '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  const int dims = mesh.topology == Topology::interval_dirichlet    ? 1
                   : mesh.topology == Topology::rectangle_dirichlet ? 2
                                                                    : static_cast<int>(mesh.nodes.size());
  if (static_cast<int>(mesh.nodes.size()) != dims || dims < 1 || dims > 2)
    fail("[mesh] nodes", fmt::format("{} needs {} entries", to_string(mesh.topology), dims));
  if (mesh.lengths.size() != mesh.nodes.size()) fail("[mesh] lengths", "needs one entry per axis");
  for (int n : mesh.nodes)
    if (n < 3) fail("[mesh] nodes", "at least 3 nodes per axis");
  for (double l : mesh.lengths)
    if (!(l > 0.0)) fail("[mesh] lengths", "lengths must be positive");
  if (mesh.conformal != "none" && mesh.conformal != "linear")
    fail("[mesh] conformal", "expected none or linear, got '" + mesh.conformal + "'");
  if (mesh.conformal == "linear" && mesh.conformal_coefficients.size() != 3)
    fail("[mesh] conformal_coefficients", "linear conformal factor needs 3 coefficients");
  if (mesh.region != "none" && mesh.region != "disk")
    fail("[mesh] region", "expected none or disk, got '" + mesh.region + "'");
  if (mesh.region == "disk") {
    if (mesh.topology != Topology::rectangle_dirichlet) fail("[mesh] region", "disk regions need a Dirichlet rectangle");
    if (mesh.region_center.size() != 2) fail("[mesh] region_center", "needs 2 coordinates");
    if (!(mesh.region_radius > 0.0)) fail("[mesh] region_radius", "must be positive");
  }

  if (target.dimension < 1 || target.dimension > kMaxAmbient - 1)
    fail("[target] dimension", fmt::format("must lie in [1, {}]", kMaxAmbient - 1));
  if (!(target.scale > 0.0)) fail("[target] scale", "must be positive");
  if (target.kind == ChartKind::flat_torus) {
    if (static_cast<int>(target.periods.size()) != target.dimension)
      fail("[target] periods", "flat_torus needs one period per dimension");
    for (double p : target.periods)
      if (!(p > 0.0)) fail("[target] periods", "periods must be positive");
  } else if (!target.periods.empty()) {
    fail("[target] periods", "periods are only allowed for flat_torus targets");
  }

  static const std::set<std::string> map_kinds{"constant", "geodesic", "affine", "torus_affine", "random", "file"};
  if (!map_kinds.count(map.kind)) fail("[map] kind", "unknown map kind '" + map.kind + "'");
  const auto dim_check = [&](const std::vector<double>& v, const char* key, bool required) {
    if ((required || !v.empty()) && static_cast<int>(v.size()) != target.dimension)
      fail(std::string("[map] ") + key, fmt::format("expected {} normal coordinates", target.dimension));
  };
  dim_check(map.point, "point", false);
  if (map.kind == "geodesic") {
    dim_check(map.from, "from", true);
    dim_check(map.to, "to", true);
  }
  if (map.kind == "affine" && static_cast<int>(map.matrix.size()) != target.dimension * dims)
    fail("[map] matrix", fmt::format("expected {} entries (target x domain)", target.dimension * dims));
  if (map.kind == "torus_affine") {
    if (mesh.topology != Topology::torus_periodic || target.kind != ChartKind::flat_torus)
      fail("[map] kind", "torus_affine needs a torus mesh and a flat_torus target");
    if (static_cast<int>(map.homotopy.size()) != target.dimension * dims)
      fail("[map] homotopy", fmt::format("expected {} integers (target x domain)", target.dimension * dims));
    if (!map.shift.empty() && static_cast<int>(map.shift.size()) != target.dimension)
      fail("[map] shift", "expected one entry per target dimension");
  } else if (!map.homotopy.empty() && target.kind != ChartKind::flat_torus) {
    fail("[map] homotopy", "homotopy matrices only apply to flat_torus targets");
  }
  if (map.kind == "random" && !(map.amplitude > 0.0)) fail("[map] amplitude", "must be positive");
  if (map.kind == "file" && map.file.empty()) fail("[map] file", "missing path");

  validate_field(field, "field", target, true);

  if (!(flow.cfl_fraction > 0.0 && flow.cfl_fraction <= 1.0)) fail("[flow] cfl_fraction", "must lie in (0, 1]");
  if (flow.policy == StepPolicy::fixed && !(flow.dt > 0.0)) fail("[flow] dt", "fixed policy needs dt > 0");
  if (!(flow.t_max > 0.0)) fail("[flow] t_max", "must be positive");
  if (!(flow.tol_stat > 0.0)) fail("[flow] tol_stat", "must be positive");
  if (flow.diagnostic_every < 1) fail("[flow] diagnostic_every", "must be at least 1");
  if (flow.checkpoint_every < 0) fail("[flow] checkpoint_every", "must be nonnegative");
  if (!(flow.blowup_factor > 1.0)) fail("[flow] blowup_factor", "must exceed 1");

  for (const auto& id : suite.estimates)
    if (std::find(estimate_ids().begin(), estimate_ids().end(), id) == estimate_ids().end())
      fail("[suite] estimates", "unknown estimate id '" + id + "'");
  if (suite.scenarios < 1) fail("[suite] scenarios", "must be at least 1");
  if (suite.resolution < 4) fail("[suite] resolution", "must be at least 4");

  if (sweep.ratios.empty()) fail("[sweep] ratios", "needs at least one ratio");
  for (double r : sweep.ratios)
    if (r < 0.0) fail("[sweep] ratios", "ratios must be nonnegative");
  if (command == Command::sweep && mesh.topology == Topology::torus_periodic)
    fail("[mesh] topology", "sweeps are gated by the Dirichlet eigenvalue and need a Dirichlet mesh");
  if (command == Command::spectrum && mesh.topology == Topology::torus_periodic)
    fail("[mesh] topology", "the Dirichlet spectrum needs a Dirichlet mesh");

  if (resolution < 0) fail("[run] resolution", "must be nonnegative");
  for (int r : resolutions)
    if (r < 4) fail("[run] resolutions", "entries must be at least 4");
}

RunConfig parse_config(std::string_view text, std::optional<Command> command) {
  const LineIndex lines(text);
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("line {}", e.line()), e.message());
  }

  static const std::set<std::string> sections{"run", "mesh", "target", "map", "field", "flow", "suite", "sweep"};
  for (const auto& [name, child] : tree) {
    if (child.empty() && !child.data().empty())
      throw ConfigError(lines.locate("", name), "key outside of any section");
    if (!sections.count(name) && name.rfind("field.", 0) != 0)
      throw ConfigError(lines.locate(name, ""), "unknown section [" + name + "]");
  }
  const auto section = [&](const std::string& name) {
    const auto it = tree.find(name);
    return Section(it == tree.not_found() ? nullptr : &it->second, name, lines);
  };

  RunConfig c;
  try {
    auto run = section("run");
    run.get_enum("command", c.command, command_from_string);
    if (command) c.command = *command;
    run.get("output", c.output);
    run.get("seed", c.seed);
    run.get("resolution", c.resolution);
    run.get("resolutions", c.resolutions);
    run.reject_unknown();

    const bool needs_problem = c.command == Command::flow || c.command == Command::sweep ||
                               (c.command == Command::verify && tree.find("field") != tree.not_found());
    auto mesh = section("mesh");
    if (needs_problem || c.command == Command::spectrum) mesh.require("topology");
    mesh.get_enum("topology", c.mesh.topology, topology_from_string);
    if (mesh.has("topology") && !mesh.has("nodes")) {
      // Defaults per topology.
      c.mesh.nodes = c.mesh.topology == Topology::interval_dirichlet ? std::vector<int>{65}
                     : c.mesh.topology == Topology::rectangle_dirichlet ? std::vector<int>{33, 33}
                                                                        : std::vector<int>{32, 32};
    }
    mesh.get("nodes", c.mesh.nodes);
    if (!mesh.has("lengths")) c.mesh.lengths.assign(c.mesh.nodes.size(), 1.0);
    mesh.get("lengths", c.mesh.lengths);
    mesh.get("conformal", c.mesh.conformal);
    mesh.get("conformal_coefficients", c.mesh.conformal_coefficients);
    mesh.get("region", c.mesh.region);
    mesh.get("region_center", c.mesh.region_center);
    mesh.get("region_radius", c.mesh.region_radius);
    mesh.reject_unknown();

    auto target = section("target");
    if (needs_problem) target.require("kind");
    target.get_enum("kind", c.target.kind, chart_kind_from_string);
    target.get("dimension", c.target.dimension);
    target.get("scale", c.target.scale);
    target.get("periods", c.target.periods);
    target.reject_unknown();

    auto map = section("map");
    if (needs_problem) map.require("kind");
    map.get("kind", c.map.kind);
    map.get("point", c.map.point);
    map.get("from", c.map.from);
    map.get("to", c.map.to);
    map.get("matrix", c.map.matrix);
    map.get("homotopy", c.map.homotopy);
    map.get("shift", c.map.shift);
    map.get("bump", c.map.bump);
    map.get("amplitude", c.map.amplitude);
    map.get("file", c.map.file);
    map.reject_unknown();

    auto field = section("field");
    read_field(field, c.field);
    field.get("terms", c.field.terms);
    field.reject_unknown();
    for (const auto& name : c.field.terms) {
      auto term = section("field." + name);
      if (!term.present()) throw ConfigError(field.where("terms"), "no section [field." + name + "]");
      FieldConfig f;
      read_field(term, f);
      term.reject_unknown();
      c.field.term_fields.push_back(std::move(f));
    }
    for (const auto& [name, child] : tree)
      if (name.rfind("field.", 0) == 0 &&
          std::find(c.field.terms.begin(), c.field.terms.end(), name.substr(6)) == c.field.terms.end())
        throw ConfigError(lines.locate(name, ""), "section is not listed in [field] terms");

    auto flow = section("flow");
    flow.get_enum("policy", c.flow.policy, step_policy_from_string);
    flow.get("dt", c.flow.dt);
    flow.get("cfl_fraction", c.flow.cfl_fraction);
    flow.get("t_max", c.flow.t_max);
    flow.get("tol_stat", c.flow.tol_stat);
    flow.get("diagnostic_every", c.flow.diagnostic_every);
    flow.get("checkpoint_every", c.flow.checkpoint_every);
    flow.get("blowup_factor", c.flow.blowup_factor);
    flow.get("resume", c.flow.resume);
    flow.reject_unknown();

    auto suite = section("suite");
    suite.get("estimates", c.suite.estimates);
    suite.get("scenarios", c.suite.scenarios);
    suite.get("resolution", c.suite.resolution);
    suite.get("flow_checks", c.suite.flow_checks);
    suite.reject_unknown();

    auto sweep = section("sweep");
    sweep.get("ratios", c.sweep.ratios);
    sweep.reject_unknown();
  } catch (const InvalidArgument& e) {
    throw ConfigError("", e.what());
  }

  try {
    c.validate();
  } catch (const ConfigError& e) {
    // Attach the line of the offending key when the text has one.
    const std::string& loc = e.location();
    const auto close = loc.find(']');
    if (loc.rfind('[', 0) == 0 && close != std::string::npos) {
      const std::string sec = loc.substr(1, close - 1);
      const std::string key = close + 2 < loc.size() ? loc.substr(close + 2) : "";
      const std::string located = lines.locate(sec, key);
      const std::string message = std::string(e.what()).substr(loc.size() + 2);
      throw ConfigError(located, message);
    }
    throw;
  }
  return c;
}

std::string echo_config(const RunConfig& c) {
  std::ostringstream out;
  out << "[run]\n";
  out << "command = " << to_string(c.command) << '\n';
  out << "output = " << c.output << '\n';
  out << "seed = " << c.seed << '\n';
  out << "resolution = " << c.resolution << '\n';
  out << "resolutions = " << join(c.resolutions) << '\n';
  out << "\n[mesh]\n";
  out << "topology = " << to_string(c.mesh.topology) << '\n';
  out << "nodes = " << join(c.mesh.nodes) << '\n';
  out << "lengths = " << join(c.mesh.lengths) << '\n';
  out << "conformal = " << c.mesh.conformal << '\n';
  out << "conformal_coefficients = " << join(c.mesh.conformal_coefficients) << '\n';
  out << "region = " << c.mesh.region << '\n';
  out << "region_center = " << join(c.mesh.region_center) << '\n';
  out << "region_radius = " << fmt_double(c.mesh.region_radius) << '\n';
  out << "\n[target]\n";
  out << "kind = " << to_string(c.target.kind) << '\n';
  out << "dimension = " << c.target.dimension << '\n';
  out << "scale = " << fmt_double(c.target.scale) << '\n';
  out << "periods = " << join(c.target.periods) << '\n';
  out << "\n[map]\n";
  out << "kind = " << c.map.kind << '\n';
  out << "point = " << join(c.map.point) << '\n';
  out << "from = " << join(c.map.from) << '\n';
  out << "to = " << join(c.map.to) << '\n';
  out << "matrix = " << join(c.map.matrix) << '\n';
  out << "homotopy = " << join(c.map.homotopy) << '\n';
  out << "shift = " << join(c.map.shift) << '\n';
  out << "bump = " << fmt_double(c.map.bump) << '\n';
  out << "amplitude = " << fmt_double(c.map.amplitude) << '\n';
  out << "file = " << c.map.file << '\n';
  out << "\n[field]\n";
  echo_field(out, c.field, true);
  for (std::size_t k = 0; k < c.field.term_fields.size(); ++k) {
    out << "\n[field." << c.field.terms[k] << "]\n";
    echo_field(out, c.field.term_fields[k], false);
  }
  out << "\n[flow]\n";
  out << "policy = " << to_string(c.flow.policy) << '\n';
  out << "dt = " << fmt_double(c.flow.dt) << '\n';
  out << "cfl_fraction = " << fmt_double(c.flow.cfl_fraction) << '\n';
  out << "t_max = " << fmt_double(c.flow.t_max) << '\n';
  out << "tol_stat = " << fmt_double(c.flow.tol_stat) << '\n';
  out << "diagnostic_every = " << c.flow.diagnostic_every << '\n';
  out << "checkpoint_every = " << c.flow.checkpoint_every << '\n';
  out << "blowup_factor = " << fmt_double(c.flow.blowup_factor) << '\n';
  out << "resume = " << c.flow.resume << '\n';
  out << "\n[suite]\n";
  out << "estimates = " << join(c.suite.estimates) << '\n';
  out << "scenarios = " << c.suite.scenarios << '\n';
  out << "resolution = " << c.suite.resolution << '\n';
  out << "flow_checks = " << (c.suite.flow_checks ? "true" : "false") << '\n';
  out << "\n[sweep]\n";
  out << "ratios = " << join(c.sweep.ratios) << '\n';
  return out.str();
}

}  // namespace ptf
