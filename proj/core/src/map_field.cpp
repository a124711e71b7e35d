#include "ptf/map_field.hpp"

#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "ptf/errors.hpp"

namespace ptf {
namespace {

template <class T>
std::string join(const std::vector<T>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ';';
    s += fmt::format("{:.17g}", static_cast<double>(values[i]));
  }
  return s;
}

std::vector<double> split_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    char* end = nullptr;
    out.push_back(std::strtod(item.c_str(), &end));
    if (*end != '\0') throw InvalidArgument("malformed number '" + item + "' in map header");
  }
  return out;
}

std::map<std::string, std::string> header_fields(const std::string& line, const std::string& tag) {
  std::stringstream ss(line);
  std::string hash, name;
  ss >> hash >> name;
  if (hash != "#" || name != tag) throw InvalidArgument("expected '# " + tag + "' header line");
  std::map<std::string, std::string> kv;
  std::string token;
  while (ss >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw InvalidArgument("malformed header token '" + token + "'");
    kv[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return kv;
}

}  // namespace

MapField::MapField(std::shared_ptr<const DomainMesh> mesh, std::shared_ptr<const TargetManifold> target,
                   HomotopyDescriptor homotopy)
    : mesh_(std::move(mesh)), target_(std::move(target)), homotopy_(std::move(homotopy)) {
  if (!mesh_ || !target_) throw InvalidArgument("map field needs a mesh and a target");
  stride_ = target_->ambient_dimension();
  const bool torus_pair = mesh_->periodic() && target_->kind() == ChartKind::flat_torus;
  if (!homotopy_.trivial()) {
    if (!torus_pair) throw HomotopyMismatch("homotopy matrices are only defined for torus-to-torus maps");
    if (homotopy_.rows != target_->dimension() || homotopy_.cols != mesh_->dimension() ||
        homotopy_.matrix.size() != static_cast<std::size_t>(homotopy_.rows * homotopy_.cols))
      throw HomotopyMismatch("homotopy matrix must be (target dim) x (domain dim)");
  } else if (torus_pair) {
    homotopy_.rows = target_->dimension();
    homotopy_.cols = mesh_->dimension();
    homotopy_.matrix.assign(static_cast<std::size_t>(homotopy_.rows * homotopy_.cols), 0);
  }
  if (!homotopy_.shift.empty() && homotopy_.shift.size() != static_cast<std::size_t>(target_->dimension()))
    throw HomotopyMismatch("homotopy shift must have the target dimension");
  coords_.assign(mesh_->node_count() * static_cast<std::size_t>(stride_), 0.0);
  const TargetPoint o = target_->origin();
  for (std::size_t i = 0; i < mesh_->node_count(); ++i) set_point(i, o);
}

MapField MapField::from_function(std::shared_ptr<const DomainMesh> mesh, std::shared_ptr<const TargetManifold> target,
                                 const std::function<TargetPoint(DomainPoint)>& fn, HomotopyDescriptor homotopy) {
  MapField f(std::move(mesh), std::move(target), std::move(homotopy));
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto pos = f.mesh().position(i);
    f.set_point(i, fn(DomainPoint(pos.data(), static_cast<std::size_t>(f.mesh().dimension()))));
  }
  return f;
}

TargetPoint MapField::point(std::size_t node) const {
  const auto off = node * static_cast<std::size_t>(stride_);
  return {target_->kind(), Coords(std::span<const double>(coords_.data() + off, static_cast<std::size_t>(stride_)))};
}

void MapField::set_point(std::size_t node, const TargetPoint& p) {
  if (p.chart != target_->kind() || p.coords.size() != stride_)
    throw ChartMismatch("point does not match the map's target chart");
  const auto off = node * static_cast<std::size_t>(stride_);
  for (int k = 0; k < stride_; ++k) coords_[off + static_cast<std::size_t>(k)] = p.coords[k];
}

Coords MapField::seam_jump(int axis) const {
  Coords jump(stride_);
  if (homotopy_.trivial()) return jump;
  const auto& periods = target_->periods();
  for (int k = 0; k < homotopy_.rows; ++k) jump[k] = periods[static_cast<std::size_t>(k)] * homotopy_.at(k, axis);
  return jump;
}

TargetPoint MapField::lift_at(std::size_t node, std::span<const int> wrap) const {
  TargetPoint p = point(node);
  if (homotopy_.trivial()) return p;
  for (std::size_t a = 0; a < wrap.size() && a < static_cast<std::size_t>(homotopy_.cols); ++a)
    if (wrap[a] != 0) p.coords += static_cast<double>(wrap[a]) * seam_jump(static_cast<int>(a));
  return p;
}

void MapField::validate(double tol) const {
  for (std::size_t i = 0; i < size(); ++i)
    if (!target_->contains(point(i), tol))
      throw ChartMismatch("map value at node " + std::to_string(i) + " is not on the target");
}

void MapField::require_compatible(const MapField& other) const {
  if (!(*mesh_ == other.mesh())) throw InvalidArgument("maps live on different meshes");
  if (!(*target_ == other.target())) throw ChartMismatch("maps have different targets");
  if (!homotopy_.same_class(other.homotopy()))
    throw HomotopyMismatch("maps belong to different homotopy classes");
}

bool operator==(const MapField& a, const MapField& b) {
  return a.mesh() == b.mesh() && a.target() == b.target() && a.homotopy_ == b.homotopy_ && a.coords_ == b.coords_;
}

TangentField zero_field(const MapField& f) {
  TangentField out;
  out.vectors.reserve(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out.vectors.push_back(f.target().zero_tangent(f.point(i)));
  return out;
}

ScalarField pointwise_norm(const MapField& f, const TangentField& v) {
  if (v.size() != f.size()) throw InvalidArgument("tangent field size does not match the map");
  ScalarField out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = f.target().norm(v[i]);
  return out;
}

double pairing(const MapField& f, const TangentField& a, const TangentField& b) {
  if (a.size() != f.size() || b.size() != f.size()) throw InvalidArgument("tangent field size does not match the map");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.mesh().weight(i) * f.target().inner(a[i], b[i]);
  return s;
}

MapField exp_perturb(const MapField& f, const TangentField& v, double s) {
  if (v.size() != f.size()) throw InvalidArgument("tangent field size does not match the map");
  MapField out = f;
  for (std::size_t i = 0; i < f.size(); ++i) {
    TangentVector step = v[i];
    step.components *= s;
    out.set_point(i, f.target().exp_map(f.point(i), step));
  }
  return out;
}

void write_map_csv(std::ostream& out, const MapField& f) {
  const auto& mesh = f.mesh();
  const auto& target = f.target();
  std::vector<int> nodes;
  std::vector<double> lengths;
  for (int a = 0; a < mesh.dimension(); ++a) {
    nodes.push_back(mesh.nodes_per_axis(a));
    lengths.push_back(mesh.length(a));
  }
  out << "# ptf-map v1\n";
  out << "# mesh topology=" << to_string(mesh.topology()) << " nodes=" << join(nodes) << " lengths=" << join(lengths)
      << " metric=" << (mesh.flat() ? "flat" : "conformal") << " masked=" << (mesh.masked() ? 1 : 0) << '\n';
  out << "# target kind=" << to_string(target.kind()) << " dimension=" << target.dimension()
      << " periods=" << join(target.periods()) << " scale=" << fmt::format("{:.17g}", target.metric_scale()) << '\n';
  out << "# homotopy rows=" << f.homotopy().rows << " cols=" << f.homotopy().cols
      << " matrix=" << join(f.homotopy().matrix) << " shift=" << join(f.homotopy().shift) << '\n';
  out << "node,x";
  if (mesh.dimension() > 1) out << ",y";
  out << ",chart";
  for (int k = 0; k < f.stride(); ++k) out << ",c" << k;
  out << '\n';
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto pos = mesh.position(i);
    out << i << ',' << fmt::format("{:.17g}", pos[0]);
    if (mesh.dimension() > 1) out << ',' << fmt::format("{:.17g}", pos[1]);
    out << ',' << to_string(target.kind());
    const auto p = f.point(i);
    for (int k = 0; k < f.stride(); ++k) out << ',' << fmt::format("{:.17g}", p.coords[k]);
    out << '\n';
  }
}

MapField read_map_csv(std::istream& in, std::shared_ptr<const DomainMesh> mesh) {
  std::string line;
  if (!std::getline(in, line) || line != "# ptf-map v1") throw InvalidArgument("not a ptf map file");
  std::getline(in, line);
  auto mesh_kv = header_fields(line, "mesh");
  std::getline(in, line);
  auto target_kv = header_fields(line, "target");
  std::getline(in, line);
  auto hom_kv = header_fields(line, "homotopy");

  if (!mesh) {
    if (mesh_kv["metric"] != "flat" || mesh_kv["masked"] != "0")
      throw InvalidArgument("conformal or masked meshes must be supplied by the caller");
    MeshSpec spec;
    spec.topology = topology_from_string(mesh_kv["topology"]);
    for (double v : split_doubles(mesh_kv["nodes"])) spec.nodes.push_back(static_cast<int>(v));
    spec.lengths = split_doubles(mesh_kv["lengths"]);
    mesh = std::make_shared<const DomainMesh>(DomainMesh::build(spec));
  }
  const ChartKind kind = chart_kind_from_string(target_kv["kind"]);
  const double scale = std::strtod(target_kv["scale"].c_str(), nullptr);
  const int dim = std::atoi(target_kv["dimension"].c_str());
  std::shared_ptr<const TargetManifold> target;
  switch (kind) {
    case ChartKind::euclidean: target = std::make_shared<TargetManifold>(TargetManifold::euclidean(dim, scale)); break;
    case ChartKind::hyperboloid: target = std::make_shared<TargetManifold>(TargetManifold::hyperboloid(dim, scale)); break;
    case ChartKind::flat_torus:
      target = std::make_shared<TargetManifold>(TargetManifold::flat_torus(split_doubles(target_kv["periods"]), scale));
      break;
  }
  HomotopyDescriptor hom;
  hom.rows = std::atoi(hom_kv["rows"].c_str());
  hom.cols = std::atoi(hom_kv["cols"].c_str());
  for (double v : split_doubles(hom_kv["matrix"])) hom.matrix.push_back(static_cast<int>(v));
  hom.shift = split_doubles(hom_kv["shift"]);

  MapField f(mesh, target, hom);
  std::getline(in, line);  // column header
  const int skip = 2 + (mesh->dimension() > 1 ? 1 : 0) + 1;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != static_cast<std::size_t>(skip + f.stride())) throw InvalidArgument("malformed map row: " + line);
    const auto node = static_cast<std::size_t>(std::stoull(cells[0]));
    if (node >= f.size()) throw InvalidArgument("node index out of range in map file");
    TargetPoint p{kind, Coords(f.stride())};
    for (int k = 0; k < f.stride(); ++k) p.coords[k] = std::strtod(cells[static_cast<std::size_t>(skip + k)].c_str(), nullptr);
    f.set_point(node, p);
    ++count;
  }
  if (count != f.size()) throw InvalidArgument("map file has " + std::to_string(count) + " rows, expected " +
                                               std::to_string(f.size()));
  return f;
}

}  // namespace ptf
