#include "ptf/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "ptf/errors.hpp"

namespace ptf {
namespace {

bool dirichlet(Topology t) { return t != Topology::torus_periodic; }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_size(const DomainMesh& mesh, std::span<const double> field) {
  if (field.size() != mesh.node_count())
    throw InvalidArgument("field has " + std::to_string(field.size()) + " entries, mesh has " +
                          std::to_string(mesh.node_count()) + " nodes");
}

// K u = -W Delta u, restricted to interior unknowns.
void apply_stiffness(const DomainMesh& mesh, const std::vector<double>& u, std::vector<double>& out) {
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    if (!mesh.is_interior(i)) {
      out[i] = 0.0;
      continue;
    }
    double s = 0.0;
    for (const auto& link : mesh.links(i)) s += link.coupling * (u[i] - u[link.node]);
    out[i] = s;
  }
}

// Conjugate gradients for K x = b on interior nodes; boundary entries stay zero.
std::vector<double> conjugate_gradient(const DomainMesh& mesh, const std::vector<double>& b, double rel_tol = 1e-14) {
  const std::size_t n = mesh.node_count();
  std::vector<double> x(n, 0.0), r = b, p, Ap(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!mesh.is_interior(i)) r[i] = 0.0;
  p = r;
  const double b_norm = std::sqrt(dot(r, r));
  if (b_norm == 0.0) return x;
  double rr = dot(r, r);
  const std::size_t max_iter = 20 * mesh.interior_count() + 100;
  for (std::size_t it = 0; it < max_iter; ++it) {
    apply_stiffness(mesh, p, Ap);
    const double alpha = rr / dot(p, Ap);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    const double rr_new = dot(r, r);
    if (std::sqrt(rr_new) <= rel_tol * b_norm) return x;
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  // Stagnation at round-off level is acceptable; callers verify residuals they care about.
  return x;
}

}  // namespace

std::string_view to_string(Topology topology) {
  switch (topology) {
    case Topology::interval_dirichlet: return "interval_dirichlet";
    case Topology::rectangle_dirichlet: return "rectangle_dirichlet";
    case Topology::torus_periodic: return "torus_periodic";
  }
  return "unknown";
}

Topology topology_from_string(std::string_view name) {
  if (name == "interval_dirichlet") return Topology::interval_dirichlet;
  if (name == "rectangle_dirichlet") return Topology::rectangle_dirichlet;
  if (name == "torus_periodic") return Topology::torus_periodic;
  throw InvalidArgument("unknown mesh topology '" + std::string(name) + "'");
}

DomainMesh DomainMesh::build(const MeshSpec& spec) {
  const std::size_t dims = spec.nodes.size();
  if (dims != spec.lengths.size()) throw InvalidArgument("mesh needs one length per axis");
  if (spec.topology == Topology::interval_dirichlet && dims != 1) throw InvalidArgument("interval mesh is 1-D");
  if (spec.topology == Topology::rectangle_dirichlet && dims != 2) throw InvalidArgument("rectangle mesh is 2-D");
  if (spec.topology == Topology::torus_periodic && (dims < 1 || dims > 2))
    throw InvalidArgument("torus mesh must be 1-D or 2-D");
  for (std::size_t a = 0; a < dims; ++a) {
    if (spec.nodes[a] < 3) throw InvalidArgument("mesh needs at least 3 nodes per axis");
    if (!(spec.lengths[a] > 0.0) || !std::isfinite(spec.lengths[a]))
      throw InvalidArgument("mesh lengths must be positive");
  }
  if (spec.region && !dirichlet(spec.topology)) throw InvalidArgument("region masks require a Dirichlet mesh");

  DomainMesh mesh;
  mesh.topology_ = spec.topology;
  mesh.nodes_ = spec.nodes;
  mesh.lengths_ = spec.lengths;
  for (std::size_t a = 0; a < dims; ++a) {
    const int intervals = dirichlet(spec.topology) ? spec.nodes[a] - 1 : spec.nodes[a];
    mesh.spacing_.push_back(spec.lengths[a] / intervals);
  }
  const int nx = spec.nodes[0];
  const int ny = dims > 1 ? spec.nodes[1] : 1;
  const std::size_t n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  const int m = static_cast<int>(dims);

  mesh.phi_.assign(n, 0.0);
  mesh.flat_ = !spec.conformal_factor;
  std::vector<NodeKind> kinds(n, NodeKind::interior);
  std::vector<bool> inside(n, true);
  for (std::size_t node = 0; node < n; ++node) {
    const auto pos = mesh.position(node);
    const DomainPoint x(pos.data(), dims);
    if (spec.conformal_factor) {
      mesh.phi_[node] = spec.conformal_factor(x);
      if (!std::isfinite(mesh.phi_[node])) throw InvalidArgument("conformal factor is not finite");
    }
    if (spec.region) inside[node] = spec.region(x);
  }
  if (spec.conformal_factor && mesh.periodic()) {
    for (std::size_t node = 0; node < n; ++node) {
      const auto idx = mesh.multi_index(node);
      for (std::size_t a = 0; a < dims; ++a) {
        if (idx[a] != 0) continue;
        auto pos = mesh.position(node);
        pos[a] += spec.lengths[a];
        const double shifted = spec.conformal_factor(DomainPoint(pos.data(), dims));
        if (std::abs(shifted - mesh.phi_[node]) > 1e-9)
          throw InvalidArgument("conformal factor does not match the torus periodicity along axis " +
                                std::to_string(a));
      }
    }
  }

  auto on_edge = [&](std::size_t node, std::size_t axis) {
    const auto idx = mesh.multi_index(node);
    return idx[axis] == 0 || idx[axis] == mesh.nodes_[axis] - 1;
  };
  if (dirichlet(spec.topology)) {
    for (std::size_t node = 0; node < n; ++node) {
      if (!inside[node]) {
        kinds[node] = NodeKind::exterior;
        mesh.masked_ = true;
        continue;
      }
      bool boundary = false;
      for (std::size_t a = 0; a < dims; ++a) boundary = boundary || on_edge(node, a);
      if (!boundary && spec.region) {
        const auto idx = mesh.multi_index(node);
        for (std::size_t a = 0; a < dims && !boundary; ++a) {
          for (int dir : {-1, 1}) {
            auto j = idx;
            j[a] += dir;
            if (!inside[mesh.index(j[0], j[1])]) boundary = true;
          }
        }
      }
      if (boundary) kinds[node] = NodeKind::boundary;
    }
  }
  mesh.kinds_ = std::move(kinds);

  mesh.weights_.assign(n, 0.0);
  for (std::size_t node = 0; node < n; ++node) {
    if (mesh.kinds_[node] == NodeKind::exterior) continue;
    double w = 1.0;
    for (std::size_t a = 0; a < dims; ++a) {
      w *= mesh.spacing_[a];
      if (dirichlet(spec.topology) && on_edge(node, a)) w *= 0.5;
    }
    mesh.weights_[node] = w * std::exp(m * mesh.phi_[node]);
  }

  for (std::size_t node = 0; node < n; ++node) {
    if (mesh.kinds_[node] == NodeKind::exterior) continue;
    for (std::size_t a = 0; a < dims; ++a) {
      const auto next = mesh.offset(node, a == 0 ? 1 : 0, a == 1 ? 1 : 0);
      if (!next) continue;
      double cell = 1.0;
      for (std::size_t b = 0; b < dims; ++b) {
        if (b == a) continue;
        cell *= mesh.spacing_[b];
        if (dirichlet(spec.topology) && on_edge(node, b)) cell *= 0.5;
      }
      const double h = mesh.spacing_[a];
      const double metric = std::exp((m - 2) * 0.5 * (mesh.phi_[node] + mesh.phi_[next->node]));
      mesh.edges_.push_back({node, next->node, cell * metric / h, static_cast<std::int8_t>(a),
                             static_cast<std::int8_t>(next->wrap[a])});
    }
  }

  std::vector<std::vector<Link>> per_node(n);
  for (const auto& e : mesh.edges_) {
    per_node[e.from].push_back({e.to, e.coupling, e.axis, 1, e.wrap});
    per_node[e.to].push_back({e.from, e.coupling, e.axis, -1, static_cast<std::int8_t>(-e.wrap)});
  }
  mesh.link_offsets_.push_back(0);
  for (auto& links : per_node) {
    mesh.links_.insert(mesh.links_.end(), links.begin(), links.end());
    mesh.link_offsets_.push_back(mesh.links_.size());
  }
  return mesh;
}

double DomainMesh::min_spacing() const noexcept { return *std::min_element(spacing_.begin(), spacing_.end()); }

double DomainMesh::volume() const noexcept {
  double v = 0.0;
  for (double w : weights_) v += w;
  return v;
}

std::size_t DomainMesh::interior_count() const noexcept {
  return static_cast<std::size_t>(std::count(kinds_.begin(), kinds_.end(), NodeKind::interior));
}

std::array<int, 2> DomainMesh::multi_index(std::size_t node) const {
  const int nx = nodes_[0];
  return {static_cast<int>(node % static_cast<std::size_t>(nx)), static_cast<int>(node / static_cast<std::size_t>(nx))};
}

std::size_t DomainMesh::index(int i, int j) const {
  return static_cast<std::size_t>(i) + static_cast<std::size_t>(nodes_[0]) * static_cast<std::size_t>(j);
}

double DomainMesh::coordinate(std::size_t node, int axis) const {
  return multi_index(node)[static_cast<std::size_t>(axis)] * spacing_.at(static_cast<std::size_t>(axis));
}

std::array<double, 2> DomainMesh::position(std::size_t node) const {
  const auto idx = multi_index(node);
  std::array<double, 2> p{idx[0] * spacing_[0], 0.0};
  if (nodes_.size() > 1) p[1] = idx[1] * spacing_[1];
  return p;
}

double DomainMesh::boundary_distance(std::size_t node) const {
  if (periodic()) return std::numeric_limits<double>::infinity();
  if (!masked_) {
    const auto idx = multi_index(node);
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < nodes_.size(); ++a)
      d = std::min(d, std::min(idx[a], nodes_[a] - 1 - idx[a]) * spacing_[a]);
    return d;
  }
  if (!is_interior(node)) return 0.0;
  const auto p = position(node);
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < node_count(); ++k) {
    if (is_interior(k)) continue;
    const auto q = position(k);
    d = std::min(d, std::hypot(p[0] - q[0], p[1] - q[1]));
  }
  return d;
}

std::optional<DomainMesh::Offset> DomainMesh::offset(std::size_t node, int di, int dj) const {
  auto idx = multi_index(node);
  const std::array<int, 2> delta{di, dj};
  Offset out{0, {0, 0}};
  for (std::size_t a = 0; a < 2; ++a) {
    if (a >= nodes_.size()) {
      if (delta[a] != 0) return std::nullopt;
      continue;
    }
    int k = idx[a] + delta[a];
    const int N = nodes_[a];
    if (periodic()) {
      const int w = (k >= 0) ? k / N : -((-k + N - 1) / N);
      k -= w * N;
      out.wrap[a] = w;
    } else if (k < 0 || k >= N) {
      return std::nullopt;
    }
    idx[a] = k;
  }
  out.node = index(idx[0], idx[1]);
  if (!kinds_.empty() && kinds_[out.node] == NodeKind::exterior) return std::nullopt;
  return out;
}

std::span<const DomainMesh::Link> DomainMesh::links(std::size_t node) const {
  return {links_.data() + link_offsets_[node], link_offsets_[node + 1] - link_offsets_[node]};
}

bool operator==(const DomainMesh& a, const DomainMesh& b) {
  return &a == &b || (a.topology_ == b.topology_ && a.nodes_ == b.nodes_ && a.lengths_ == b.lengths_ &&
                      a.phi_ == b.phi_ && a.kinds_ == b.kinds_);
}

ScalarField laplace_beltrami(const DomainMesh& mesh, std::span<const double> field) {
  check_size(mesh, field);
  ScalarField out(field.size(), 0.0);
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!mesh.is_interior(i)) continue;
    double s = 0.0;
    for (const auto& link : mesh.links(i)) s += link.coupling * (field[link.node] - field[i]);
    out[i] = s / mesh.weight(i);
  }
  return out;
}

double integrate(const DomainMesh& mesh, std::span<const double> field) {
  check_size(mesh, field);
  return dot(mesh.weights(), field);
}

double integrate_interior(const DomainMesh& mesh, std::span<const double> field) {
  check_size(mesh, field);
  double s = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i)
    if (mesh.is_interior(i)) s += mesh.weight(i) * field[i];
  return s;
}

double dirichlet_integral(const DomainMesh& mesh, std::span<const double> field) {
  check_size(mesh, field);
  double s = 0.0;
  for (const auto& e : mesh.edges()) {
    const double d = field[e.to] - field[e.from];
    s += e.coupling * d * d;
  }
  return s;
}

ScalarField gradient_norm_sq(const DomainMesh& mesh, std::span<const double> field) {
  check_size(mesh, field);
  ScalarField out(field.size(), 0.0);
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (mesh.kind(i) == NodeKind::exterior) continue;
    double s = 0.0;
    for (int a = 0; a < mesh.dimension(); ++a) {
      auto at = [&](int k) { return mesh.offset(i, a == 0 ? k : 0, a == 1 ? k : 0); };
      const double h = mesh.spacing(a);
      double g = 0.0;
      const auto p1 = at(1), m1 = at(-1);
      if (p1 && m1) {
        g = (field[p1->node] - field[m1->node]) / (2 * h);
      } else if (p1) {
        const auto p2 = at(2);
        g = p2 ? (-3 * field[i] + 4 * field[p1->node] - field[p2->node]) / (2 * h) : (field[p1->node] - field[i]) / h;
      } else if (m1) {
        const auto m2 = at(-2);
        g = m2 ? (3 * field[i] - 4 * field[m1->node] + field[m2->node]) / (2 * h) : (field[i] - field[m1->node]) / h;
      }
      s += g * g;
    }
    out[i] = s * std::exp(-2 * mesh.conformal()[i]);
  }
  return out;
}

EigenResult first_dirichlet_eigenvalue(const DomainMesh& mesh, const EigenOptions& options) {
  if (mesh.periodic()) throw InvalidArgument("a periodic mesh has no Dirichlet spectrum");
  const std::size_t n = mesh.node_count();
  const auto& w = mesh.weights();
  std::vector<double> x(n, 0.0), Kx(n), rhs(n);
  for (std::size_t i = 0; i < n; ++i)
    if (mesh.is_interior(i)) x[i] = 1.0;
  if (mesh.interior_count() == 0) throw InvalidArgument("mesh has no interior nodes");

  auto normalize = [&](std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * v[i] * v[i];
    const double inv = 1.0 / std::sqrt(s);
    for (double& e : v) e *= inv;
  };
  normalize(x);
  double lambda_prev = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) rhs[i] = w[i] * x[i];
    x = conjugate_gradient(mesh, rhs);
    normalize(x);
    apply_stiffness(mesh, x, Kx);
    const double lambda = dot(x, Kx);  // x has unit weighted norm
    if (std::abs(lambda - lambda_prev) < options.tolerance) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += w[i] * x[i];
      if (mean < 0.0)
        for (double& e : x) e = -e;
      return {lambda, std::move(x), it};
    }
    lambda_prev = lambda;
  }
  throw ConvergenceFailure("inverse power iteration did not converge in " + std::to_string(options.max_iterations) +
                           " iterations");
}

ScalarField solve_poisson_dirichlet(const DomainMesh& mesh, std::span<const double> rhs) {
  check_size(mesh, rhs);
  if (mesh.periodic()) throw InvalidArgument("Dirichlet Poisson problem needs a Dirichlet mesh");
  std::vector<double> b(rhs.size(), 0.0);
  for (std::size_t i = 0; i < rhs.size(); ++i)
    if (mesh.is_interior(i)) b[i] = -mesh.weight(i) * rhs[i];
  return conjugate_gradient(mesh, b);
}

ScalarField solve_poisson_with_boundary(const DomainMesh& mesh, std::span<const double> rhs,
                                        std::span<const double> boundary_values) {
  check_size(mesh, rhs);
  check_size(mesh, boundary_values);
  ScalarField lift(rhs.size(), 0.0);
  for (std::size_t i = 0; i < rhs.size(); ++i)
    if (!mesh.is_interior(i)) lift[i] = boundary_values[i];
  const ScalarField lap_lift = laplace_beltrami(mesh, lift);
  ScalarField reduced(rhs.size(), 0.0);
  for (std::size_t i = 0; i < rhs.size(); ++i) reduced[i] = rhs[i] - lap_lift[i];
  ScalarField u = solve_poisson_dirichlet(mesh, reduced);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] += lift[i];
  return u;
}

RicciBound ricci_bound(const DomainMesh& mesh) {
  if (mesh.flat()) return {0.0, false};
  if (mesh.dimension() == 1) return {0.0, true};
  const auto& phi = mesh.conformal();
  double bound = 0.0;
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    if (!mesh.periodic() && !mesh.is_interior(i)) continue;
    double lap = 0.0;
    bool ok = true;
    for (int a = 0; a < 2; ++a) {
      const auto p = mesh.offset(i, a == 0 ? 1 : 0, a == 1 ? 1 : 0);
      const auto q = mesh.offset(i, a == 0 ? -1 : 0, a == 1 ? -1 : 0);
      if (!p || !q) {
        ok = false;
        break;
      }
      const double h = mesh.spacing(a);
      lap += (phi[p->node] - 2 * phi[i] + phi[q->node]) / (h * h);
    }
    if (ok) bound = std::max(bound, std::abs(lap) * std::exp(-2 * phi[i]));
  }
  return {bound, false};
}

void write_fields_csv(std::ostream& out, const DomainMesh& mesh, std::span<const std::string> names,
                      std::span<const ScalarField* const> fields) {
  if (names.size() != fields.size()) throw InvalidArgument("one column name per field");
  for (const auto* f : fields) check_size(mesh, *f);
  out << "node,x";
  if (mesh.dimension() > 1) out << ",y";
  for (const auto& name : names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const auto p = mesh.position(i);
    out << i << ',' << fmt::format("{:.17g}", p[0]);
    if (mesh.dimension() > 1) out << ',' << fmt::format("{:.17g}", p[1]);
    for (const auto* f : fields) out << ',' << fmt::format("{:.17g}", (*f)[i]);
    out << '\n';
  }
}

}  // namespace ptf
