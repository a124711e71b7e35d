#include "ptf/calculus.hpp"

#include <cmath>
#include <optional>

#include "ptf/errors.hpp"

namespace ptf {
namespace {

// Components of log_{f(node)} of the lifted neighbor at multi-index offset (di, dj).
std::optional<Coords> neighbor_log(const MapField& f, const TargetPoint& base, std::size_t node, int di, int dj) {
  const auto off = f.mesh().offset(node, di, dj);
  if (!off) return std::nullopt;
  return f.target().log_map(base, f.lift_at(*off)).components;
}

// Coordinate derivative d/dx_a of the map at `node`, in log coordinates at f(node).
Coords coordinate_derivative(const MapField& f, const TargetPoint& base, std::size_t node, int axis) {
  const int di = axis == 0 ? 1 : 0, dj = axis == 1 ? 1 : 0;
  const double h = f.mesh().spacing(axis);
  const auto p1 = neighbor_log(f, base, node, di, dj);
  const auto m1 = neighbor_log(f, base, node, -di, -dj);
  if (p1 && m1) return (*p1 - *m1) * (1.0 / (2 * h));
  if (p1) {
    if (const auto p2 = neighbor_log(f, base, node, 2 * di, 2 * dj)) return (4.0 * *p1 - *p2) * (1.0 / (2 * h));
    return *p1 * (1.0 / h);
  }
  if (m1) {
    if (const auto m2 = neighbor_log(f, base, node, -2 * di, -2 * dj)) return (*m2 - 4.0 * *m1) * (1.0 / (2 * h));
    return *m1 * (-1.0 / h);
  }
  return Coords(f.stride());
}

double phi_derivative(const DomainMesh& mesh, std::size_t node, int axis) {
  const auto& phi = mesh.conformal();
  const int di = axis == 0 ? 1 : 0, dj = axis == 1 ? 1 : 0;
  const auto p = mesh.offset(node, di, dj), m = mesh.offset(node, -di, -dj);
  const double h = mesh.spacing(axis);
  if (p && m) return (phi[p->node] - phi[m->node]) / (2 * h);
  if (p) return (phi[p->node] - phi[node]) / h;
  if (m) return (phi[node] - phi[m->node]) / h;
  return 0.0;
}

bool tension_defined(const DomainMesh& mesh, std::size_t node) { return mesh.is_interior(node); }

}  // namespace

MapDifferential differential(const MapField& f) {
  const auto& mesh = f.mesh();
  MapDifferential out;
  out.axes = mesh.dimension();
  out.vectors.reserve(f.size() * static_cast<std::size_t>(out.axes));
  for (std::size_t i = 0; i < f.size(); ++i) {
    const TargetPoint base = f.point(i);
    const double frame = std::exp(-mesh.conformal()[i]);
    for (int a = 0; a < out.axes; ++a) {
      if (mesh.kind(i) == NodeKind::exterior) {
        out.vectors.push_back(f.target().zero_tangent(base));
        continue;
      }
      out.vectors.push_back(f.target().tangent(base, coordinate_derivative(f, base, i, a) * frame));
    }
  }
  return out;
}

double energy(const MapField& f) {
  double e = 0.0;
  for (const auto& edge : f.mesh().edges()) {
    const std::array<int, 2> wrap{edge.axis == 0 ? edge.wrap : 0, edge.axis == 1 ? edge.wrap : 0};
    const double d = f.target().dist(f.point(edge.from), f.lift_at(edge.to, wrap));
    e += 0.5 * edge.coupling * d * d;
  }
  return e;
}

ScalarField energy_density(const MapField& f) {
  const auto& mesh = f.mesh();
  ScalarField e(f.size(), 0.0);
  for (const auto& edge : mesh.edges()) {
    const std::array<int, 2> wrap{edge.axis == 0 ? edge.wrap : 0, edge.axis == 1 ? edge.wrap : 0};
    const double d = f.target().dist(f.point(edge.from), f.lift_at(edge.to, wrap));
    const double half = 0.25 * edge.coupling * d * d;
    e[edge.from] += half;
    e[edge.to] += half;
  }
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = mesh.weight(i) > 0.0 ? e[i] / mesh.weight(i) : 0.0;
  return e;
}

TangentVector tension_at(const MapField& f, std::size_t node) {
  const auto& mesh = f.mesh();
  const TargetPoint base = f.point(node);
  TangentVector v = f.target().zero_tangent(base);
  if (!tension_defined(mesh, node)) return v;
  for (const auto& link : mesh.links(node)) {
    std::array<int, 2> wrap{0, 0};
    wrap[static_cast<std::size_t>(link.axis)] = link.wrap;
    v.components += link.coupling * f.target().log_map(base, f.lift_at(link.node, wrap)).components;
  }
  v.components *= 1.0 / mesh.weight(node);
  return v;
}

TangentField tension_field(const MapField& f) {
  TangentField tau;
  tau.vectors.reserve(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) tau.vectors.push_back(tension_at(f, i));
  return tau;
}

double tension_l2(const MapField& f) {
  const auto tau = tension_field(f);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.mesh().is_interior(i)) continue;
    const double n = f.target().norm(tau[i]);
    s += f.mesh().weight(i) * n * n;
  }
  return std::sqrt(s);
}

ScalarField hessian_norm_sq(const MapField& f) {
  const auto& mesh = f.mesh();
  const int m = mesh.dimension();
  ScalarField out(f.size(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!mesh.is_interior(i)) continue;
    const TargetPoint base = f.point(i);
    // Second coordinate derivatives in normal coordinates at f(x).
    Coords second[2][2];
    bool complete = true;
    for (int a = 0; a < m; ++a) {
      const int di = a == 0 ? 1 : 0, dj = a == 1 ? 1 : 0;
      const double h = mesh.spacing(a);
      const auto p = neighbor_log(f, base, i, di, dj), q = neighbor_log(f, base, i, -di, -dj);
      complete = complete && p && q;
      if (complete) second[a][a] = (*p + *q) * (1.0 / (h * h));
    }
    if (!complete) continue;
    if (m == 2) {
      const auto pp = neighbor_log(f, base, i, 1, 1), pm = neighbor_log(f, base, i, 1, -1);
      const auto mp = neighbor_log(f, base, i, -1, 1), mm = neighbor_log(f, base, i, -1, -1);
      if (!pp || !pm || !mp || !mm) continue;
      const double scale = 1.0 / (4 * mesh.spacing(0) * mesh.spacing(1));
      second[0][1] = (*pp - *pm - *mp + *mm) * scale;
      second[1][0] = second[0][1];
    }
    if (!mesh.flat()) {
      Coords first[2];
      double dphi[2] = {0.0, 0.0};
      for (int a = 0; a < m; ++a) {
        first[a] = coordinate_derivative(f, base, i, a);
        dphi[a] = phi_derivative(mesh, i, a);
      }
      // Gamma^c_ab = delta_ac dphi_b + delta_bc dphi_a - delta_ab dphi_c
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          Coords corr = dphi[b] * first[a] + dphi[a] * first[b];
          if (a == b)
            for (int c = 0; c < m; ++c) corr -= dphi[c] * first[c];
          second[a][b] -= corr;
        }
    }
    double s = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const TangentVector v = f.target().tangent(base, second[a][b]);
        s += f.target().inner(v, v);
      }
    out[i] = s * std::exp(-4 * mesh.conformal()[i]);
  }
  return out;
}

ScalarField distance_field(const MapField& f1, const MapField& f2) {
  f1.require_compatible(f2);
  ScalarField d(f1.size());
  for (std::size_t i = 0; i < f1.size(); ++i) d[i] = f1.target().dist(f1.point(i), f2.point(i));
  return d;
}

double difference_energy(const MapField& f1, const MapField& f2) {
  f1.require_compatible(f2);
  const auto& target = f1.target();
  double e = 0.0;
  for (const auto& edge : f1.mesh().edges()) {
    std::array<int, 2> fwd{0, 0}, back{0, 0};
    fwd[static_cast<std::size_t>(edge.axis)] = edge.wrap;
    back[static_cast<std::size_t>(edge.axis)] = -edge.wrap;
    double sum = 0.0;
    for (int end = 0; end < 2; ++end) {
      const std::size_t here = end == 0 ? edge.from : edge.to;
      const std::size_t there = end == 0 ? edge.to : edge.from;
      const auto& wrap = end == 0 ? fwd : back;
      const TargetPoint p1 = f1.point(here), p2 = f2.point(here);
      const TangentVector d1 = target.log_map(p1, f1.lift_at(there, wrap));
      const TangentVector d2 = target.parallel_transport(p2, p1, target.log_map(p2, f2.lift_at(there, wrap)));
      const TangentVector diff{p1, d1.components - d2.components};
      sum += target.inner(diff, diff);
    }
    e += 0.5 * edge.coupling * 0.5 * sum;
  }
  return e;
}

ScalarField difference_density(const MapField& f1, const MapField& f2) {
  f1.require_compatible(f2);
  const auto df1 = differential(f1);
  const auto df2 = differential(f2);
  const auto& target = f1.target();
  ScalarField out(f1.size(), 0.0);
  for (std::size_t i = 0; i < f1.size(); ++i) {
    const TargetPoint p1 = f1.point(i), p2 = f2.point(i);
    double s = 0.0;
    for (int a = 0; a < df1.axes; ++a) {
      const TangentVector moved = target.parallel_transport(p2, p1, df2.at(i, a));
      const TangentVector diff{p1, df1.at(i, a).components - moved.components};
      s += target.inner(diff, diff);
    }
    out[i] = s;
  }
  return out;
}

MapField geodesic_interpolate(const MapField& f0, const MapField& f1, double t) {
  f0.require_compatible(f1);
  if (t == 0.0) return f0;
  if (t == 1.0) return f1;
  MapField out = f0;
  for (std::size_t i = 0; i < f0.size(); ++i)
    out.set_point(i, f0.target().geodesic_point(f0.point(i), f1.point(i), t));
  return out;
}

MapField harmonic_affine_representative(std::shared_ptr<const DomainMesh> mesh,
                                        std::shared_ptr<const TargetManifold> target,
                                        const HomotopyDescriptor& homotopy) {
  if (!mesh || !target || !mesh->periodic() || target->kind() != ChartKind::flat_torus)
    throw InvalidArgument("affine representatives need a torus domain and a flat torus target");
  HomotopyDescriptor hom = homotopy;
  if (hom.trivial()) {
    hom.rows = target->dimension();
    hom.cols = mesh->dimension();
    hom.matrix.assign(static_cast<std::size_t>(hom.rows * hom.cols), 0);
  }
  MapField f(mesh, target, hom);
  const auto& periods = target->periods();
  for (std::size_t i = 0; i < f.size(); ++i) {
    TargetPoint p{ChartKind::flat_torus, Coords(target->dimension())};
    for (int k = 0; k < hom.rows; ++k) {
      double v = hom.shift.empty() ? 0.0 : hom.shift[static_cast<std::size_t>(k)];
      for (int a = 0; a < hom.cols; ++a)
        v += periods[static_cast<std::size_t>(k)] * hom.at(k, a) * mesh->coordinate(i, a) / mesh->length(a);
      p.coords[k] = v;
    }
    f.set_point(i, p);
  }
  return f;
}

}  // namespace ptf
