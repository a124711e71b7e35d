#pragma once

#include "ptf/map_field.hpp"

namespace ptf {

/// df(nu_a) per node and domain axis, nu_a the orthonormal frame of the domain metric.
struct MapDifferential {
  int axes = 0;
  std::vector<TangentVector> vectors;  // node-major

  const TangentVector& at(std::size_t node, int axis) const {
    return vectors[node * static_cast<std::size_t>(axes) + static_cast<std::size_t>(axis)];
  }
};

/// Central log-differences [log_f(x) f(x+h) - log_f(x) f(x-h)] / 2h; one-sided
/// second-order at Dirichlet boundaries; lifts continued across torus seams.
MapDifferential differential(const MapField& f);

/// Discrete energy  1/2 sum_e c_e d(f_i, f_j)^2  over mesh edges. Its quadrature
/// gradient is exactly minus tension_field(f).
double energy(const MapField& f);

/// Pointwise energy density, each edge's energy split evenly between its end nodes;
/// integrate(mesh, energy_density(f)) == energy(f).
ScalarField energy_density(const MapField& f);

/// tau(f)(x) = (1/w_x) sum_{edges e at x} c_e log_{f(x)} f(y_e) at interior (or periodic)
/// nodes; zero at Dirichlet boundary nodes.
TangentField tension_field(const MapField& f);
/// tension_field(f) at a single node.
TangentVector tension_at(const MapField& f, std::size_t node);

/// sqrt( sum over interior nodes w |tau|^2 ).
double tension_l2(const MapField& f);

/// |nabla df|^2 from second differences of log_{f(x)} f(.) (normal coordinates at f(x)),
/// with the Levi-Civita correction of a conformal domain metric. Zero at boundary nodes.
ScalarField hessian_norm_sq(const MapField& f);

/// Node-wise distance between lifts. Torus maps must share the homotopy class.
ScalarField distance_field(const MapField& f1, const MapField& f2);

/// 1/2 sum_e c_e * mean over both edge ends of |D1 - P D2|^2, where D_k is the edge
/// log-difference of f_k at that end and P transports from f2 to f1 along the
/// connecting geodesic. Reduces to energy(f1) when f2 is constant.
double difference_energy(const MapField& f1, const MapField& f2);

/// sum_a |df1(nu_a) - P df2(nu_a)|^2 per node, from the central differential.
ScalarField difference_density(const MapField& f1, const MapField& f2);

/// x -> exp_{f0(x)}(t log_{f0(x)} f1(x)); exact copies at t = 0 and t = 1.
MapField geodesic_interpolate(const MapField& f0, const MapField& f1, double t);

/// Affine lift f(x) = diag(P) A diag(1/L) x + shift for torus-to-torus configurations.
MapField harmonic_affine_representative(std::shared_ptr<const DomainMesh> mesh,
                                        std::shared_ptr<const TargetManifold> target,
                                        const HomotopyDescriptor& homotopy);

}  // namespace ptf
