#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "ptf/geometry.hpp"
#include "ptf/mesh.hpp"

namespace ptf {

/// Homotopy class of a torus-to-torus map: integer matrix A (target dim x domain dim)
/// and a real shift. The lift satisfies f(x + L_a e_a) = f(x) + diag(P) A e_a, P the
/// target periods. Empty for every other configuration (all maps homotopic).
struct HomotopyDescriptor {
  int rows = 0;
  int cols = 0;
  std::vector<int> matrix;  // row-major
  std::vector<double> shift;

  bool trivial() const noexcept { return matrix.empty(); }
  int at(int r, int c) const { return matrix.at(static_cast<std::size_t>(r * cols + c)); }
  /// Same class: equal matrices (shift ignored).
  bool same_class(const HomotopyDescriptor& other) const noexcept {
    return rows == other.rows && cols == other.cols && matrix == other.matrix;
  }
  friend bool operator==(const HomotopyDescriptor&, const HomotopyDescriptor&) = default;
};

/// Node-indexed map f: Omega -> N. Torus targets store lift coordinates.
class MapField {
 public:
  MapField(std::shared_ptr<const DomainMesh> mesh, std::shared_ptr<const TargetManifold> target,
           HomotopyDescriptor homotopy = {});

  static MapField from_function(std::shared_ptr<const DomainMesh> mesh, std::shared_ptr<const TargetManifold> target,
                                const std::function<TargetPoint(DomainPoint)>& fn, HomotopyDescriptor homotopy = {});

  const DomainMesh& mesh() const noexcept { return *mesh_; }
  const TargetManifold& target() const noexcept { return *target_; }
  const std::shared_ptr<const DomainMesh>& mesh_ptr() const noexcept { return mesh_; }
  const std::shared_ptr<const TargetManifold>& target_ptr() const noexcept { return target_; }
  const HomotopyDescriptor& homotopy() const noexcept { return homotopy_; }
  std::size_t size() const noexcept { return mesh_->node_count(); }
  int stride() const noexcept { return stride_; }

  TargetPoint point(std::size_t node) const;
  /// Stores p (validated against the target chart).
  void set_point(std::size_t node, const TargetPoint& p);
  /// Lift of the neighbor reached through `offset`, continued across seams.
  TargetPoint lift_at(std::size_t node, std::span<const int> wrap) const;
  TargetPoint lift_at(const DomainMesh::Offset& offset) const { return lift_at(offset.node, offset.wrap); }
  /// Lift increment when crossing the seam of domain axis `axis` once in the + direction.
  Coords seam_jump(int axis) const;

  std::span<const double> raw() const noexcept { return coords_; }
  std::span<double> raw() noexcept { return coords_; }

  /// Throws ChartMismatch if a point is off the target, HomotopyMismatch on an inconsistent descriptor.
  void validate(double tol = 1e-9) const;

  /// Same mesh, target and homotopy class; throws otherwise.
  void require_compatible(const MapField& other) const;

  friend bool operator==(const MapField& a, const MapField& b);

 private:
  std::shared_ptr<const DomainMesh> mesh_;
  std::shared_ptr<const TargetManifold> target_;
  HomotopyDescriptor homotopy_;
  int stride_ = 0;
  std::vector<double> coords_;
};

/// One tangent vector per node, based at the corresponding map point.
struct TangentField {
  std::vector<TangentVector> vectors;

  std::size_t size() const noexcept { return vectors.size(); }
  const TangentVector& operator[](std::size_t i) const { return vectors[i]; }
  TangentVector& operator[](std::size_t i) { return vectors[i]; }
};

/// Zero vectors based at f.
TangentField zero_field(const MapField& f);
/// Pointwise norms |v(x)| in the target metric.
ScalarField pointwise_norm(const MapField& f, const TangentField& v);
/// Quadrature pairing  sum_x w_x <a(x), b(x)>.
double pairing(const MapField& f, const TangentField& a, const TangentField& b);
/// x -> exp_{f(x)}(s v(x)); boundary semantics are the caller's.
MapField exp_perturb(const MapField& f, const TangentField& v, double s);

/// Column format: '#' header lines with mesh/target/homotopy descriptors, then
/// `node,x[,y],chart,c0,...` with coordinates printed round-trip exactly.
void write_map_csv(std::ostream& out, const MapField& f);
/// Reads write_map_csv output. Without `mesh`, the header must describe a flat mesh.
MapField read_map_csv(std::istream& in, std::shared_ptr<const DomainMesh> mesh = nullptr);

}  // namespace ptf
