#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ptf {

enum class Topology { interval_dirichlet, rectangle_dirichlet, torus_periodic };

std::string_view to_string(Topology topology);
Topology topology_from_string(std::string_view name);

using ScalarField = std::vector<double>;
/// Domain coordinates of a node, one entry per axis.
using DomainPoint = std::span<const double>;

enum class NodeKind : std::uint8_t {
  interior,
  boundary,
  /// Outside a masked region: treated as pinned boundary with zero quadrature weight.
  exterior,
};

struct MeshSpec {
  Topology topology = Topology::interval_dirichlet;
  /// Nodes per axis. Dirichlet axes include both end nodes; periodic axes do not repeat the seam.
  std::vector<int> nodes;
  std::vector<double> lengths;
  /// Conformal factor phi of the metric e^{2 phi} delta. Empty means flat.
  std::function<double(DomainPoint)> conformal_factor;
  /// Optional region predicate (Dirichlet rectangles only); nodes outside become exterior.
  std::function<bool(DomainPoint)> region;
};

/// Uniform structured grid on an interval, a rectangle, or a flat torus (1-D or 2-D),
/// with trapezoidal quadrature and an edge-based second-order Laplace-Beltrami stencil.
///
/// The stencil is assembled from edges: every grid edge e joining nodes i, j along
/// axis a carries a coupling c_e, and
///   (Delta u)_i = (1 / w_i) * sum_{e at i} c_e (u_j - u_i).
/// This makes Delta symmetric for the quadrature pairing and gives the discrete
/// Dirichlet integral sum_e c_e (u_j - u_i)^2.
///
/// Immutable after construction.
class DomainMesh {
 public:
  struct Link {
    std::size_t node;
    double coupling;
    std::int8_t axis;
    std::int8_t direction;  // +1 or -1
    std::int8_t wrap;       // seam crossings along `axis` (torus only)
  };
  struct Edge {
    std::size_t from;
    std::size_t to;  // neighbor in the +axis direction
    double coupling;
    std::int8_t axis;
    std::int8_t wrap;
  };
  struct Offset {
    std::size_t node;
    std::array<int, 2> wrap;
  };

  static DomainMesh build(const MeshSpec& spec);

  Topology topology() const noexcept { return topology_; }
  bool periodic() const noexcept { return topology_ == Topology::torus_periodic; }
  int dimension() const noexcept { return static_cast<int>(nodes_.size()); }
  int nodes_per_axis(int axis) const { return nodes_.at(static_cast<std::size_t>(axis)); }
  double length(int axis) const { return lengths_.at(static_cast<std::size_t>(axis)); }
  double spacing(int axis) const { return spacing_.at(static_cast<std::size_t>(axis)); }
  double min_spacing() const noexcept;
  std::size_t node_count() const noexcept { return kinds_.size(); }
  double volume() const noexcept;

  NodeKind kind(std::size_t node) const { return kinds_[node]; }
  bool is_interior(std::size_t node) const { return kinds_[node] == NodeKind::interior; }
  bool is_boundary(std::size_t node) const { return kinds_[node] != NodeKind::interior; }
  std::size_t interior_count() const noexcept;
  bool masked() const noexcept { return masked_; }

  const std::vector<double>& weights() const noexcept { return weights_; }
  double weight(std::size_t node) const { return weights_[node]; }
  const std::vector<double>& conformal() const noexcept { return phi_; }
  bool flat() const noexcept { return flat_; }

  std::array<int, 2> multi_index(std::size_t node) const;
  std::size_t index(int i, int j = 0) const;
  double coordinate(std::size_t node, int axis) const;
  std::array<double, 2> position(std::size_t node) const;
  /// Grid distance of the node to the Dirichlet boundary (infinite on tori).
  double boundary_distance(std::size_t node) const;

  /// Node at multi-index offset (di, dj); nullopt if it leaves the grid or lands outside the region.
  std::optional<Offset> offset(std::size_t node, int di, int dj = 0) const;

  std::span<const Link> links(std::size_t node) const;
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  friend bool operator==(const DomainMesh& a, const DomainMesh& b);

 private:
  DomainMesh() = default;

  Topology topology_ = Topology::interval_dirichlet;
  std::vector<int> nodes_;
  std::vector<double> lengths_;
  std::vector<double> spacing_;
  std::vector<NodeKind> kinds_;
  std::vector<double> weights_;
  std::vector<double> phi_;
  bool flat_ = true;
  bool masked_ = false;
  std::vector<Edge> edges_;
  std::vector<Link> links_;
  std::vector<std::size_t> link_offsets_;
};

/// Second-order Laplace-Beltrami. Entries at boundary nodes are zero.
ScalarField laplace_beltrami(const DomainMesh& mesh, std::span<const double> field);

/// Quadrature-weighted sum.
double integrate(const DomainMesh& mesh, std::span<const double> field);
/// Quadrature-weighted sum restricted to interior nodes.
double integrate_interior(const DomainMesh& mesh, std::span<const double> field);

/// Discrete Dirichlet integral  sum_e c_e (u_j - u_i)^2  (equals -<Delta u, u> for fields vanishing on the boundary).
double dirichlet_integral(const DomainMesh& mesh, std::span<const double> field);

/// Pointwise |grad u|^2 in the domain metric: central differences inside, one-sided
/// second-order stencils at Dirichlet boundaries.
ScalarField gradient_norm_sq(const DomainMesh& mesh, std::span<const double> field);

struct EigenResult {
  double lambda = 0.0;
  ScalarField eigenfield;  // unit L^2 norm, nonnegative mean
  int iterations = 0;
};

struct EigenOptions {
  int max_iterations = 10000;
  double tolerance = 1e-10;
};

/// Smallest Dirichlet eigenvalue of -Delta by inverse power iteration with CG inner solves.
EigenResult first_dirichlet_eigenvalue(const DomainMesh& mesh, const EigenOptions& options = {});

/// Solves Delta u = rhs at interior nodes with u = 0 on the boundary.
ScalarField solve_poisson_dirichlet(const DomainMesh& mesh, std::span<const double> rhs);

/// Solves Delta u = rhs at interior nodes with u = boundary_values on boundary nodes
/// (interior entries of boundary_values are ignored).
ScalarField solve_poisson_with_boundary(const DomainMesh& mesh, std::span<const double> rhs,
                                        std::span<const double> boundary_values);

struct RicciBound {
  double bound = 0.0;
  /// A conformal factor was supplied on a 1-D mesh, where it carries no curvature.
  bool trivially_flat_1d = false;
};

/// sup |Ric| of the domain metric: zero when flat, max |Delta phi| e^{-2 phi} for 2-D conformal metrics.
RicciBound ricci_bound(const DomainMesh& mesh);

/// Writes `node, x[, y], <name>...` rows.
void write_fields_csv(std::ostream& out, const DomainMesh& mesh, std::span<const std::string> names,
                      std::span<const ScalarField* const> fields);

}  // namespace ptf
