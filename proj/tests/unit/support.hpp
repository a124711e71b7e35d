#pragma once

#include <memory>

#include "ptf/map_field.hpp"

namespace ptf::test {

inline std::shared_ptr<const DomainMesh> interval_mesh(int n, double length = 1.0) {
  return std::make_shared<const DomainMesh>(DomainMesh::build({Topology::interval_dirichlet, {n}, {length}, {}, {}}));
}

inline std::shared_ptr<const DomainMesh> square_mesh(int n, double length = 1.0,
                                                     std::function<double(DomainPoint)> phi = {}) {
  return std::make_shared<const DomainMesh>(
      DomainMesh::build({Topology::rectangle_dirichlet, {n, n}, {length, length}, std::move(phi), {}}));
}

inline std::shared_ptr<const DomainMesh> torus_mesh(std::vector<int> nodes, std::vector<double> lengths) {
  return std::make_shared<const DomainMesh>(
      DomainMesh::build({Topology::torus_periodic, std::move(nodes), std::move(lengths), {}, {}}));
}

inline std::shared_ptr<const TargetManifold> share(TargetManifold m) {
  return std::make_shared<const TargetManifold>(std::move(m));
}

}  // namespace ptf::test
