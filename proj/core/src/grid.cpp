#include "sqabs/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sqabs/errors.hpp"

namespace sqabs {

VoxelGrid VoxelGrid::make(const std::array<int, 3>& dims,
                          const Eigen::Vector3d& origin, double spacing) {
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) {
    throw validation_error("grid dims must be positive");
  }
  if (!(spacing > 0.0)) {
    throw validation_error("grid spacing must be positive");
  }
  VoxelGrid g;
  g.dims = dims;
  g.origin = origin;
  g.spacing = spacing;
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  g.values.assign(n, 0.0f);
  g.active.assign(n, 1);
  return g;
}

Eigen::Vector3d VoxelGrid::index_to_world(int i, int j, int k) const {
  if (!in_bounds(i, j, k)) {
    throw std::out_of_range("voxel index (" + std::to_string(i) + ", " +
                            std::to_string(j) + ", " + std::to_string(k) +
                            ") outside grid");
  }
  return origin + spacing * Eigen::Vector3d(i, j, k);
}

std::array<int, 3> VoxelGrid::nearest_index(const Eigen::Vector3d& p) const {
  std::array<int, 3> idx;
  for (int a = 0; a < 3; ++a) {
    const int i = static_cast<int>(std::lround((p[a] - origin[a]) / spacing));
    idx[a] = std::clamp(i, 0, dims[a] - 1);
  }
  return idx;
}

void VoxelGrid::validate() const {
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) {
    throw validation_error("grid dims must be positive");
  }
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (values.size() != n || active.size() != n) {
    throw validation_error("grid array lengths do not match dims");
  }
  if (!(spacing > 0.0)) {
    throw validation_error("grid spacing must be positive");
  }
  if (truncation > 0.0) {
    for (const float v : values) {
      if (std::abs(static_cast<double>(v)) > truncation * (1.0 + 1e-12)) {
        throw validation_error("grid value exceeds recorded truncation");
      }
    }
  }
}

std::size_t VoxelGrid::active_interior_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (active[i] && values[i] < 0.0f) ++n;
  }
  return n;
}

void truncate(VoxelGrid& grid, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("truncation must be positive");
  const float tf = static_cast<float>(t);
  for (float& v : grid.values) v = std::clamp(v, -tf, tf);
  grid.truncation = t;
}

std::optional<double> min_active_sdf(const VoxelGrid& grid) {
  bool found = false;
  float best = 0.0f;
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    if (!grid.active[i]) continue;
    if (grid.values[i] < best) {
      best = grid.values[i];
      found = true;
    }
  }
  if (!found) return std::nullopt;
  return static_cast<double>(best);
}

std::size_t deactivate_fitted(VoxelGrid& grid, const Superquadric& prim) {
  prim.validate();
  double p[kNumParams];
  prim.to_params(p);
  std::size_t flipped = 0;
  for (std::size_t lin = 0; lin < grid.values.size(); ++lin) {
    if (!grid.active[lin] || grid.values[lin] > 0.0f) continue;
    if (radial_sdf_params(p, grid.index_to_world(lin)) <= 0.0) {
      grid.active[lin] = 0;
      ++flipped;
    }
  }
  return flipped;
}

}  // namespace sqabs
