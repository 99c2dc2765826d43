#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "sqabs/superquadric.hpp"

namespace sqabs {

/// Regular voxel grid holding a (possibly truncated) signed distance per
/// voxel plus an activity mask. Storage is x-fastest: linear index
/// i + nx*(j + ny*k). Spacing is uniform on all axes.
struct VoxelGrid {
  std::array<int, 3> dims{0, 0, 0};
  Eigen::Vector3d origin{0.0, 0.0, 0.0};
  double spacing = 1.0;
  std::vector<float> values;
  std::vector<std::uint8_t> active;
  double truncation = 0.0;  // 0 until truncate() has been applied

  static VoxelGrid make(const std::array<int, 3>& dims,
                        const Eigen::Vector3d& origin, double spacing);

  std::size_t size() const { return values.size(); }

  std::size_t linear_index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) +
                static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
  }

  std::array<int, 3> unpack_index(std::size_t lin) const {
    const int i = static_cast<int>(lin % dims[0]);
    const int j = static_cast<int>((lin / dims[0]) % dims[1]);
    const int k = static_cast<int>(lin / (static_cast<std::size_t>(dims[0]) * dims[1]));
    return {i, j, k};
  }

  bool in_bounds(int i, int j, int k) const {
    return i >= 0 && i < dims[0] && j >= 0 && j < dims[1] && k >= 0 && k < dims[2];
  }

  /// World position of the voxel center at (i, j, k). Throws
  /// std::out_of_range for indices outside the grid.
  Eigen::Vector3d index_to_world(int i, int j, int k) const;

  Eigen::Vector3d index_to_world(std::size_t lin) const {
    const auto ijk = unpack_index(lin);
    return index_to_world(ijk[0], ijk[1], ijk[2]);
  }

  /// Voxel whose center is nearest to the world point (indices clamped to
  /// the grid).
  std::array<int, 3> nearest_index(const Eigen::Vector3d& p) const;

  /// World-space bounds spanned by the voxel centers.
  Eigen::Vector3d min_corner() const { return origin; }
  Eigen::Vector3d max_corner() const {
    return origin + spacing * Eigen::Vector3d(dims[0] - 1, dims[1] - 1, dims[2] - 1);
  }
  double world_diagonal() const { return (max_corner() - min_corner()).norm(); }

  /// Consistency check: dims positive, array lengths match, values within
  /// truncation when set. Throws validation_error on failure.
  void validate() const;

  /// Number of active voxels with d < 0 (the volumes still to be captured).
  std::size_t active_interior_count() const;
};

/// Clamps every stored value into [-t, t] and records t. Requires t > 0.
void truncate(VoxelGrid& grid, double t);

/// Minimum signed distance over active voxels, or nullopt when no active
/// voxel is negative ("no interior" signal).
std::optional<double> min_active_sdf(const VoxelGrid& grid);

/// Deactivates every active voxel that is interior to both the target SDF
/// and the primitive (d <= 0 and d_theta <= 0). Returns the number of
/// voxels flipped. Exterior voxels are never touched, and the stored SDF
/// values are left intact.
std::size_t deactivate_fitted(VoxelGrid& grid, const Superquadric& prim);

}  // namespace sqabs
