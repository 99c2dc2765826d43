#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <vector>

#include "sqabs/grid.hpp"

namespace sqabs {

/// Indexed triangle soup. Consumers assume watertightness; mesh_to_sdf
/// verifies it by ray-parity consistency and rejects open meshes.
struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;

  void validate() const;
  Eigen::Vector3d min_corner() const;
  Eigen::Vector3d max_corner() const;
};

/// Minimal OBJ reader: `v` and `f` records, faces must be triangles.
/// Vertex attributes after a '/' are ignored.
TriangleMesh load_obj(const std::filesystem::path& path);

/// Unsigned distance from p to the closest point of triangle (a, b, c).
double point_triangle_distance(const Eigen::Vector3d& p,
                               const Eigen::Vector3d& a,
                               const Eigen::Vector3d& b,
                               const Eigen::Vector3d& c);

/// Discretizes the mesh SDF: per voxel the exact point-triangle distance,
/// signed by ray parity (odd crossings = interior) along two orthogonal
/// directions with a third as tiebreaker. Throws data_error when the two
/// directions disagree on more than 0.1% of the voxels (non-watertight
/// input).
VoxelGrid mesh_to_sdf(const TriangleMesh& mesh, const std::array<int, 3>& dims,
                      const Eigen::Vector3d& origin, double spacing,
                      unsigned threads = 1);

/// True iff p is interior by ray parity (used by the metrics oracle).
bool mesh_contains(const TriangleMesh& mesh, const Eigen::Vector3d& p);

namespace detail {
/// Sorted coordinates where the axis-parallel line through (u, v) crosses
/// the mesh; `axis` is the free coordinate index, (ua, va) the other two.
std::vector<double> mesh_line_crossings(const TriangleMesh& mesh, int axis,
                                        int ua, int va, double u, double v);
}  // namespace detail

}  // namespace sqabs
