#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <vector>

#include "sqabs/grid.hpp"
#include "sqabs/mesh.hpp"
#include "sqabs/superquadric.hpp"

namespace sqabs {

using PointSet = std::vector<Eigen::Vector3d>;

/// Containment predicate over world points plus suggested evaluation
/// bounds. contains_lattice exists so backends can evaluate whole grid
/// lines at once (the mesh backend casts one ray per line).
class OccupancyOracle {
 public:
  virtual ~OccupancyOracle() = default;
  virtual bool contains_point(const Eigen::Vector3d& p) const = 0;
  virtual Eigen::Vector3d bounds_min() const = 0;
  virtual Eigen::Vector3d bounds_max() const = 0;

  /// Fills out[i + n*(j + n*k)] for the n^3 cell-center lattice of [lo, hi].
  virtual void contains_lattice(const Eigen::Vector3d& lo,
                                const Eigen::Vector3d& hi, int n,
                                unsigned threads,
                                std::vector<std::uint8_t>& out) const;
};

std::unique_ptr<OccupancyOracle> oracle_from_primitives(
    std::vector<Superquadric> prims);
/// Trilinear interpolation of the stored SDF; points outside the grid are
/// exterior.
std::unique_ptr<OccupancyOracle> oracle_from_grid(VoxelGrid grid);
/// Ray-parity containment for a watertight mesh.
std::unique_ptr<OccupancyOracle> oracle_from_mesh(TriangleMesh mesh);

/// Union of per-primitive surface samples with points strictly inside any
/// other primitive removed, downsampled to at most max_points with the
/// given seed. Throws data_error when every sample is swallowed (fully
/// nested primitives).
PointSet predicted_surface_points(const std::vector<Superquadric>& prims,
                                  double spacing, std::uint64_t seed,
                                  std::size_t max_points = 60000);

/// Symmetric average nearest-neighbor L1 distance:
/// mean over y of min_x |y-x|_1 plus mean over x of min_y |x-y|_1.
double chamfer_l1(const PointSet& x, const PointSet& y, unsigned threads = 1);

struct IouResult {
  double value = 0.0;
  bool empty_union = false;
};

/// Volumetric intersection-over-union estimated on a grid_n^3 cell-center
/// lattice spanning [lo, hi]. An empty union yields 0 with the flag set.
IouResult iou(const OccupancyOracle& pred, const OccupancyOracle& truth,
              const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
              int grid_n, unsigned threads = 1);

/// Zero-crossing points of the stored SDF along grid edges (linear
/// interpolation); the ground-truth surface set for grid inputs.
PointSet surface_points_from_grid(const VoxelGrid& grid);

/// Barycentric-lattice samples over every triangle with sub-triangle edge
/// length at most target_spacing, downsampled to max_points.
PointSet surface_points_from_mesh(const TriangleMesh& mesh,
                                  double target_spacing, std::uint64_t seed,
                                  std::size_t max_points = 60000);

/// Joint bounds of two oracles, padded by `pad` on every side.
void joint_bounds(const OccupancyOracle& a, const OccupancyOracle& b,
                  double pad, Eigen::Vector3d* lo, Eigen::Vector3d* hi);

}  // namespace sqabs
