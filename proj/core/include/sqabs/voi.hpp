#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <vector>

#include "sqabs/grid.hpp"
#include "sqabs/superquadric.hpp"

namespace sqabs {

/// Geometric sequence of negative signed-distance levels, decaying toward
/// zero with common ratio alpha. Marching stops once a level rises above
/// `termination`.
struct ThresholdSchedule {
  double t1 = 0.0;           // innermost level, the current minimum SDF
  double alpha = 0.8;        // common ratio in (0, 1)
  double termination = 0.0;  // negative stop level

  double level(int m) const;  // t1 * alpha^m
  /// Number of levels until the sequence crosses `termination`.
  int steps_to_termination() const;
};

/// One 26-connected sub-threshold component of the active voxels.
struct Voi {
  std::vector<std::size_t> voxels;  // linear indices, sorted ascending
  Eigen::Vector3d bbox_min{0, 0, 0};  // world, voxel centers +- spacing/2
  Eigen::Vector3d bbox_max{0, 0, 0};
  Eigen::Vector3d centroid{0, 0, 0};

  std::size_t size() const { return voxels.size(); }
  Eigen::Vector3d bbox_lengths() const { return bbox_max - bbox_min; }
};

/// Builds the schedule from the current active minimum. Returns nullopt
/// when no active voxel is negative. termination = termination_ratio * (-t)
/// with t the grid truncation.
std::optional<ThresholdSchedule> schedule(const VoxelGrid& grid, double alpha,
                                          double termination_ratio);

/// Maximal 26-connected components of {active voxels with d <= threshold},
/// ordered by their smallest linear voxel index. Requires threshold < 0.
std::vector<Voi> connected_components(const VoxelGrid& grid, double threshold);

/// Keeps components with at least n_c voxels, order preserved.
std::vector<Voi> filter_vois(std::vector<Voi> comps, std::size_t n_c);

/// Ellipsoid seed for a VOI: unit exponents, scales = gamma * bounding-box
/// lengths (floored at half a voxel), identity rotation, centered at the
/// centroid when the voxel there is interior, otherwise at the nearest
/// active interior voxel center.
Superquadric init_primitive(const Voi& voi, const VoxelGrid& grid, double gamma);

}  // namespace sqabs
