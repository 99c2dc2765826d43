#pragma once

#include <filesystem>
#include <vector>

#include "sqabs/grid.hpp"
#include "sqabs/superquadric.hpp"

namespace sqabs {

/// Binary SDF container:
///   bytes 0-3  magic "MPSF"
///   u32        version (1)
///   u32 x3     nx, ny, nz
///   f64 x3     origin
///   f64        spacing
///   f32 x N    values, x-fastest
/// All little-endian. Values are stored as written; truncation is the
/// caller's business.
VoxelGrid load_sdf(const std::filesystem::path& path);
void store_sdf(const VoxelGrid& grid, const std::filesystem::path& path);

/// Text variant: first line "nx ny nz ox oy oz h", then one value per line
/// in x-fastest order.
VoxelGrid load_sdf_text(const std::filesystem::path& path);
void store_sdf_text(const VoxelGrid& grid, const std::filesystem::path& path);

/// Loads either format: binary when the file starts with the magic tag,
/// text otherwise.
VoxelGrid load_sdf_any(const std::filesystem::path& path);

/// Discretizes the union of primitives (pointwise minimum of their radial
/// SDFs) on the given grid. Values are left untruncated.
VoxelGrid gen_superquadric_sdf(const std::vector<Superquadric>& prims,
                               const std::array<int, 3>& dims,
                               const Eigen::Vector3d& origin, double spacing,
                               unsigned threads = 1);

}  // namespace sqabs
