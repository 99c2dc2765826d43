#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sqabs/config.hpp"
#include "sqabs/fitting.hpp"
#include "sqabs/grid.hpp"
#include "sqabs/superquadric.hpp"

namespace sqabs {

/// Per-primitive bookkeeping recorded while marching.
struct PrimitiveDiagnostics {
  std::size_t voi_size = 0;
  int iterations = 0;
  double final_cost = 0.0;
  RemovalStats removal;
  bool accepted = false;
  int round = 0;
};

struct AbstractionResult {
  std::vector<Superquadric> primitives;  // accepted, in discovery order
  std::vector<PrimitiveDiagnostics> diagnostics;  // every fit, kept or not
  int rounds = 0;
  bool forced_stop = false;  // stopped by the no-progress guard
  double wall_time_seconds = 0.0;
};

/// JSON array of primitive records (the result file payload).
nlohmann::json primitives_to_json(const std::vector<Superquadric>& prims);
std::vector<Superquadric> primitives_from_json(const nlohmann::json& j);

/// Diagnostics report; excludes nothing, so strip wall_time_seconds before
/// byte-comparing runs.
nlohmann::json diagnostics_to_json(const AbstractionResult& result,
                                   const MarchingConfig& config);

/// Runs the complete abstraction: alternates connectivity marching over the
/// signed-distance levels with per-VOI primitive fitting, deactivating
/// captured volumes, until no prominent interior volume remains. The grid
/// must already be truncated to config.truncation_for(grid.spacing).
AbstractionResult march(VoxelGrid& grid, const MarchingConfig& config);

}  // namespace sqabs
