#pragma once

#include <cstdint>

#include <nlohmann/json_fwd.hpp>

namespace sqabs {

/// All pipeline hyperparameters with their reference defaults. Ratios are
/// grid-relative: truncation_ratio scales the voxel spacing,
/// termination_ratio and activation_ratio scale the truncation threshold.
struct MarchingConfig {
  double truncation_ratio = 1.3;   // t = truncation_ratio * spacing
  double alpha = 0.8;              // common ratio of the threshold sequence
  int n_c = 5;                     // minimum voxels per volume of interest
  double gamma = 0.1;              // ellipsoid seed scale ratio
  double termination_ratio = 0.01; // stop level = -termination_ratio * t
  double p0 = 0.01;                // Bernoulli prior of voxel-primitive match
  double activation_ratio = 3.5;   // active band half-width = ratio * t

  int max_em_iterations = 40;      // outer alternation cap per fit
  double em_rel_tol = 1e-3;        // normalized parameter-change stop
  int solver_max_iterations = 25;  // trust-region steps per primitive update
  int restart_em_iterations = 10;  // cap for axis-relabel refits
  bool axis_restarts = true;

  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
  double truncation_for(double spacing) const { return truncation_ratio * spacing; }
};

void to_json(nlohmann::json& j, const MarchingConfig& c);
void from_json(const nlohmann::json& j, MarchingConfig& c);

}  // namespace sqabs
