#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "sqabs/config.hpp"
#include "sqabs/grid.hpp"
#include "sqabs/superquadric.hpp"

namespace sqabs {

/// State of one primitive's alternating correspondence/update loop.
struct FittingState {
  Superquadric theta;
  double sigma2 = 0.0;                   // Gaussian variance, length^2
  double p0 = 0.01;                      // Bernoulli prior
  std::vector<std::size_t> active_set;   // voxel indices within the band
  std::vector<double> correspondences;   // P_ik aligned with active_set
  int iteration = 0;
};

/// Voxel census of a primitive: exterior (d > 0, active), interior
/// (d <= 0, active) and already-deactivated voxels it contains.
struct RemovalStats {
  std::size_t n_plus = 0;
  std::size_t n_minus = 0;
  std::size_t n_zero = 0;
};

struct FitResult {
  Superquadric theta;
  bool converged = false;
  bool degenerate = false;  // active band emptied out (shrunk-away primitive)
  int iterations = 0;
  double final_cost = 0.0;  // truncated SSE over active voxels
};

/// Active voxels whose current primitive distance lies within
/// [-a_dist, a_dist]; the only ones entering the least-squares update.
std::vector<std::size_t> active_set(const VoxelGrid& grid,
                                    const Superquadric& theta_prev,
                                    double a_dist);

/// Posterior probability that a voxel with target distance d_i is explained
/// by the primitive (Gaussian around d_theta_i) rather than by the uniform
/// interior component on [-t, 0). Exterior voxels (d_i >= 0) always return 1.
double posterior(double d_i, double d_theta_i, double sigma2, double p0,
                 double t);

/// Closed-form variance update: weighted mean squared residual.
/// weights_residuals holds (P_ik, d_i - d_theta_i) pairs. When all weights
/// vanish, returns `previous` and sets *stagnated.
double update_sigma2(const std::vector<std::pair<double, double>>& weighted_residuals,
                     double previous, bool* stagnated = nullptr);

enum class UpdateStatus { kStepAccepted, kNoImprovement, kSolverFailure };

struct UpdateResult {
  Superquadric theta;     // new estimate, or theta_prev when not accepted
  UpdateStatus status = UpdateStatus::kStepAccepted;
  double cost_before = 0.0;
  double cost_after = 0.0;
};

/// One bounded trust-region solve of the weighted truncated-SDF
/// least-squares problem over the 11 parameters. The step is accepted only
/// if the weighted cost does not increase; otherwise state.theta is
/// returned unchanged.
UpdateResult update_primitive(const VoxelGrid& grid, const FittingState& state,
                              double t, const MarchingConfig& config);

/// Weighted cost of the correspondence-frozen objective and its gradient
/// with respect to the 11 parameters (autodiff route, shared with the
/// solver). Both distances are clamped to [-t, t] before differencing.
double weighted_cost(const VoxelGrid& grid,
                     const std::vector<std::size_t>& voxels,
                     const std::vector<double>& weights,
                     const Superquadric& theta, double t,
                     Eigen::Matrix<double, 11, 1>* gradient = nullptr);

/// Unweighted truncated SSE over all active voxels; comparable across
/// candidate primitives, used for restart selection and diagnostics.
double global_cost(const VoxelGrid& grid, const Superquadric& theta, double t);

/// Alternates correspondence inference and primitive updates until the
/// normalized parameter change drops below config.em_rel_tol, then tries
/// axis-relabeled restarts and returns the lowest-cost candidate.
FitResult fit(const VoxelGrid& grid, const Superquadric& theta_init,
              const MarchingConfig& config);

/// Census of the voxels contained in the primitive.
RemovalStats removal_stats(const VoxelGrid& grid, const Superquadric& theta);

/// Removal rule: a primitive is dropped when it captured no interior voxel
/// or when at least half of what it covers is exterior.
bool should_remove(const RemovalStats& stats);

}  // namespace sqabs
