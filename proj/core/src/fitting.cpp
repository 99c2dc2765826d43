#include "sqabs/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <ceres/ceres.h>
#include <ceres/jet.h>

#include "sqabs/errors.hpp"

namespace sqabs {

namespace {

constexpr double kSigmaFloorRatio = 0.05;  // sigma^2 >= (0.05 t)^2
constexpr double kScaleBoundFactor = 1.5;  // upper scale bound vs grid diagonal

using Jet11 = ceres::Jet<double, kNumParams>;

double wrap_angle(double a) { return std::remainder(a, 2.0 * M_PI); }

template <typename T>
T clamp_sym(const T& v, double t) {
  if (v > T(t)) return T(t);
  if (v < T(-t)) return T(-t);
  return v;
}

double scale_min_for(const VoxelGrid& grid) { return 0.5 * grid.spacing; }

struct Bounds {
  double lo[kNumParams];
  double hi[kNumParams];
};

Bounds parameter_bounds(const VoxelGrid& grid, double t) {
  Bounds b;
  const double smin = scale_min_for(grid);
  const double smax = kScaleBoundFactor * std::max(grid.world_diagonal(), grid.spacing);
  const Eigen::Vector3d lo = grid.min_corner().array() - t;
  const Eigen::Vector3d hi = grid.max_corner().array() + t;
  const double unbounded = std::numeric_limits<double>::infinity();
  b.lo[kParamEps1] = kEpsMin;
  b.hi[kParamEps1] = kEpsMax;
  b.lo[kParamEps2] = kEpsMin;
  b.hi[kParamEps2] = kEpsMax;
  for (int a = 0; a < 3; ++a) {
    b.lo[kParamScaleX + a] = smin;
    b.hi[kParamScaleX + a] = smax;
    b.lo[kParamTransX + a] = lo[a];
    b.hi[kParamTransX + a] = hi[a];
  }
  for (int a = kParamYaw; a <= kParamRoll; ++a) {
    b.lo[a] = -unbounded;
    b.hi[a] = unbounded;
  }
  return b;
}

void clamp_into_bounds(double* p, const Bounds& b) {
  for (int i = 0; i < kNumParams; ++i) {
    if (std::isfinite(b.lo[i])) p[i] = std::max(p[i], b.lo[i]);
    if (std::isfinite(b.hi[i])) p[i] = std::min(p[i], b.hi[i]);
  }
}

/// Residuals sqrt(P_i) * (clamp(d_theta(x_i)) - clamp(d_i)) with an
/// analytic (autodiff) Jacobian. Rows with NaN poison the step, which the
/// trust region rejects.
class WeightedTruncatedResidual : public ceres::CostFunction {
 public:
  WeightedTruncatedResidual(std::vector<Eigen::Vector3d> points,
                            std::vector<double> targets,
                            std::vector<double> sqrt_weights, double t)
      : points_(std::move(points)),
        targets_(std::move(targets)),
        sqrt_weights_(std::move(sqrt_weights)),
        t_(t) {
    set_num_residuals(static_cast<int>(points_.size()));
    mutable_parameter_block_sizes()->push_back(kNumParams);
  }

  bool Evaluate(double const* const* params, double* residuals,
                double** jacobians) const override {
    const double* p = params[0];
    if (!jacobians || !jacobians[0]) {
      for (std::size_t i = 0; i < points_.size(); ++i) {
        const double d = clamp_sym(radial_sdf_params(p, points_[i]), t_);
        residuals[i] = sqrt_weights_[i] * (d - targets_[i]);
        if (!std::isfinite(residuals[i])) return false;
      }
      return true;
    }
    Jet11 jp[kNumParams];
    for (int j = 0; j < kNumParams; ++j) jp[j] = Jet11(p[j], j);
    double* jac = jacobians[0];
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const Jet11 d = clamp_sym(radial_sdf_params(jp, points_[i]), t_);
      const Jet11 r = sqrt_weights_[i] * (d - Jet11(targets_[i]));
      residuals[i] = r.a;
      if (!std::isfinite(r.a)) return false;
      for (int j = 0; j < kNumParams; ++j) {
        jac[i * kNumParams + j] = r.v[j];
        if (!std::isfinite(r.v[j])) return false;
      }
    }
    return true;
  }

 private:
  std::vector<Eigen::Vector3d> points_;
  std::vector<double> targets_;
  std::vector<double> sqrt_weights_;
  double t_;
};

/// Index box that certainly contains every voxel within `radius` of center.
struct IndexBox {
  int lo[3];
  int hi[3];
  bool empty = false;
};

IndexBox ball_index_box(const VoxelGrid& grid, const Eigen::Vector3d& center,
                        double radius) {
  IndexBox box;
  for (int a = 0; a < 3; ++a) {
    const double lo = (center[a] - radius - grid.origin[a]) / grid.spacing;
    const double hi = (center[a] + radius - grid.origin[a]) / grid.spacing;
    box.lo[a] = std::max(0, static_cast<int>(std::ceil(lo - 1e-9)));
    box.hi[a] = std::min(grid.dims[a] - 1, static_cast<int>(std::floor(hi + 1e-9)));
    if (box.lo[a] > box.hi[a]) box.empty = true;
  }
  return box;
}

/// Radius of a ball certainly containing the primitive surface: body
/// coordinates on the surface are bounded by the scales.
double enclosing_radius(const Superquadric& q) { return q.scale.norm(); }

// Active band plus the primitive distances at its voxels (one evaluation
// pass shared by the correspondence step).
void band_with_distances(const VoxelGrid& grid, const Superquadric& theta,
                         double a_dist, std::vector<std::size_t>* indices,
                         std::vector<double>* distances) {
  indices->clear();
  if (distances) distances->clear();
  double p[kNumParams];
  theta.to_params(p);
  // |d_theta| <= a implies |x - center| <= |scale| + a.
  const IndexBox box =
      ball_index_box(grid, theta.translation, enclosing_radius(theta) + a_dist);
  if (box.empty) return;
  for (int k = box.lo[2]; k <= box.hi[2]; ++k) {
    for (int j = box.lo[1]; j <= box.hi[1]; ++j) {
      for (int i = box.lo[0]; i <= box.hi[0]; ++i) {
        const std::size_t lin = grid.linear_index(i, j, k);
        if (!grid.active[lin]) continue;
        const double d = radial_sdf_params(p, grid.index_to_world(lin));
        if (d < -a_dist || d > a_dist) continue;
        indices->push_back(lin);
        if (distances) distances->push_back(d);
      }
    }
  }
}

double normalized_change(const Superquadric& a, const Superquadric& b,
                         double diag) {
  double m = 0.0;
  m = std::max(m, std::abs(a.eps1 - b.eps1) / 2.0);
  m = std::max(m, std::abs(a.eps2 - b.eps2) / 2.0);
  for (int i = 0; i < 3; ++i) {
    m = std::max(m, std::abs(a.scale[i] - b.scale[i]) / diag);
    m = std::max(m, std::abs(wrap_angle(a.euler_zyx[i] - b.euler_zyx[i])) / M_PI);
    m = std::max(m, std::abs(a.translation[i] - b.translation[i]) / diag);
  }
  return m;
}

// Axis-relabel candidate: rotate the body frame so a lateral axis takes the
// z role (which binds eps1), permuting scales and swapping exponents.
Superquadric relabel_axis(const Superquadric& q, int axis) {
  Superquadric c = q;
  Eigen::Matrix3d spin;
  if (axis == 0) {
    spin = Eigen::AngleAxisd(M_PI / 2.0, Eigen::Vector3d::UnitY()).toRotationMatrix();
    c.scale = {q.scale.z(), q.scale.y(), q.scale.x()};
  } else {
    spin = Eigen::AngleAxisd(M_PI / 2.0, Eigen::Vector3d::UnitX()).toRotationMatrix();
    c.scale = {q.scale.x(), q.scale.z(), q.scale.y()};
  }
  c.eps1 = q.eps2;
  c.eps2 = q.eps1;
  c.euler_zyx = euler_zyx_from_matrix(q.rotation() * spin);
  return c;
}

FitResult fit_inner(const VoxelGrid& grid, const Superquadric& theta_init,
                    const MarchingConfig& config, int max_iterations,
                    bool allow_restarts);

FitResult run_restarts(const VoxelGrid& grid, FitResult base,
                       const MarchingConfig& config, double t) {
  double best_cost = global_cost(grid, base.theta, t);
  FitResult best = base;
  best.final_cost = best_cost;
  for (const int axis : {0, 1}) {
    const Superquadric seed = relabel_axis(base.theta, axis);
    FitResult cand =
        fit_inner(grid, seed, config, config.restart_em_iterations, false);
    if (cand.degenerate) continue;
    const double cost = global_cost(grid, cand.theta, t);
    if (cost < best_cost) {
      best_cost = cost;
      best = cand;
      best.converged = base.converged;
      best.iterations = base.iterations + cand.iterations;
      best.final_cost = cost;
    }
  }
  return best;
}

FitResult fit_inner(const VoxelGrid& grid, const Superquadric& theta_init,
                    const MarchingConfig& config, int max_iterations,
                    bool allow_restarts) {
  const double t = grid.truncation;
  const double a_dist = config.activation_ratio * t;
  const double diag = std::max(grid.world_diagonal(), grid.spacing);
  const Bounds bounds = parameter_bounds(grid, t);

  FittingState state;
  state.theta = theta_init;
  {
    double p[kNumParams];
    state.theta.to_params(p);
    clamp_into_bounds(p, bounds);
    state.theta = Superquadric::from_params(p);
  }
  state.sigma2 = t;  // reference initialization
  state.p0 = config.p0;

  FitResult result;
  result.theta = state.theta;

  std::vector<double> band_distances;
  const double sigma2_floor = (kSigmaFloorRatio * t) * (kSigmaFloorRatio * t);

  for (int iter = 0; iter < max_iterations; ++iter) {
    band_with_distances(grid, state.theta, a_dist, &state.active_set,
                        &band_distances);
    if (state.active_set.empty()) {
      result.degenerate = true;
      break;
    }

    state.correspondences.resize(state.active_set.size());
    for (std::size_t i = 0; i < state.active_set.size(); ++i) {
      const double d_i = std::clamp(
          static_cast<double>(grid.values[state.active_set[i]]), -t, t);
      state.correspondences[i] =
          posterior(d_i, clamp_sym(band_distances[i], t), state.sigma2,
                    state.p0, t);
    }

    const UpdateResult up = update_primitive(grid, state, t, config);
    if (up.status == UpdateStatus::kSolverFailure) break;
    result.iterations = ++state.iteration;

    // Closed-form variance against the refreshed primitive.
    double ptheta[kNumParams];
    up.theta.to_params(ptheta);
    std::vector<std::pair<double, double>> wr;
    wr.reserve(state.active_set.size());
    for (std::size_t i = 0; i < state.active_set.size(); ++i) {
      const std::size_t lin = state.active_set[i];
      const double d_i =
          std::clamp(static_cast<double>(grid.values[lin]), -t, t);
      const double d_q =
          clamp_sym(radial_sdf_params(ptheta, grid.index_to_world(lin)), t);
      wr.emplace_back(state.correspondences[i], d_i - d_q);
    }
    state.sigma2 = std::max(update_sigma2(wr, state.sigma2), sigma2_floor);

    const double change = normalized_change(state.theta, up.theta, diag);
    state.theta = up.theta;
    result.theta = state.theta;
    if (change < config.em_rel_tol) {
      result.converged = true;
      break;
    }
  }

  const double smin = scale_min_for(grid);
  if (result.theta.scale.maxCoeff() <= smin * 1.001) {
    result.degenerate = true;  // shrunk to a point
  }

  if (allow_restarts && config.axis_restarts && !result.degenerate) {
    return run_restarts(grid, result, config, t);
  }
  result.final_cost = global_cost(grid, result.theta, t);
  return result;
}

}  // namespace

std::vector<std::size_t> active_set(const VoxelGrid& grid,
                                    const Superquadric& theta_prev,
                                    double a_dist) {
  if (!(a_dist > 0.0)) throw std::invalid_argument("a_dist must be positive");
  theta_prev.validate();
  std::vector<std::size_t> indices;
  band_with_distances(grid, theta_prev, a_dist, &indices, nullptr);
  return indices;
}

double posterior(double d_i, double d_theta_i, double sigma2, double p0,
                 double t) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  if (!(t > 0.0)) throw std::invalid_argument("t must be positive");
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("p0 must lie in (0, 1)");
  // Exterior voxels always belong to the Gaussian component.
  if (!(d_i >= -t && d_i < 0.0)) return 1.0;
  const double r = d_i - d_theta_i;
  const double gauss =
      std::exp(-0.5 * r * r / sigma2) / std::sqrt(2.0 * M_PI * sigma2);
  const double num = p0 * gauss;
  const double den = num + (1.0 - p0) / t;
  if (den <= 0.0 || !std::isfinite(den)) return 0.0;
  return num / den;
}

double update_sigma2(
    const std::vector<std::pair<double, double>>& weighted_residuals,
    double previous, bool* stagnated) {
  double wsum = 0.0;
  double acc = 0.0;
  for (const auto& [w, r] : weighted_residuals) {
    wsum += w;
    acc += w * r * r;
  }
  if (stagnated) *stagnated = !(wsum > 0.0);
  if (!(wsum > 0.0)) return previous;
  return acc / wsum;
}

UpdateResult update_primitive(const VoxelGrid& grid, const FittingState& state,
                              double t, const MarchingConfig& config) {
  if (state.active_set.empty()) {
    throw std::invalid_argument("update_primitive needs a nonempty active set");
  }
  if (state.active_set.size() != state.correspondences.size()) {
    throw std::invalid_argument("correspondences misaligned with active set");
  }

  std::vector<Eigen::Vector3d> points;
  std::vector<double> targets;
  std::vector<double> sqrt_weights;
  points.reserve(state.active_set.size());
  for (std::size_t i = 0; i < state.active_set.size(); ++i) {
    const double w = state.correspondences[i];
    if (!(w > 1e-14)) continue;  // zero-weight rows carry no information
    const std::size_t lin = state.active_set[i];
    points.push_back(grid.index_to_world(lin));
    targets.push_back(std::clamp(static_cast<double>(grid.values[lin]), -t, t));
    sqrt_weights.push_back(std::sqrt(w));
  }

  UpdateResult out;
  out.theta = state.theta;
  if (points.empty()) {
    out.status = UpdateStatus::kNoImprovement;
    return out;
  }

  double params[kNumParams];
  state.theta.to_params(params);
  const Bounds bounds = parameter_bounds(grid, t);
  clamp_into_bounds(params, bounds);

  ceres::Problem problem;
  problem.AddResidualBlock(
      new WeightedTruncatedResidual(std::move(points), std::move(targets),
                                    std::move(sqrt_weights), t),
      nullptr, params);
  for (int i = 0; i < kNumParams; ++i) {
    if (std::isfinite(bounds.lo[i])) problem.SetParameterLowerBound(params, i, bounds.lo[i]);
    if (std::isfinite(bounds.hi[i])) problem.SetParameterUpperBound(params, i, bounds.hi[i]);
  }

  ceres::Solver::Options options;
  options.linear_solver_type = ceres::DENSE_NORMAL_CHOLESKY;
  options.trust_region_strategy_type = ceres::LEVENBERG_MARQUARDT;
  options.max_num_iterations = config.solver_max_iterations;
  options.function_tolerance = 1e-8;
  options.logging_type = ceres::SILENT;
  options.minimizer_progress_to_stdout = false;
  options.num_threads = 1;  // keep runs bit-reproducible

  ceres::Solver::Summary summary;
  ceres::Solve(options, &problem, &summary);

  out.cost_before = 2.0 * summary.initial_cost;  // ceres reports 1/2 sum r^2
  out.cost_after = 2.0 * summary.final_cost;
  if (summary.termination_type == ceres::FAILURE || !summary.IsSolutionUsable()) {
    out.status = UpdateStatus::kSolverFailure;
    return out;  // carries the last valid theta
  }
  if (!(out.cost_after < out.cost_before)) {
    out.status = UpdateStatus::kNoImprovement;
    out.cost_after = out.cost_before;
    return out;  // monotone acceptance: keep theta_prev
  }

  params[kParamYaw] = wrap_angle(params[kParamYaw]);
  params[kParamPitch] = wrap_angle(params[kParamPitch]);
  params[kParamRoll] = wrap_angle(params[kParamRoll]);
  out.theta = Superquadric::from_params(params);
  out.status = UpdateStatus::kStepAccepted;
  return out;
}

double weighted_cost(const VoxelGrid& grid,
                     const std::vector<std::size_t>& voxels,
                     const std::vector<double>& weights,
                     const Superquadric& theta, double t,
                     Eigen::Matrix<double, 11, 1>* gradient) {
  if (voxels.size() != weights.size()) {
    throw std::invalid_argument("weights misaligned with voxels");
  }
  double p[kNumParams];
  theta.to_params(p);
  if (!gradient) {
    double cost = 0.0;
    for (std::size_t i = 0; i < voxels.size(); ++i) {
      const double d_i =
          std::clamp(static_cast<double>(grid.values[voxels[i]]), -t, t);
      const double d_q =
          clamp_sym(radial_sdf_params(p, grid.index_to_world(voxels[i])), t);
      cost += weights[i] * (d_q - d_i) * (d_q - d_i);
    }
    return cost;
  }
  Jet11 jp[kNumParams];
  for (int j = 0; j < kNumParams; ++j) jp[j] = Jet11(p[j], j);
  Jet11 cost(0.0);
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    const double d_i =
        std::clamp(static_cast<double>(grid.values[voxels[i]]), -t, t);
    const Jet11 d_q =
        clamp_sym(radial_sdf_params(jp, grid.index_to_world(voxels[i])), t);
    const Jet11 r = d_q - Jet11(d_i);
    cost += weights[i] * r * r;
  }
  *gradient = cost.v;
  return cost.a;
}

double global_cost(const VoxelGrid& grid, const Superquadric& theta, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("t must be positive");
  double p[kNumParams];
  theta.to_params(p);

  // Outside the enclosing ball the primitive distance clamps to +t, so the
  // contribution reduces to (t - d_i)^2 and needs no radial evaluations.
  double base = 0.0;
  for (std::size_t lin = 0; lin < grid.size(); ++lin) {
    if (!grid.active[lin]) continue;
    const double d_i = std::clamp(static_cast<double>(grid.values[lin]), -t, t);
    base += (t - d_i) * (t - d_i);
  }
  const IndexBox box =
      ball_index_box(grid, theta.translation, enclosing_radius(theta) + t);
  if (box.empty) return base;
  double corr = 0.0;
  for (int k = box.lo[2]; k <= box.hi[2]; ++k) {
    for (int j = box.lo[1]; j <= box.hi[1]; ++j) {
      for (int i = box.lo[0]; i <= box.hi[0]; ++i) {
        const std::size_t lin = grid.linear_index(i, j, k);
        if (!grid.active[lin]) continue;
        const double d_i =
            std::clamp(static_cast<double>(grid.values[lin]), -t, t);
        const double d_q =
            clamp_sym(radial_sdf_params(p, grid.index_to_world(lin)), t);
        corr += (d_q - d_i) * (d_q - d_i) - (t - d_i) * (t - d_i);
      }
    }
  }
  return base + corr;
}

FitResult fit(const VoxelGrid& grid, const Superquadric& theta_init,
              const MarchingConfig& config) {
  theta_init.validate();
  config.validate();
  if (!(grid.truncation > 0.0)) {
    throw validation_error("grid must be truncated before fitting");
  }
  return fit_inner(grid, theta_init, config, config.max_em_iterations,
                   config.axis_restarts);
}

RemovalStats removal_stats(const VoxelGrid& grid, const Superquadric& theta) {
  theta.validate();
  RemovalStats stats;
  const IndexBox box =
      ball_index_box(grid, theta.translation, enclosing_radius(theta));
  if (box.empty) return stats;
  for (int k = box.lo[2]; k <= box.hi[2]; ++k) {
    for (int j = box.lo[1]; j <= box.hi[1]; ++j) {
      for (int i = box.lo[0]; i <= box.hi[0]; ++i) {
        const std::size_t lin = grid.linear_index(i, j, k);
        if (!contains(theta, grid.index_to_world(lin))) continue;
        if (!grid.active[lin]) {
          ++stats.n_zero;
        } else if (grid.values[lin] > 0.0f) {
          ++stats.n_plus;
        } else {
          ++stats.n_minus;
        }
      }
    }
  }
  return stats;
}

bool should_remove(const RemovalStats& stats) {
  if (stats.n_minus < 1) return true;
  const double total =
      static_cast<double>(stats.n_plus + stats.n_minus + stats.n_zero);
  return static_cast<double>(stats.n_plus) / total >= 0.5;
}

}  // namespace sqabs
