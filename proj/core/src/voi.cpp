#include "sqabs/voi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sqabs/errors.hpp"

namespace sqabs {

double ThresholdSchedule::level(int m) const {
  return t1 * std::pow(alpha, m);
}

int ThresholdSchedule::steps_to_termination() const {
  if (t1 >= termination) return 0;
  return static_cast<int>(
      std::ceil(std::log(termination / t1) / std::log(alpha)));
}

std::optional<ThresholdSchedule> schedule(const VoxelGrid& grid, double alpha,
                                          double termination_ratio) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  if (!(termination_ratio > 0.0 && termination_ratio < 1.0)) {
    throw std::invalid_argument("termination_ratio must lie in (0, 1)");
  }
  if (!(grid.truncation > 0.0)) {
    throw validation_error("grid must be truncated before scheduling");
  }
  const auto min_sdf = min_active_sdf(grid);
  if (!min_sdf) return std::nullopt;
  ThresholdSchedule s;
  s.t1 = *min_sdf;
  s.alpha = alpha;
  s.termination = termination_ratio * (-grid.truncation);
  return s;
}

std::vector<Voi> connected_components(const VoxelGrid& grid, double threshold) {
  if (!(threshold < 0.0)) {
    throw std::invalid_argument("component threshold must be negative");
  }
  const float thr = static_cast<float>(threshold);
  const std::size_t n = grid.size();
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<Voi> comps;
  std::vector<std::size_t> stack;

  for (std::size_t seed = 0; seed < n; ++seed) {
    if (seen[seed] || !grid.active[seed] || grid.values[seed] > thr) continue;

    // Iterative flood fill over the 26-neighborhood; the seed scan order
    // makes component order deterministic (by smallest linear index).
    Voi voi;
    stack.clear();
    stack.push_back(seed);
    seen[seed] = 1;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      voi.voxels.push_back(cur);
      const auto [ci, cj, ck] = grid.unpack_index(cur);
      for (int dk = -1; dk <= 1; ++dk) {
        for (int dj = -1; dj <= 1; ++dj) {
          for (int di = -1; di <= 1; ++di) {
            if (di == 0 && dj == 0 && dk == 0) continue;
            const int i = ci + di, j = cj + dj, k = ck + dk;
            if (!grid.in_bounds(i, j, k)) continue;
            const std::size_t nb = grid.linear_index(i, j, k);
            if (seen[nb] || !grid.active[nb] || grid.values[nb] > thr) continue;
            seen[nb] = 1;
            stack.push_back(nb);
          }
        }
      }
    }

    std::sort(voi.voxels.begin(), voi.voxels.end());
    Eigen::Vector3d lo = grid.index_to_world(voi.voxels.front());
    Eigen::Vector3d hi = lo;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (const std::size_t lin : voi.voxels) {
      const Eigen::Vector3d p = grid.index_to_world(lin);
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
      sum += p;
    }
    const double half = 0.5 * grid.spacing;
    voi.bbox_min = lo.array() - half;
    voi.bbox_max = hi.array() + half;
    voi.centroid = sum / static_cast<double>(voi.voxels.size());
    comps.push_back(std::move(voi));
  }
  return comps;
}

std::vector<Voi> filter_vois(std::vector<Voi> comps, std::size_t n_c) {
  if (n_c < 1) throw std::invalid_argument("n_c must be at least 1");
  std::erase_if(comps, [n_c](const Voi& v) { return v.size() < n_c; });
  return comps;
}

Superquadric init_primitive(const Voi& voi, const VoxelGrid& grid,
                            double gamma) {
  if (voi.voxels.empty()) throw std::invalid_argument("empty VOI");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");

  const double scale_min = 0.5 * grid.spacing;
  Superquadric q;
  q.eps1 = 1.0;
  q.eps2 = 1.0;
  q.scale = (gamma * voi.bbox_lengths()).cwiseMax(scale_min);

  // Keep the centroid when it sits on interior volume; a nonconvex VOI can
  // place it in exterior space, which would trigger auto-degeneration.
  const auto near = grid.nearest_index(voi.centroid);
  const std::size_t near_lin = grid.linear_index(near[0], near[1], near[2]);
  if (grid.active[near_lin] && grid.values[near_lin] <= 0.0f) {
    q.translation = voi.centroid;
    return q;
  }

  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best = grid.size();
  for (std::size_t lin = 0; lin < grid.size(); ++lin) {
    if (!grid.active[lin] || grid.values[lin] > 0.0f) continue;
    const double d2 = (grid.index_to_world(lin) - voi.centroid).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = lin;
    }
  }
  if (best == grid.size()) {
    throw validation_error("cannot place primitive: grid has no interior voxel");
  }
  q.translation = grid.index_to_world(best);
  return q;
}

}  // namespace sqabs
