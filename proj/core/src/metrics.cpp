#include "sqabs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "sqabs/errors.hpp"
#include "sqabs/kdtree.hpp"
#include "sqabs/parallel.hpp"

namespace sqabs {

void OccupancyOracle::contains_lattice(const Eigen::Vector3d& lo,
                                       const Eigen::Vector3d& hi, int n,
                                       unsigned threads,
                                       std::vector<std::uint8_t>& out) const {
  const std::size_t total = static_cast<std::size_t>(n) * n * n;
  out.assign(total, 0);
  const Eigen::Vector3d step = (hi - lo) / static_cast<double>(n);
  parallel_for(total, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t lin = begin; lin < end; ++lin) {
      const int i = static_cast<int>(lin % n);
      const int j = static_cast<int>((lin / n) % n);
      const int k = static_cast<int>(lin / (static_cast<std::size_t>(n) * n));
      const Eigen::Vector3d p =
          lo + Eigen::Vector3d((i + 0.5) * step.x(), (j + 0.5) * step.y(),
                               (k + 0.5) * step.z());
      out[lin] = contains_point(p) ? 1 : 0;
    }
  });
}

namespace {

void downsample_in_place(PointSet& pts, std::size_t max_points,
                         std::uint64_t seed) {
  if (pts.size() <= max_points) return;
  // Partial Fisher-Yates with raw mt19937_64 output keeps the selection
  // identical across standard libraries.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < max_points; ++i) {
    const std::size_t j = i + rng() % (pts.size() - i);
    std::swap(pts[i], pts[j]);
  }
  pts.resize(max_points);
}

class PrimitiveOracle final : public OccupancyOracle {
 public:
  explicit PrimitiveOracle(std::vector<Superquadric> prims)
      : prims_(std::move(prims)) {
    if (prims_.empty()) throw std::invalid_argument("no primitives for oracle");
    lo_.setConstant(std::numeric_limits<double>::infinity());
    hi_ = -lo_;
    for (const auto& q : prims_) {
      q.validate();
      // Surface body coordinates are bounded by the scales, so |R| * scale
      // bounds the world-frame extent.
      const Eigen::Vector3d ext = q.rotation().cwiseAbs() * q.scale;
      lo_ = lo_.cwiseMin(q.translation - ext);
      hi_ = hi_.cwiseMax(q.translation + ext);
    }
  }

  bool contains_point(const Eigen::Vector3d& p) const override {
    for (const auto& q : prims_) {
      if (contains(q, p)) return true;
    }
    return false;
  }

  Eigen::Vector3d bounds_min() const override { return lo_; }
  Eigen::Vector3d bounds_max() const override { return hi_; }

 private:
  std::vector<Superquadric> prims_;
  Eigen::Vector3d lo_, hi_;
};

class GridOracle final : public OccupancyOracle {
 public:
  explicit GridOracle(VoxelGrid grid) : grid_(std::move(grid)) {
    grid_.validate();
  }

  bool contains_point(const Eigen::Vector3d& p) const override {
    const Eigen::Vector3d g = (p - grid_.origin) / grid_.spacing;
    for (int a = 0; a < 3; ++a) {
      if (g[a] < 0.0 || g[a] > grid_.dims[a] - 1) return false;
    }
    int cell[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
      cell[a] = std::min(static_cast<int>(g[a]), grid_.dims[a] - 2);
      cell[a] = std::max(cell[a], 0);
      f[a] = g[a] - cell[a];
    }
    double d = 0.0;
    for (int dk = 0; dk < 2; ++dk) {
      for (int dj = 0; dj < 2; ++dj) {
        for (int di = 0; di < 2; ++di) {
          const double w = (di ? f[0] : 1.0 - f[0]) * (dj ? f[1] : 1.0 - f[1]) *
                           (dk ? f[2] : 1.0 - f[2]);
          d += w * grid_.values[grid_.linear_index(cell[0] + di, cell[1] + dj,
                                                   cell[2] + dk)];
        }
      }
    }
    return d <= 0.0;
  }

  Eigen::Vector3d bounds_min() const override { return grid_.min_corner(); }
  Eigen::Vector3d bounds_max() const override { return grid_.max_corner(); }

 private:
  VoxelGrid grid_;
};

class MeshOracle final : public OccupancyOracle {
 public:
  explicit MeshOracle(TriangleMesh mesh) : mesh_(std::move(mesh)) {
    mesh_.validate();
    lo_ = mesh_.min_corner();
    hi_ = mesh_.max_corner();
  }

  bool contains_point(const Eigen::Vector3d& p) const override {
    return mesh_contains(mesh_, p);
  }

  Eigen::Vector3d bounds_min() const override { return lo_; }
  Eigen::Vector3d bounds_max() const override { return hi_; }

  void contains_lattice(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                        int n, unsigned threads,
                        std::vector<std::uint8_t>& out) const override {
    // One jittered x-ray per (y, z) lattice line instead of a full parity
    // vote per point.
    const std::size_t total = static_cast<std::size_t>(n) * n * n;
    out.assign(total, 0);
    const Eigen::Vector3d step = (hi - lo) / static_cast<double>(n);
    const double jitter = 1e-7 * (hi_ - lo_).norm();
    const std::size_t lines = static_cast<std::size_t>(n) * n;
    parallel_for(lines, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t line = begin; line < end; ++line) {
        const int j = static_cast<int>(line % n);
        const int k = static_cast<int>(line / n);
        const double y = lo.y() + (j + 0.5) * step.y() + jitter;
        const double z = lo.z() + (k + 0.5) * step.z() + 2.0 * jitter;
        const auto xs = detail::mesh_line_crossings(mesh_, 0, 1, 2, y, z);
        for (int i = 0; i < n; ++i) {
          const double x = lo.x() + (i + 0.5) * step.x();
          const auto it = std::upper_bound(xs.begin(), xs.end(), x);
          out[static_cast<std::size_t>(i) +
              static_cast<std::size_t>(n) * (j + static_cast<std::size_t>(n) * k)] =
              ((xs.end() - it) % 2) != 0 ? 1 : 0;
        }
      }
    });
  }

 private:
  TriangleMesh mesh_;
  Eigen::Vector3d lo_, hi_;
};

}  // namespace

std::unique_ptr<OccupancyOracle> oracle_from_primitives(
    std::vector<Superquadric> prims) {
  return std::make_unique<PrimitiveOracle>(std::move(prims));
}

std::unique_ptr<OccupancyOracle> oracle_from_grid(VoxelGrid grid) {
  return std::make_unique<GridOracle>(std::move(grid));
}

std::unique_ptr<OccupancyOracle> oracle_from_mesh(TriangleMesh mesh) {
  return std::make_unique<MeshOracle>(std::move(mesh));
}

PointSet predicted_surface_points(const std::vector<Superquadric>& prims,
                                  double spacing, std::uint64_t seed,
                                  std::size_t max_points) {
  if (prims.empty()) throw std::invalid_argument("no primitives to sample");
  PointSet all;
  for (std::size_t k = 0; k < prims.size(); ++k) {
    const PointSet samples = sample_surface(prims[k], spacing);
    for (const auto& p : samples) {
      bool swallowed = false;
      for (std::size_t l = 0; l < prims.size() && !swallowed; ++l) {
        if (l == k) continue;
        swallowed = implicit_value(prims[l], p) < 1.0;  // strictly interior
      }
      if (!swallowed) all.push_back(p);
    }
  }
  if (all.empty()) {
    throw data_error("all surface points lie inside other primitives");
  }
  downsample_in_place(all, max_points, seed);
  return all;
}

double chamfer_l1(const PointSet& x, const PointSet& y, unsigned threads) {
  if (x.empty() || y.empty()) {
    throw std::invalid_argument("chamfer_l1 needs nonempty point sets");
  }
  const KdTree3 tree_x(x);
  const KdTree3 tree_y(y);
  std::vector<double> dist_y(y.size());
  std::vector<double> dist_x(x.size());
  parallel_for(y.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) dist_y[i] = tree_x.nearest_l1(y[i]);
  });
  parallel_for(x.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) dist_x[i] = tree_y.nearest_l1(x[i]);
  });
  double sum_y = 0.0;
  for (const double d : dist_y) sum_y += d;
  double sum_x = 0.0;
  for (const double d : dist_x) sum_x += d;
  return sum_y / static_cast<double>(y.size()) +
         sum_x / static_cast<double>(x.size());
}

IouResult iou(const OccupancyOracle& pred, const OccupancyOracle& truth,
              const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, int grid_n,
              unsigned threads) {
  if (grid_n < 16) throw std::invalid_argument("grid_n must be at least 16");
  if (!((hi - lo).minCoeff() > 0.0)) {
    throw std::invalid_argument("degenerate IoU bounds");
  }
  std::vector<std::uint8_t> in_pred, in_truth;
  pred.contains_lattice(lo, hi, grid_n, threads, in_pred);
  truth.contains_lattice(lo, hi, grid_n, threads, in_truth);
  std::size_t both = 0, either = 0;
  for (std::size_t i = 0; i < in_pred.size(); ++i) {
    both += (in_pred[i] & in_truth[i]) != 0;
    either += (in_pred[i] | in_truth[i]) != 0;
  }
  IouResult r;
  if (either == 0) {
    r.value = 0.0;
    r.empty_union = true;
    return r;
  }
  r.value = static_cast<double>(both) / static_cast<double>(either);
  return r;
}

PointSet surface_points_from_grid(const VoxelGrid& grid) {
  grid.validate();
  PointSet out;
  const auto emit = [&](std::size_t a, std::size_t b) {
    const double d1 = grid.values[a];
    const double d2 = grid.values[b];
    if ((d1 < 0.0) == (d2 < 0.0)) return;
    const double tau = d1 / (d1 - d2);
    const Eigen::Vector3d p1 = grid.index_to_world(a);
    const Eigen::Vector3d p2 = grid.index_to_world(b);
    out.push_back(p1 + tau * (p2 - p1));
  };
  for (int k = 0; k < grid.dims[2]; ++k) {
    for (int j = 0; j < grid.dims[1]; ++j) {
      for (int i = 0; i < grid.dims[0]; ++i) {
        const std::size_t lin = grid.linear_index(i, j, k);
        if (i + 1 < grid.dims[0]) emit(lin, grid.linear_index(i + 1, j, k));
        if (j + 1 < grid.dims[1]) emit(lin, grid.linear_index(i, j + 1, k));
        if (k + 1 < grid.dims[2]) emit(lin, grid.linear_index(i, j, k + 1));
      }
    }
  }
  return out;
}

PointSet surface_points_from_mesh(const TriangleMesh& mesh,
                                  double target_spacing, std::uint64_t seed,
                                  std::size_t max_points) {
  mesh.validate();
  if (!(target_spacing > 0.0)) {
    throw std::invalid_argument("target_spacing must be positive");
  }
  PointSet out;
  for (const auto& tri : mesh.triangles) {
    const Eigen::Vector3d& a = mesh.vertices[tri[0]];
    const Eigen::Vector3d& b = mesh.vertices[tri[1]];
    const Eigen::Vector3d& c = mesh.vertices[tri[2]];
    const double longest =
        std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
    const int m = std::max(1, static_cast<int>(std::ceil(longest / target_spacing)));
    for (int i = 0; i <= m; ++i) {
      for (int j = 0; j <= m - i; ++j) {
        out.push_back(a + (b - a) * (static_cast<double>(i) / m) +
                      (c - a) * (static_cast<double>(j) / m));
      }
    }
  }
  downsample_in_place(out, max_points, seed);
  return out;
}

void joint_bounds(const OccupancyOracle& a, const OccupancyOracle& b,
                  double pad, Eigen::Vector3d* lo, Eigen::Vector3d* hi) {
  *lo = a.bounds_min().cwiseMin(b.bounds_min()).array() - pad;
  *hi = a.bounds_max().cwiseMax(b.bounds_max()).array() + pad;
}

}  // namespace sqabs
