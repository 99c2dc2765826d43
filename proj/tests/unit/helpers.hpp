#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <vector>

#include "sqabs/grid.hpp"
#include "sqabs/superquadric.hpp"

namespace sqtest {

inline double urand(std::mt19937_64& rng, double lo, double hi) {
  // mt19937_64 output mapped directly; portable across standard libraries.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

inline sqabs::Superquadric random_superquadric(std::mt19937_64& rng,
                                               double eps_lo = 0.1,
                                               double eps_hi = 1.9,
                                               double scale_lo = 0.1,
                                               double scale_hi = 0.35,
                                               double center_range = 0.0) {
  sqabs::Superquadric q;
  q.eps1 = urand(rng, eps_lo, eps_hi);
  q.eps2 = urand(rng, eps_lo, eps_hi);
  q.scale = {urand(rng, scale_lo, scale_hi), urand(rng, scale_lo, scale_hi),
             urand(rng, scale_lo, scale_hi)};
  q.euler_zyx = {urand(rng, -M_PI, M_PI), urand(rng, -M_PI / 2, M_PI / 2),
                 urand(rng, -M_PI, M_PI)};
  q.translation = {urand(rng, -center_range, center_range),
                   urand(rng, -center_range, center_range),
                   urand(rng, -center_range, center_range)};
  return q;
}

inline Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  while (true) {
    const Eigen::Vector3d v(urand(rng, -1, 1), urand(rng, -1, 1),
                            urand(rng, -1, 1));
    const double n = v.norm();
    if (n > 1e-3 && n <= 1.0) return v / n;
  }
}

/// Point on the parametric surface of q at angles (eta, omega), body frame.
inline Eigen::Vector3d surface_point_body(const sqabs::Superquadric& q,
                                          double eta, double omega) {
  const double ce = sqabs::detail::sgn_pow(std::cos(eta), q.eps1);
  const double se = sqabs::detail::sgn_pow(std::sin(eta), q.eps1);
  const double cw = sqabs::detail::sgn_pow(std::cos(omega), q.eps2);
  const double sw = sqabs::detail::sgn_pow(std::sin(omega), q.eps2);
  return {q.scale.x() * ce * cw, q.scale.y() * ce * sw, q.scale.z() * se};
}

/// Derivative-free 2D Nelder-Mead, small and good enough for smooth
/// objectives with a decent seed.
inline Eigen::Vector2d nelder_mead_2d(
    const std::function<double(const Eigen::Vector2d&)>& f,
    Eigen::Vector2d x0, double step, int iterations) {
  std::array<Eigen::Vector2d, 3> v{x0, x0 + Eigen::Vector2d(step, 0),
                                   x0 + Eigen::Vector2d(0, step)};
  std::array<double, 3> fv{f(v[0]), f(v[1]), f(v[2])};
  for (int it = 0; it < iterations; ++it) {
    std::array<int, 3> ord{0, 1, 2};
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const Eigen::Vector2d best = v[ord[0]], mid = v[ord[1]], worst = v[ord[2]];
    const double fb = fv[ord[0]], fm = fv[ord[1]], fw = fv[ord[2]];
    const Eigen::Vector2d centroid = 0.5 * (best + mid);
    const Eigen::Vector2d refl = centroid + (centroid - worst);
    const double fr = f(refl);
    Eigen::Vector2d next;
    double fnext;
    if (fr < fb) {
      const Eigen::Vector2d exp = centroid + 2.0 * (centroid - worst);
      const double fe = f(exp);
      next = fe < fr ? exp : refl;
      fnext = std::min(fe, fr);
    } else if (fr < fm) {
      next = refl;
      fnext = fr;
    } else {
      const Eigen::Vector2d con = centroid + 0.5 * (worst - centroid);
      const double fc = f(con);
      if (fc < fw) {
        next = con;
        fnext = fc;
      } else {  // shrink
        v = {best, best + 0.5 * (mid - best), best + 0.5 * (worst - best)};
        fv = {fb, f(v[1]), f(v[2])};
        continue;
      }
    }
    v = {best, mid, next};
    fv = {fb, fm, fnext};
  }
  const int best = fv[0] <= fv[1] && fv[0] <= fv[2] ? 0 : (fv[1] <= fv[2] ? 1 : 2);
  return v[best];
}

/// Independent oracle: signed distance to the superquadric surface via
/// coarse parametric search plus Nelder-Mead refinement of the squared
/// distance over (eta, omega).
inline double projected_signed_distance(const sqabs::Superquadric& q,
                                        const Eigen::Vector3d& x,
                                        int coarse_eta = 64,
                                        int coarse_omega = 128) {
  const Eigen::Vector3d body = q.rotation().transpose() * (x - q.translation);
  const auto dist2 = [&](const Eigen::Vector2d& ew) {
    return (body - surface_point_body(q, ew.x(), ew.y())).squaredNorm();
  };

  struct Seed {
    double value;
    Eigen::Vector2d ew;
  };
  std::vector<Seed> seeds;
  for (int i = 0; i <= coarse_eta; ++i) {
    const double eta = -M_PI / 2 + M_PI * i / coarse_eta;
    for (int j = 0; j < coarse_omega; ++j) {
      const double omega = -M_PI + 2 * M_PI * j / coarse_omega;
      const Eigen::Vector2d ew(eta, omega);
      seeds.push_back({dist2(ew), ew});
    }
  }
  std::partial_sort(seeds.begin(), seeds.begin() + 3, seeds.end(),
                    [](const Seed& a, const Seed& b) { return a.value < b.value; });

  double best = seeds[0].value;
  for (int s = 0; s < 3; ++s) {
    const Eigen::Vector2d refined = nelder_mead_2d(
        dist2, seeds[s].ew, 0.5 * M_PI / coarse_eta, 160);
    best = std::min(best, dist2(refined));
  }
  const double unsigned_d = std::sqrt(best);
  return sqabs::implicit_value(q, x) <= 1.0 ? -unsigned_d : unsigned_d;
}

/// Independent connected-components oracle: iterate min-label propagation
/// over the 26-neighborhood until fixpoint.
inline std::vector<std::vector<std::size_t>> label_propagation_components(
    const sqabs::VoxelGrid& grid, double threshold) {
  const std::size_t n = grid.size();
  std::vector<std::size_t> label(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (grid.active[i] && grid.values[i] <= threshold) label[i] = i;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t lin = 0; lin < n; ++lin) {
      if (label[lin] == n) continue;
      const auto [ci, cj, ck] = grid.unpack_index(lin);
      for (int dk = -1; dk <= 1; ++dk) {
        for (int dj = -1; dj <= 1; ++dj) {
          for (int di = -1; di <= 1; ++di) {
            const int i = ci + di, j = cj + dj, k = ck + dk;
            if (!grid.in_bounds(i, j, k)) continue;
            const std::size_t nb = grid.linear_index(i, j, k);
            if (label[nb] == n) continue;
            if (label[nb] < label[lin]) {
              label[lin] = label[nb];
              changed = true;
            }
          }
        }
      }
    }
  }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> root_to_group(n, n);
  for (std::size_t lin = 0; lin < n; ++lin) {
    if (label[lin] == n) continue;
    if (root_to_group[label[lin]] == n) {
      root_to_group[label[lin]] = groups.size();
      groups.emplace_back();
    }
    groups[root_to_group[label[lin]]].push_back(lin);
  }
  return groups;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sqabs_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace sqtest
