#include "sqabs/metrics.hpp"

#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "sqabs/errors.hpp"
#include "sqabs/sdf_io.hpp"

using namespace sqabs;
using sqtest::urand;

namespace {

Superquadric sphere_at(double r, const Eigen::Vector3d& c) {
  Superquadric q;
  q.scale = {r, r, r};
  q.translation = c;
  return q;
}

double brute_force_chamfer(const PointSet& x, const PointSet& y) {
  double sum_y = 0.0;
  for (const auto& p : y) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : x) best = std::min(best, (p - q).lpNorm<1>());
    sum_y += best;
  }
  double sum_x = 0.0;
  for (const auto& p : x) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : y) best = std::min(best, (p - q).lpNorm<1>());
    sum_x += best;
  }
  return sum_y / y.size() + sum_x / x.size();
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("chamfer identities") {
  PointSet x = {{0, 0, 0}, {1, 1, 1}, {0.5, 0, 2}};
  CHECK(chamfer_l1(x, x) == 0.0);
  PointSet a = {{0, 0, 0}};
  PointSet b = {{1, 0, 0}};
  CHECK(chamfer_l1(a, b) == doctest::Approx(2.0));
  CHECK_THROWS_AS(chamfer_l1({}, b), std::invalid_argument);
}

TEST_CASE("chamfer equals brute force on random sets") {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 5; ++trial) {
    PointSet x, y;
    for (int i = 0; i < 100; ++i) {
      x.push_back({urand(rng, -1, 1), urand(rng, -1, 1), urand(rng, -1, 1)});
      y.push_back({urand(rng, -1, 1), urand(rng, -1, 1), urand(rng, -1, 1)});
    }
    const double fast = chamfer_l1(x, y);
    const double slow = brute_force_chamfer(x, y);
    CHECK(std::abs(fast - slow) < 1e-12);
    CHECK(std::abs(chamfer_l1(y, x) - fast) < 1e-12);  // symmetry
  }
}

TEST_CASE("chamfer is thread-count independent") {
  std::mt19937_64 rng(71);
  PointSet x, y;
  for (int i = 0; i < 3000; ++i) {
    x.push_back({urand(rng, -1, 1), urand(rng, -1, 1), urand(rng, -1, 1)});
    y.push_back({urand(rng, -1, 1), urand(rng, -1, 1), urand(rng, -1, 1)});
  }
  CHECK(chamfer_l1(x, y, 1) == chamfer_l1(x, y, 4));
}

TEST_CASE("predicted surface points") {
  SUBCASE("single primitive keeps every sample") {
    const auto prim = sphere_at(0.5, {0, 0, 0});
    const auto direct = sample_surface(prim, 0.05);
    const auto pts = predicted_surface_points({prim}, 0.05, 0);
    CHECK(pts.size() == direct.size());
  }

  SUBCASE("overlapping spheres drop interior points") {
    const auto a = sphere_at(0.5, {0, 0, 0});
    const auto b = sphere_at(0.5, {0.4, 0, 0});
    const auto pts = predicted_surface_points({a, b}, 0.05, 0);
    for (const auto& p : pts) {
      CHECK(implicit_value(a, p) >= 1.0 - 1e-9);
      CHECK(implicit_value(b, p) >= 1.0 - 1e-9);
    }
  }

  SUBCASE("disjoint spheres keep the union") {
    const auto a = sphere_at(0.3, {-0.5, 0, 0});
    const auto b = sphere_at(0.3, {0.5, 0, 0});
    const auto pts = predicted_surface_points({a, b}, 0.05, 0);
    const auto na = sample_surface(a, 0.05).size();
    const auto nb = sample_surface(b, 0.05).size();
    CHECK(pts.size() == na + nb);
  }

  SUBCASE("nested primitive loses its whole surface") {
    const auto inner = sphere_at(0.2, {0, 0, 0});
    const auto outer = sphere_at(0.8, {0, 0, 0});
    const auto pts = predicted_surface_points({inner, outer}, 0.05, 0);
    const auto outer_only = sample_surface(outer, 0.05);
    CHECK(pts.size() == outer_only.size());
    for (const auto& p : pts) {
      CHECK(std::abs(p.norm() - 0.8) < 1e-6);
    }
  }

  SUBCASE("downsampling is deterministic and capped") {
    const auto prim = sphere_at(0.9, {0, 0, 0});
    const auto a = predicted_surface_points({prim}, 0.01, 42, 5000);
    const auto b = predicted_surface_points({prim}, 0.01, 42, 5000);
    CHECK(a.size() == 5000);
    REQUIRE(b.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("iou basics") {
  const auto a = oracle_from_primitives({sphere_at(0.5, {0, 0, 0})});
  const auto b = oracle_from_primitives({sphere_at(0.5, {0, 0, 0})});
  Eigen::Vector3d lo, hi;
  joint_bounds(*a, *b, 0.1, &lo, &hi);

  SUBCASE("identical shapes score 1") {
    CHECK(iou(*a, *b, lo, hi, 64).value == doctest::Approx(1.0));
  }

  SUBCASE("disjoint shapes score 0") {
    const auto c = oracle_from_primitives({sphere_at(0.2, {5, 5, 5})});
    Eigen::Vector3d lo2, hi2;
    joint_bounds(*a, *c, 0.1, &lo2, &hi2);
    const auto r = iou(*a, *c, lo2, hi2, 64);
    CHECK(r.value == 0.0);
    CHECK_FALSE(r.empty_union);
  }

  SUBCASE("concentric spheres match the volume ratio") {
    const auto small = oracle_from_primitives({sphere_at(0.5, {0, 0, 0})});
    const auto big = oracle_from_primitives({sphere_at(1.0, {0, 0, 0})});
    Eigen::Vector3d lo2, hi2;
    joint_bounds(*small, *big, 0.1, &lo2, &hi2);
    const auto r = iou(*small, *big, lo2, hi2, 100);
    CHECK(std::abs(r.value - 0.125) < 0.01);
  }

  SUBCASE("estimator consistency between n and 2n") {
    const auto c = oracle_from_primitives({sphere_at(0.45, {0.2, 0.1, 0})});
    Eigen::Vector3d lo2, hi2;
    joint_bounds(*a, *c, 0.1, &lo2, &hi2);
    const double v1 = iou(*a, *c, lo2, hi2, 64).value;
    const double v2 = iou(*a, *c, lo2, hi2, 128).value;
    CHECK(std::abs(v1 - v2) < 3.0 / 64);
  }
}

TEST_CASE("grid oracle interpolates the stored sdf") {
  const auto gen = sphere_at(0.6, {0, 0, 0});
  VoxelGrid g = gen_superquadric_sdf({gen}, {33, 33, 33}, {-1, -1, -1}, 2.0 / 32);
  const auto oracle = oracle_from_grid(g);
  CHECK(oracle->contains_point({0, 0, 0}));
  CHECK(oracle->contains_point({0.55, 0, 0}));
  CHECK_FALSE(oracle->contains_point({0.7, 0, 0}));
  CHECK_FALSE(oracle->contains_point({2, 0, 0}));  // outside grid = exterior

  SUBCASE("grid oracle against primitive oracle IoU is high") {
    const auto po = oracle_from_primitives({gen});
    Eigen::Vector3d lo, hi;
    joint_bounds(*po, *oracle, 0.05, &lo, &hi);
    CHECK(iou(*po, *oracle, lo, hi, 64).value > 0.97);
  }
}

TEST_CASE("surface points from a grid hug the zero level") {
  const auto gen = sphere_at(0.6, {0, 0, 0});
  const VoxelGrid g = gen_superquadric_sdf({gen}, {33, 33, 33}, {-1, -1, -1}, 2.0 / 32);
  const auto pts = surface_points_from_grid(g);
  REQUIRE(pts.size() > 500);
  for (const auto& p : pts) {
    CHECK(std::abs(p.norm() - 0.6) < g.spacing);
  }
}

TEST_CASE("empty union sets the warning flag") {
  // Two primitive oracles evaluated far away from both shapes.
  const auto a = oracle_from_primitives({sphere_at(0.1, {0, 0, 0})});
  const auto b = oracle_from_primitives({sphere_at(0.1, {0.05, 0, 0})});
  const auto r = iou(*a, *b, {5, 5, 5}, {6, 6, 6}, 16);
  CHECK(r.value == 0.0);
  CHECK(r.empty_union);
}

TEST_SUITE_END();
