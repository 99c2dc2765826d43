#include "sqabs/grid.hpp"

#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "sqabs/errors.hpp"
#include "sqabs/sdf_io.hpp"

using namespace sqabs;

TEST_SUITE_BEGIN("grid");

TEST_CASE("index to world mapping") {
  VoxelGrid g = VoxelGrid::make({101, 101, 101}, {0, 0, 0}, 1.0);
  CHECK(g.index_to_world(0, 0, 0) == Eigen::Vector3d(0, 0, 0));

  VoxelGrid g2 = VoxelGrid::make({101, 101, 101}, {-0.5, -0.5, -0.5}, 0.01);
  CHECK((g2.index_to_world(50, 50, 50) - Eigen::Vector3d(0, 0, 0)).norm() < 1e-12);

  VoxelGrid g3 = VoxelGrid::make({5, 5, 5}, {1, 2, 3}, 0.5);
  CHECK(g3.index_to_world(2, 0, 4) == Eigen::Vector3d(2, 2, 5));

  CHECK_THROWS_AS(g3.index_to_world(5, 0, 0), std::out_of_range);
  CHECK_THROWS_AS(g3.index_to_world(0, -1, 0), std::out_of_range);
}

TEST_CASE("index round trip is bijective") {
  const VoxelGrid g = VoxelGrid::make({7, 5, 9}, {-1, 2, 0.5}, 0.25);
  for (std::size_t lin = 0; lin < g.size(); ++lin) {
    const auto ijk = g.unpack_index(lin);
    CHECK(g.linear_index(ijk[0], ijk[1], ijk[2]) == lin);
  }
}

TEST_CASE("truncation clamps values and records t") {
  VoxelGrid g = VoxelGrid::make({3, 2, 2}, {0, 0, 0}, 1.0);
  g.values[0] = -5.0f;
  g.values[1] = -0.005f;
  g.values[2] = 0.5f;
  truncate(g, 0.013);
  CHECK(g.values[0] == doctest::Approx(-0.013));
  CHECK(g.values[1] == doctest::Approx(-0.005));
  CHECK(g.values[2] == doctest::Approx(0.013));
  CHECK(g.truncation == doctest::Approx(0.013));

  SUBCASE("already-truncated grid is unchanged") {
    VoxelGrid h = g;
    truncate(h, 0.013);
    CHECK(h.values == g.values);
  }

  SUBCASE("reference ratio: t = 1.3 h") {
    VoxelGrid h = VoxelGrid::make({2, 2, 2}, {0, 0, 0}, 0.01);
    truncate(h, 1.3 * h.spacing);
    CHECK(h.truncation == doctest::Approx(0.013));
  }

  CHECK_THROWS_AS(truncate(g, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(truncate(g, -1.0), std::invalid_argument);
}

TEST_CASE("minimum active signed distance") {
  VoxelGrid g = VoxelGrid::make({3, 1, 1}, {0, 0, 0}, 1.0);
  g.values = {-0.013f, -0.004f, 0.013f};
  REQUIRE(min_active_sdf(g).has_value());
  CHECK(*min_active_sdf(g) == doctest::Approx(-0.013));

  SUBCASE("masking hides the minimum") {
    g.active = {0, 0, 1};
    CHECK_FALSE(min_active_sdf(g).has_value());
  }

  SUBCASE("uniform positive grid has no interior") {
    g.values = {0.013f, 0.013f, 0.013f};
    CHECK_FALSE(min_active_sdf(g).has_value());
  }
}

TEST_CASE("deactivation matches the per-voxel oracle") {
  Superquadric sphere;
  sphere.scale = {0.3, 0.3, 0.3};
  VoxelGrid g = gen_superquadric_sdf({sphere}, {33, 33, 33}, {-1, -1, -1}, 2.0 / 32);
  truncate(g, 1.3 * g.spacing);

  // Oracle: both sign conditions checked voxel by voxel.
  std::vector<std::uint8_t> expect_active(g.size(), 1);
  std::size_t expect_flipped = 0;
  for (std::size_t lin = 0; lin < g.size(); ++lin) {
    const bool interior = g.values[lin] <= 0.0f;
    const bool covered = approx_sdf(sphere, g.index_to_world(lin)) <= 0.0;
    if (interior && covered) {
      expect_active[lin] = 0;
      ++expect_flipped;
    }
  }

  VoxelGrid work = g;
  const std::size_t flipped = deactivate_fitted(work, sphere);
  CHECK(flipped == expect_flipped);
  CHECK(flipped > 0);
  CHECK(work.active == expect_active);

  SUBCASE("exterior voxels are preserved") {
    for (std::size_t lin = 0; lin < work.size(); ++lin) {
      if (work.values[lin] > 0.0f) CHECK(work.active[lin] == 1);
    }
  }

  SUBCASE("second call is idempotent") {
    CHECK(deactivate_fitted(work, sphere) == 0);
    CHECK(work.active == expect_active);
  }
}

TEST_CASE("degenerate primitive deactivates nothing") {
  VoxelGrid g = VoxelGrid::make({4, 4, 4}, {0, 0, 0}, 1.0);
  for (auto& v : g.values) v = -0.5f;
  truncate(g, 1.0);
  Superquadric tiny;
  tiny.scale = {0.2, 0.2, 0.2};
  tiny.translation = {0.5, 0.5, 0.5};  // between voxel centers
  CHECK(deactivate_fitted(g, tiny) == 0);
}

TEST_CASE("interior count is monotone under deactivation") {
  std::mt19937_64 rng(31);
  Superquadric a = sqtest::random_superquadric(rng, 0.5, 1.5, 0.15, 0.3, 0.3);
  Superquadric b = sqtest::random_superquadric(rng, 0.5, 1.5, 0.15, 0.3, 0.3);
  VoxelGrid g = gen_superquadric_sdf({a, b}, {33, 33, 33}, {-1, -1, -1}, 2.0 / 32);
  truncate(g, 1.3 * g.spacing);

  std::size_t prev = g.active_interior_count();
  for (const auto& prim : {a, b, a}) {
    deactivate_fitted(g, prim);
    const std::size_t cur = g.active_interior_count();
    CHECK(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("truncation closure for the active minimum") {
  std::mt19937_64 rng(37);
  VoxelGrid g = VoxelGrid::make({8, 8, 8}, {0, 0, 0}, 0.1);
  for (auto& v : g.values) v = static_cast<float>(sqtest::urand(rng, -3, 3));
  truncate(g, 0.13);
  const auto m = min_active_sdf(g);
  REQUIRE(m.has_value());
  CHECK(*m >= -0.13 - 1e-9);
}

TEST_SUITE_END();
