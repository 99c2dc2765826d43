#include "sqabs/marching.hpp"

#include <nlohmann/json.hpp>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "sqabs/errors.hpp"
#include "sqabs/metrics.hpp"
#include "sqabs/sdf_io.hpp"

using namespace sqabs;

namespace {

constexpr int kN = 64;
const double kH = 2.0 / (kN - 1);

VoxelGrid make_target(const std::vector<Superquadric>& prims,
                      const MarchingConfig& config) {
  VoxelGrid g = gen_superquadric_sdf(prims, {kN, kN, kN}, {-1, -1, -1}, kH);
  truncate(g, config.truncation_for(kH));
  return g;
}

double primitive_iou(const Superquadric& a, const Superquadric& b) {
  const auto oa = oracle_from_primitives({a});
  const auto ob = oracle_from_primitives({b});
  Eigen::Vector3d lo, hi;
  joint_bounds(*oa, *ob, 0.05, &lo, &hi);
  return iou(*oa, *ob, lo, hi, 80).value;
}

}  // namespace

TEST_SUITE_BEGIN("marching");

TEST_CASE("grid without interior yields an empty result") {
  MarchingConfig config;
  VoxelGrid g = VoxelGrid::make({16, 16, 16}, {-1, -1, -1}, 2.0 / 15);
  const double t = config.truncation_for(g.spacing);
  for (auto& v : g.values) v = static_cast<float>(t);
  truncate(g, t);

  const AbstractionResult res = march(g, config);
  CHECK(res.primitives.empty());
  CHECK(res.rounds == 0);
  CHECK_FALSE(res.forced_stop);
}

TEST_CASE("march requires a matching truncation") {
  MarchingConfig config;
  VoxelGrid g = VoxelGrid::make({8, 8, 8}, {0, 0, 0}, 0.1);
  CHECK_THROWS_AS(march(g, config), validation_error);
  truncate(g, 99.0);
  CHECK_THROWS_AS(march(g, config), validation_error);
}

TEST_CASE("single sphere is recovered by one primitive") {
  MarchingConfig config;
  Superquadric gen;
  gen.scale = {0.35, 0.35, 0.35};
  VoxelGrid g = make_target({gen}, config);

  const AbstractionResult res = march(g, config);
  REQUIRE(res.primitives.size() == 1);
  const Superquadric& got = res.primitives[0];
  CHECK(std::abs(got.eps1 - 1.0) <= 0.3);
  CHECK(std::abs(got.eps2 - 1.0) <= 0.3);
  for (int a = 0; a < 3; ++a) {
    CHECK(std::abs(got.scale[a] - 0.35) <= kH);
  }
  CHECK(got.translation.norm() <= kH);

  SUBCASE("interior volume was consumed") {
    CHECK(g.active_interior_count() <
          gen_superquadric_sdf({gen}, {kN, kN, kN}, {-1, -1, -1}, kH)
              .active_interior_count());
  }
}

TEST_CASE("two well-separated shapes give two primitives") {
  MarchingConfig config;
  std::mt19937_64 rng(103);
  Superquadric a = sqtest::random_superquadric(rng, 0.6, 1.4, 0.15, 0.25, 0.0);
  Superquadric b = sqtest::random_superquadric(rng, 0.6, 1.4, 0.15, 0.25, 0.0);
  a.translation = {-0.5, -0.2, 0.0};
  b.translation = {0.5, 0.3, 0.1};
  VoxelGrid g = make_target({a, b}, config);

  const AbstractionResult res = march(g, config);
  REQUIRE(res.primitives.size() == 2);
  for (const auto& gen : {a, b}) {
    // Match by nearest center.
    const Superquadric* best = &res.primitives[0];
    for (const auto& got : res.primitives) {
      if ((got.translation - gen.translation).norm() <
          (best->translation - gen.translation).norm()) {
        best = &got;
      }
    }
    CHECK(primitive_iou(*best, gen) >= 0.85);
  }
}

TEST_CASE("runs are deterministic") {
  MarchingConfig config;
  Superquadric gen;
  gen.eps1 = 0.6;
  gen.eps2 = 1.2;
  gen.scale = {0.3, 0.22, 0.18};
  gen.euler_zyx = {0.4, -0.3, 0.9};

  const auto run = [&](unsigned threads) {
    MarchingConfig c = config;
    c.threads = threads;
    VoxelGrid g = make_target({gen}, c);
    const AbstractionResult res = march(g, c);
    return primitives_to_json(res.primitives).dump();
  };

  const std::string first = run(1);
  CHECK(first == run(1));
  CHECK(first == run(4));
}

TEST_CASE("every accepted primitive passed the removal rule") {
  MarchingConfig config;
  Superquadric gen;
  gen.scale = {0.3, 0.2, 0.25};
  gen.eps1 = 0.4;
  VoxelGrid g = make_target({gen}, config);
  const AbstractionResult res = march(g, config);
  for (const auto& d : res.diagnostics) {
    if (!d.accepted) continue;
    CHECK(d.removal.n_minus >= 1);
    const double total = static_cast<double>(d.removal.n_plus +
                                             d.removal.n_minus + d.removal.n_zero);
    CHECK(d.removal.n_plus / total < 0.5);
  }
  CHECK(res.rounds >= 1);
}

TEST_SUITE_END();
