#include "sqabs/marching.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "sqabs/errors.hpp"
#include "sqabs/parallel.hpp"
#include "sqabs/voi.hpp"

namespace sqabs {

namespace {

std::uint64_t voi_signature(const Voi& voi) {
  // FNV-1a over the sorted voxel indices.
  std::uint64_t h = 1469598103934665603ull;
  for (const std::size_t v : voi.voxels) {
    std::uint64_t x = static_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (x >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace

nlohmann::json primitives_to_json(const std::vector<Superquadric>& prims) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& q : prims) arr.push_back(q);
  return arr;
}

std::vector<Superquadric> primitives_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw format_error("primitive file must be a JSON array");
  std::vector<Superquadric> prims;
  prims.reserve(j.size());
  for (const auto& rec : j) prims.push_back(rec.get<Superquadric>());
  return prims;
}

nlohmann::json diagnostics_to_json(const AbstractionResult& result,
                                   const MarchingConfig& config) {
  nlohmann::json per_fit = nlohmann::json::array();
  for (const auto& d : result.diagnostics) {
    per_fit.push_back({
        {"voi_size", d.voi_size},
        {"iterations", d.iterations},
        {"final_cost", d.final_cost},
        {"accepted", d.accepted},
        {"round", d.round},
        {"removal",
         {{"n_plus", d.removal.n_plus},
          {"n_minus", d.removal.n_minus},
          {"n_zero", d.removal.n_zero}}},
    });
  }
  return nlohmann::json{
      {"config", config},
      {"rounds", result.rounds},
      {"forced_stop", result.forced_stop},
      {"primitive_count", result.primitives.size()},
      {"fits", per_fit},
      {"wall_time_seconds", result.wall_time_seconds},
  };
}

AbstractionResult march(VoxelGrid& grid, const MarchingConfig& config) {
  config.validate();
  grid.validate();
  const double expected_t = config.truncation_for(grid.spacing);
  if (!(grid.truncation > 0.0) ||
      std::abs(grid.truncation - expected_t) > 1e-9 * expected_t) {
    throw validation_error(
        "grid truncation does not match the configured ratio; truncate first");
  }

  const auto start = std::chrono::steady_clock::now();
  AbstractionResult result;
  std::unordered_set<std::uint64_t> blocked;

  while (true) {
    const auto sched = schedule(grid, config.alpha, config.termination_ratio);
    if (!sched) break;  // no interior volume left

    // March the levels until a usable VOI shows up or the sequence crosses
    // the termination level.
    std::vector<Voi> usable;
    bool skipped_blocked = false;
    bool terminated = false;
    for (int m = 0;; ++m) {
      const double level = sched->level(m);
      if (level > sched->termination) {
        terminated = true;
        break;
      }
      std::vector<Voi> vois =
          filter_vois(connected_components(grid, level),
                      static_cast<std::size_t>(config.n_c));
      std::erase_if(vois, [&](const Voi& v) {
        const bool is_blocked = blocked.contains(voi_signature(v));
        skipped_blocked = skipped_blocked || is_blocked;
        return is_blocked;
      });
      if (!vois.empty()) {
        usable = std::move(vois);
        break;
      }
    }
    if (terminated) {
      result.forced_stop = skipped_blocked;
      break;
    }

    ++result.rounds;

    // All VOIs of a round are fitted and judged against the same snapshot;
    // deactivations follow afterward in VOI order.
    std::vector<FitResult> fits(usable.size());
    parallel_for(usable.size(), config.threads,
                 [&](std::size_t begin, std::size_t end) {
                   for (std::size_t i = begin; i < end; ++i) {
                     const Superquadric seed =
                         init_primitive(usable[i], grid, config.gamma);
                     fits[i] = fit(grid, seed, config);
                   }
                 });

    std::vector<RemovalStats> stats(usable.size());
    for (std::size_t i = 0; i < usable.size(); ++i) {
      stats[i] = removal_stats(grid, fits[i].theta);
    }

    std::size_t round_deactivated = 0;
    std::size_t round_kept = 0;
    for (std::size_t i = 0; i < usable.size(); ++i) {
      PrimitiveDiagnostics diag;
      diag.voi_size = usable[i].size();
      diag.iterations = fits[i].iterations;
      diag.final_cost = fits[i].final_cost;
      diag.removal = stats[i];
      diag.round = result.rounds;
      const bool keep = !fits[i].degenerate && !should_remove(stats[i]);
      diag.accepted = keep;
      result.diagnostics.push_back(diag);
      if (keep) {
        result.primitives.push_back(fits[i].theta);
        round_deactivated += deactivate_fitted(grid, fits[i].theta);
        ++round_kept;
      } else {
        // Refitting the same voxel set cannot succeed; skip it from now on.
        blocked.insert(voi_signature(usable[i]));
      }
    }

    // Accepted primitives normally deactivate their VOI. When overlap with
    // an earlier primitive leaves nothing new to deactivate, block the
    // round's VOIs so the schedule cannot stall on them.
    if (round_kept > 0 && round_deactivated == 0) {
      for (const auto& voi : usable) blocked.insert(voi_signature(voi));
    }
  }

  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

}  // namespace sqabs
