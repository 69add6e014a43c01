#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "clusca/cache_config.hpp"
#include "clusca/model.hpp"
#include "clusca/noise_schedule.hpp"
#include "clusca/run_report.hpp"

namespace clusca {

// Which features to keep while sampling.
struct TrajectorySpec {
  bool features = false;  // record (layer, module) output every `stride` steps
  int layer = -1;         // < 0 counts from the last block
  Module module = Module::block;
  std::size_t stride = 1;
  bool latents = false;           // keep the latent after every step
  bool analysis_clusters = false; // K-Means on each recorded snapshot
  std::size_t analysis_clusters_k = 16;
  std::vector<std::size_t> ari_offsets = {1, 2, 5, 10};
};

struct SampleOptions {
  std::string run_id = "run";
  std::size_t class_label = 0;
  std::uint64_t noise_seed = 0;
  std::uint64_t clustering_seed = 0;
  std::uint64_t selection_seed = 0;
  UpdateRule update_rule = UpdateRule::direct;
  // A step may grow the latent Frobenius norm by at most this factor.
  double divergence_factor = 10.0;
  TrajectorySpec record;
};

// The step plan `sample` runs under `cache` (all full for the Full policy).
StepPlan plan_for(const CacheConfig& cache, std::size_t steps);

// Denoises seeded Gaussian noise from t = steps down to 1. Throws
// NumericalError (with the step index) on a non-finite latent or a norm jump
// beyond divergence_factor, and PolicyError / ConfigError from the cache.
RunReport sample(const Model& model, const CacheConfig& cache, const NoiseSchedule& schedule,
                 const SampleOptions& options);

}  // namespace clusca
