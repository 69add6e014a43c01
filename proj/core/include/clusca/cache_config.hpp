#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "clusca/model.hpp"

namespace clusca {

enum class PolicyKind {
  full,        // compute everything every step (the oracle)
  fora,        // reuse the last full-step features unchanged
  toca,        // random K-token subset recomputed, others keep their cache
  taylorseer,  // Taylor forecast of every module
  clusca,      // cluster representatives + forecast + spatial propagation
};

std::string_view to_string(PolicyKind p) noexcept;
PolicyKind policy_from_string(std::string_view name);

struct CacheConfig {
  PolicyKind policy = PolicyKind::clusca;
  std::size_t interval = 5;  // N
  std::size_t clusters = 16; // K
  double gamma = 0.005;      // propagation ratio
  std::size_t order = 2;     // Taylor order O
  bool rearrange_last = false;

  // Where cycle-initial clustering reads its features. layer < 0 counts from
  // the last block.
  int cluster_layer = -1;
  Module cluster_module = Module::block;

  std::size_t kmeans_max_iters = 50;
  double kmeans_tol = 1e-6;

  // Partial ClusCa steps compute no tokens at all (reduction checks).
  bool skip_representatives = false;

  // Throws ConfigError naming the field.
  void validate(const ModelConfig& model) const;
  std::size_t resolved_cluster_layer(const ModelConfig& model) const;
};

enum class StepTag { full, partial };

std::string_view to_string(StepTag t) noexcept;

// Per denoising step (index 0 is the first step, t = steps): a tag and the
// number of steps since the most recent full step.
struct StepPlan {
  std::vector<StepTag> tags;
  std::vector<std::size_t> offsets;

  std::size_t size() const noexcept { return tags.size(); }
  std::size_t full_count() const noexcept;
  // True when step `index` is full and the step after it is partial.
  bool opens_cycle(std::size_t index) const noexcept;
};

// Full at indices divisible by N. With rearrange_last, when the final step
// would be partial, the latest non-initial full step moves to the end.
StepPlan plan_schedule(std::size_t steps, std::size_t interval, bool rearrange_last);

}  // namespace clusca
