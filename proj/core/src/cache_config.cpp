#include "clusca/cache_config.hpp"

#include <algorithm>
#include <string>

#include "clusca/error.hpp"

namespace clusca {

std::string_view to_string(PolicyKind p) noexcept {
  switch (p) {
    case PolicyKind::full: return "full";
    case PolicyKind::fora: return "fora";
    case PolicyKind::toca: return "toca";
    case PolicyKind::taylorseer: return "taylorseer";
    case PolicyKind::clusca: return "clusca";
  }
  return "?";
}

PolicyKind policy_from_string(std::string_view name) {
  if (name == "full") return PolicyKind::full;
  if (name == "fora") return PolicyKind::fora;
  if (name == "toca") return PolicyKind::toca;
  if (name == "taylorseer") return PolicyKind::taylorseer;
  if (name == "clusca") return PolicyKind::clusca;
  throw ConfigError("cache.policy", "unknown policy '" + std::string(name) +
                                        "' (expected full, fora, toca, taylorseer or clusca)");
}

std::string_view to_string(StepTag t) noexcept { return t == StepTag::full ? "full" : "partial"; }

void CacheConfig::validate(const ModelConfig& model) const {
  if (interval < 1) throw ConfigError("cache.interval", "must be >= 1");
  if (clusters < 1) throw ConfigError("cache.clusters", "must be >= 1");
  if (clusters > model.tokens()) {
    throw ConfigError("cache.clusters", "K = " + std::to_string(clusters) +
                                            " exceeds token count T = " +
                                            std::to_string(model.tokens()));
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("cache.gamma", "must lie in [0, 1]");
  if (kmeans_max_iters < 1) throw ConfigError("cache.kmeans_max_iters", "must be >= 1");
  if (!(kmeans_tol >= 0.0)) throw ConfigError("cache.kmeans_tol", "must be >= 0");
  const auto depth = static_cast<int>(model.depth);
  if (cluster_layer >= depth || cluster_layer < -depth) {
    throw ConfigError("cache.cluster_layer", "out of range for depth " + std::to_string(depth));
  }
}

std::size_t CacheConfig::resolved_cluster_layer(const ModelConfig& model) const {
  const auto depth = static_cast<int>(model.depth);
  return static_cast<std::size_t>(cluster_layer < 0 ? depth + cluster_layer : cluster_layer);
}

std::size_t StepPlan::full_count() const noexcept {
  return static_cast<std::size_t>(std::ranges::count(tags, StepTag::full));
}

bool StepPlan::opens_cycle(std::size_t index) const noexcept {
  return index + 1 < tags.size() && tags[index] == StepTag::full &&
         tags[index + 1] == StepTag::partial;
}

StepPlan plan_schedule(std::size_t steps, std::size_t interval, bool rearrange_last) {
  if (interval < 1) throw ConfigError("cache.interval", "must be >= 1");
  StepPlan plan;
  plan.tags.resize(steps, StepTag::partial);
  for (std::size_t i = 0; i < steps; i += interval) plan.tags[i] = StepTag::full;

  if (rearrange_last && steps > 1 && plan.tags.back() == StepTag::partial) {
    for (std::size_t i = steps - 1; i > 0; --i) {
      if (plan.tags[i] == StepTag::full) {
        plan.tags[i] = StepTag::partial;
        plan.tags.back() = StepTag::full;
        break;
      }
    }
  }

  plan.offsets.resize(steps, 0);
  std::size_t since = 0;
  for (std::size_t i = 0; i < steps; ++i) {
    since = plan.tags[i] == StepTag::full ? 0 : since + 1;
    plan.offsets[i] = since;
  }
  return plan;
}

}  // namespace clusca
