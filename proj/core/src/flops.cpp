#include "clusca/flops.hpp"

#include <algorithm>

namespace clusca {

std::uint64_t FlopsModel::attention(std::uint64_t computed) const noexcept {
  if (computed == 0) return 0;
  const std::uint64_t d2 = dim * dim;
  return 2 * tokens * d2 + computed * d2 + 2 * computed * tokens * dim + computed * d2;
}

std::uint64_t FlopsModel::mlp(std::uint64_t computed) const noexcept {
  return 8 * computed * dim * dim;
}

double FlopsTotals::speedup() const noexcept {
  const auto t = total();
  return t == 0 ? 0.0 : static_cast<double>(full_reference) / static_cast<double>(t);
}

double FlopsTotals::model_speedup() const noexcept {
  return model == 0 ? 0.0 : static_cast<double>(full_reference) / static_cast<double>(model);
}

double FlopsTotals::clustering_share() const noexcept {
  const auto t = total();
  return t == 0 ? 0.0 : static_cast<double>(clustering) / static_cast<double>(t);
}

FlopsTotals& FlopsTotals::operator+=(const FlopsTotals& other) noexcept {
  model += other.model;
  clustering += other.clustering;
  propagation += other.propagation;
  full_reference += other.full_reference;
  return *this;
}

std::uint64_t partial_compute_tokens(const ModelConfig& model, const CacheConfig& cache) noexcept {
  const std::uint64_t tokens = model.tokens();
  switch (cache.policy) {
    case PolicyKind::full: return tokens;
    case PolicyKind::fora:
    case PolicyKind::taylorseer: return 0;
    case PolicyKind::toca: return std::min<std::uint64_t>(cache.clusters, tokens);
    case PolicyKind::clusca:
      return cache.skip_representatives ? 0 : std::min<std::uint64_t>(cache.clusters, tokens);
  }
  return tokens;
}

FlopsTotals count_flops(const ModelConfig& model, const StepPlan& plan, const CacheConfig& cache,
                        std::size_t kmeans_iterations) {
  const FlopsModel fm = FlopsModel::from(model);
  const std::uint64_t depth = model.depth;
  const std::uint64_t full_step = depth * fm.block(fm.tokens);
  const std::uint64_t partial_tokens = partial_compute_tokens(model, cache);
  const bool clusca = cache.policy == PolicyKind::clusca;
  const bool clusters_are_tokens = cache.clusters >= model.tokens();

  FlopsTotals totals;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    totals.full_reference += full_step;
    const bool full = cache.policy == PolicyKind::full || plan.tags[i] == StepTag::full;
    if (full) {
      totals.model += full_step;
      if (clusca && plan.opens_cycle(i) && !clusters_are_tokens) {
        totals.clustering += kmeans_iterations * fm.kmeans_iteration(cache.clusters);
      }
      continue;
    }
    totals.model += depth * fm.block(partial_tokens);
    if (clusca) totals.propagation += depth * 2 * fm.propagation(partial_tokens);
  }
  return totals;
}

}  // namespace clusca
