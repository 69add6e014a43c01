#pragma once

#include <cstddef>
#include <cstdint>

#include "clusca/cache_config.hpp"
#include "clusca/model.hpp"

namespace clusca {

// Closed-form multiply-accumulate counts for one block with `computed` of the
// T tokens recomputed. Counts cover the cached modules only; the input
// embedding and output projection run on every token under every policy and
// are left out.
//
//   attention = 2 T D^2        key and value projections (all tokens)
//             + c D^2          query projection
//             + 2 c T D        scores and weighted sum
//             + c D^2          output projection
//   mlp       = 8 c D^2
//
// Nothing is charged when c = 0. One K-Means iteration costs T K D distance
// terms; blending one cached module costs 2 (T - c) D.
struct FlopsModel {
  std::uint64_t tokens = 0;
  std::uint64_t dim = 0;

  static FlopsModel from(const ModelConfig& cfg) noexcept {
    return {static_cast<std::uint64_t>(cfg.tokens()), static_cast<std::uint64_t>(cfg.dim)};
  }

  std::uint64_t attention(std::uint64_t computed) const noexcept;
  std::uint64_t mlp(std::uint64_t computed) const noexcept;
  std::uint64_t block(std::uint64_t computed) const noexcept {
    return attention(computed) + mlp(computed);
  }
  std::uint64_t kmeans_iteration(std::uint64_t clusters) const noexcept {
    return tokens * clusters * dim;
  }
  std::uint64_t propagation(std::uint64_t computed) const noexcept {
    return 2 * (tokens - computed) * dim;
  }
};

struct FlopsTotals {
  std::uint64_t model = 0;
  std::uint64_t clustering = 0;
  std::uint64_t propagation = 0;
  std::uint64_t full_reference = 0;  // same run under the Full policy

  std::uint64_t total() const noexcept { return model + clustering + propagation; }
  double speedup() const noexcept;        // full_reference / total
  double model_speedup() const noexcept;  // full_reference / model
  double clustering_share() const noexcept;

  FlopsTotals& operator+=(const FlopsTotals& other) noexcept;
  friend bool operator==(const FlopsTotals&, const FlopsTotals&) = default;
};

// Tokens a partial step recomputes per block under `cache`.
std::uint64_t partial_compute_tokens(const ModelConfig& model, const CacheConfig& cache) noexcept;

// Analytic totals for a whole run. ClusCa partial steps are assumed to have
// all K clusters non-empty; every clustering is charged
// `kmeans_iterations` Lloyd iterations.
FlopsTotals count_flops(const ModelConfig& model, const StepPlan& plan, const CacheConfig& cache,
                        std::size_t kmeans_iterations = 0);

}  // namespace clusca
