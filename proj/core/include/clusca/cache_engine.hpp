#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "clusca/cache_config.hpp"
#include "clusca/clustering.hpp"
#include "clusca/flops.hpp"
#include "clusca/model.hpp"
#include "clusca/rng.hpp"
#include "clusca/taylor_cache.hpp"

namespace clusca {

// How a module's full estimate is produced from its computed rows.
enum class Resolution {
  refresh,    // every token computed; cache refreshed
  reuse,      // last full-step feature, unchanged
  forecast,   // Taylor forecast at the cycle offset
  overwrite,  // computed rows written into the working cache
  propagate,  // computed rows + gamma-weighted cluster means over the forecast
};

std::string_view to_string(Resolution r) noexcept;

struct Directive {
  StepTag tag = StepTag::full;
  ComputeSet compute;
  Resolution resolution = Resolution::refresh;

  friend bool operator==(const Directive&, const Directive&) = default;
};

struct EngineSeeds {
  std::uint64_t clustering = 0;
  std::uint64_t selection = 0;
};

struct ClusteringEvent {
  std::size_t step = 0;
  ClusterAssignment assignment;
  DistanceStats stats;
};

struct StepAccounting {
  FlopsTotals flops;
  std::size_t computed_tokens = 0;
  std::size_t kmeans_iterations = 0;
  double clustering_seconds = 0.0;
  double propagation_seconds = 0.0;
};

// Cache state of one sampling run under one policy.
//
// Usage per denoising step: begin_step(i), predict_noise(..., engine),
// end_step(). Clustering happens in end_step() of every full step that is
// followed by a partial step, on the configured layer's output, warm-started
// from the previous clustering's centroids.
class CacheEngine final : public CacheContext {
 public:
  CacheEngine(const ModelConfig& model, const CacheConfig& cache, StepPlan plan, EngineSeeds seeds);

  void begin_step(std::size_t index);
  void end_step();

  Directive directive(std::size_t layer, Module module) const;

  ComputeSet compute_set(std::size_t layer) override;
  FeatureMap resolve(std::size_t layer, Module module, const ComputeSet& compute,
                     const FeatureMap& computed) override;
  void observe(std::size_t layer, const FeatureMap& block_output) override;

  const StepPlan& plan() const noexcept { return plan_; }
  const CacheConfig& config() const noexcept { return cache_; }
  const StepAccounting& step_accounting() const noexcept { return accounting_; }
  StepTag current_tag() const noexcept { return tag_; }
  std::size_t current_offset() const noexcept { return offset_; }
  const std::optional<ClusterAssignment>& assignment() const noexcept { return assignment_; }
  std::span<const ClusteringEvent> clusterings() const noexcept { return events_; }
  const TaylorCacheEntry& entry(std::size_t layer, Module module) const;

 private:
  std::size_t checked_slot(std::size_t layer, Module module) const;

  ModelConfig model_;
  CacheConfig cache_;
  StepPlan plan_;
  FlopsModel flops_;
  std::size_t cluster_layer_;
  SeededRng selection_rng_;
  std::uint64_t clustering_seed_;

  std::vector<TaylorCacheEntry> entries_;  // [layer * 2 + module]
  std::optional<ClusterAssignment> assignment_;
  std::optional<CentroidCache> centroids_;
  std::vector<ClusteringEvent> events_;
  FeatureMap cluster_input_;

  std::size_t step_ = 0;
  bool in_step_ = false;
  StepTag tag_ = StepTag::full;
  std::size_t offset_ = 0;
  ComputeSet step_compute_;
  StepAccounting accounting_;
};

}  // namespace clusca
