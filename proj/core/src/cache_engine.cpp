#include "clusca/cache_engine.hpp"

#include <chrono>
#include <string>

#include "clusca/error.hpp"

namespace clusca {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t slot(std::size_t layer, Module module) {
  return layer * 2 + (module == Module::mlp ? 1 : 0);
}

// k distinct tokens drawn uniformly (partial Fisher-Yates), sorted.
ComputeSet random_subset(std::size_t tokens, std::size_t count, SeededRng& rng) {
  std::vector<std::size_t> pool(tokens);
  for (std::size_t i = 0; i < tokens; ++i) pool[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.uniform_index(tokens - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return ComputeSet::from_indices(std::move(pool), tokens);
}

}  // namespace

std::string_view to_string(Resolution r) noexcept {
  switch (r) {
    case Resolution::refresh: return "refresh";
    case Resolution::reuse: return "reuse";
    case Resolution::forecast: return "forecast";
    case Resolution::overwrite: return "overwrite";
    case Resolution::propagate: return "propagate";
  }
  return "?";
}

CacheEngine::CacheEngine(const ModelConfig& model, const CacheConfig& cache, StepPlan plan,
                         EngineSeeds seeds)
    : model_(model),
      cache_(cache),
      plan_(std::move(plan)),
      flops_(FlopsModel::from(model)),
      cluster_layer_(0),
      selection_rng_(seeds.selection, RngStream::selection),
      clustering_seed_(seeds.clustering) {
  model_.validate();
  cache_.validate(model_);
  cluster_layer_ = cache_.resolved_cluster_layer(model_);
  if (plan_.size() > 0 && plan_.tags.front() != StepTag::full) {
    throw PolicyError("step plan must begin with a full step");
  }
  entries_.assign(model_.depth * 2, TaylorCacheEntry(cache_.order));
}

std::size_t CacheEngine::checked_slot(std::size_t layer, Module module) const {
  if (layer >= model_.depth || module == Module::block) {
    throw PolicyError("no cache entry for layer " + std::to_string(layer) + " " +
                      std::string(to_string(module)));
  }
  return slot(layer, module);
}

const TaylorCacheEntry& CacheEngine::entry(std::size_t layer, Module module) const {
  return entries_[checked_slot(layer, module)];
}

void CacheEngine::begin_step(std::size_t index) {
  if (index >= plan_.size()) throw PolicyError("step " + std::to_string(index) + " beyond plan");
  step_ = index;
  in_step_ = true;
  tag_ = cache_.policy == PolicyKind::full ? StepTag::full : plan_.tags[index];
  offset_ = tag_ == StepTag::full ? 0 : plan_.offsets[index];
  accounting_ = StepAccounting{};

  const std::size_t tokens = model_.tokens();
  if (tag_ == StepTag::full) {
    step_compute_ = ComputeSet::all(tokens);
  } else {
    switch (cache_.policy) {
      case PolicyKind::full:
        step_compute_ = ComputeSet::all(tokens);
        break;
      case PolicyKind::fora:
      case PolicyKind::taylorseer:
        step_compute_ = ComputeSet{};
        break;
      case PolicyKind::toca:
        step_compute_ = random_subset(tokens, std::min(cache_.clusters, tokens), selection_rng_);
        break;
      case PolicyKind::clusca:
        if (!assignment_) throw PolicyError("partial ClusCa step without a cluster assignment");
        step_compute_ = cache_.skip_representatives
                            ? ComputeSet{}
                            : select_representatives(*assignment_, selection_rng_);
        break;
    }
  }

  accounting_.computed_tokens = step_compute_.size();
  accounting_.flops.full_reference = model_.depth * flops_.block(tokens);
  accounting_.flops.model = model_.depth * flops_.block(step_compute_.size());
  if (tag_ == StepTag::partial && cache_.policy == PolicyKind::clusca) {
    accounting_.flops.propagation = model_.depth * 2 * flops_.propagation(step_compute_.size());
  }
}

Directive CacheEngine::directive(std::size_t layer, Module module) const {
  if (!in_step_) throw PolicyError("directive requested outside a step");
  if (layer >= model_.depth || module == Module::block) {
    throw PolicyError("no directive for layer " + std::to_string(layer) + " " +
                      std::string(to_string(module)));
  }
  Directive d{tag_, step_compute_, Resolution::refresh};
  if (tag_ == StepTag::full) return d;
  switch (cache_.policy) {
    case PolicyKind::full: d.resolution = Resolution::refresh; break;
    case PolicyKind::fora: d.resolution = Resolution::reuse; break;
    case PolicyKind::taylorseer: d.resolution = Resolution::forecast; break;
    case PolicyKind::toca: d.resolution = Resolution::overwrite; break;
    case PolicyKind::clusca: d.resolution = Resolution::propagate; break;
  }
  return d;
}

ComputeSet CacheEngine::compute_set(std::size_t layer) {
  if (layer >= model_.depth) throw PolicyError("layer " + std::to_string(layer) + " out of range");
  return step_compute_;
}

FeatureMap CacheEngine::resolve(std::size_t layer, Module module, const ComputeSet& compute,
                                const FeatureMap& computed) {
  const Directive d = directive(layer, module);
  if (compute != d.compute) throw PolicyError("resolve called with a foreign compute set");
  TaylorCacheEntry& e = entries_[checked_slot(layer, module)];

  if (d.resolution == Resolution::refresh) {
    refresh_full(e, computed, step_);
    if (layer == cluster_layer_ && module == cache_.cluster_module) cluster_input_ = computed;
    return computed;
  }
  if (!e.refreshed()) {
    throw PolicyError("layer " + std::to_string(layer) + " " + std::string(to_string(module)) +
                      " has no cached value");
  }
  switch (d.resolution) {
    case Resolution::reuse: return e.base();
    case Resolution::forecast: return taylor_forecast(e, offset_, cache_.interval, cache_.order);
    case Resolution::overwrite: return toca_update(e, computed, compute);
    case Resolution::propagate: {
      const auto start = Clock::now();
      FeatureMap out = clusca_update(e, computed, compute, assignment_->labels,
                                     assignment_->clusters, cache_.gamma, offset_,
                                     cache_.interval, cache_.order);
      accounting_.propagation_seconds += seconds_since(start);
      return out;
    }
    case Resolution::refresh: break;
  }
  return computed;
}

void CacheEngine::observe(std::size_t layer, const FeatureMap& block_output) {
  if (tag_ == StepTag::full && layer == cluster_layer_ && cache_.cluster_module == Module::block) {
    cluster_input_ = block_output;
  }
}

void CacheEngine::end_step() {
  if (!in_step_) throw PolicyError("end_step without begin_step");
  in_step_ = false;
  if (cache_.policy != PolicyKind::clusca || tag_ != StepTag::full || !plan_.opens_cycle(step_)) {
    return;
  }
  if (cluster_input_.empty()) throw PolicyError("no clustering input captured at full step");

  const auto start = Clock::now();
  const KMeansOptions opts{cache_.kmeans_max_iters, cache_.kmeans_tol};
  KMeansInit init = centroids_ ? KMeansInit{WarmStart{*centroids_}}
                               : KMeansInit{RandomInit{clustering_seed_}};
  ClusterAssignment a = kmeans(cluster_input_, cache_.clusters, init, opts);
  accounting_.clustering_seconds = seconds_since(start);
  accounting_.kmeans_iterations = a.iterations;
  accounting_.flops.clustering = a.iterations * flops_.kmeans_iteration(cache_.clusters);

  centroids_ = CentroidCache{a.centroids, step_};
  events_.push_back({step_, a, distance_stats(cluster_input_, a)});
  assignment_ = std::move(a);
  cluster_input_ = FeatureMap{};
}

}  // namespace clusca
