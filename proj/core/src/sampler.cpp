#include "clusca/sampler.hpp"

#include <chrono>
#include <string>

#include "clusca/cache_engine.hpp"
#include "clusca/error.hpp"
#include "clusca/numeric.hpp"

namespace clusca {
namespace {

using Clock = std::chrono::steady_clock;

// Forwards to the policy engine and snapshots the requested module output.
class RecordingContext final : public CacheContext {
 public:
  RecordingContext(CacheEngine& engine, std::size_t layer, Module module)
      : engine_(engine), layer_(layer), module_(module) {}

  void arm(bool on) noexcept {
    armed_ = on;
    captured_.reset();
  }
  std::optional<FeatureMap> take() { return std::exchange(captured_, std::nullopt); }

  ComputeSet compute_set(std::size_t layer) override { return engine_.compute_set(layer); }

  FeatureMap resolve(std::size_t layer, Module module, const ComputeSet& compute,
                     const FeatureMap& computed) override {
    FeatureMap out = engine_.resolve(layer, module, compute, computed);
    if (armed_ && layer == layer_ && module == module_) captured_ = out;
    return out;
  }

  void observe(std::size_t layer, const FeatureMap& block_output) override {
    engine_.observe(layer, block_output);
    if (armed_ && layer == layer_ && module_ == Module::block) captured_ = block_output;
  }

 private:
  CacheEngine& engine_;
  std::size_t layer_;
  Module module_;
  bool armed_ = false;
  std::optional<FeatureMap> captured_;
};

ClusteringRecord record_of(std::size_t step, const ClusterAssignment& a, const DistanceStats& s) {
  return {step, a.iterations, a.inertia, a.non_empty_clusters(), s, a.labels};
}

}  // namespace

StepPlan plan_for(const CacheConfig& cache, std::size_t steps) {
  if (cache.policy == PolicyKind::full) return plan_schedule(steps, 1, false);
  return plan_schedule(steps, cache.interval, cache.rearrange_last);
}

RunReport sample(const Model& model, const CacheConfig& cache, const NoiseSchedule& schedule,
                 const SampleOptions& options) {
  const auto run_start = Clock::now();
  const ModelConfig& cfg = model.config();
  cache.validate(cfg);
  if (!(options.divergence_factor > 1.0)) {
    throw ConfigError("report.divergence_factor", "must be > 1");
  }
  if (options.record.stride < 1) throw ConfigError("record.stride", "must be >= 1");
  const auto depth = static_cast<int>(cfg.depth);
  if (options.record.layer >= depth || options.record.layer < -depth) {
    throw ConfigError("record.layer", "out of range for depth " + std::to_string(depth));
  }
  const std::size_t record_layer = static_cast<std::size_t>(
      options.record.layer < 0 ? depth + options.record.layer : options.record.layer);

  const std::size_t steps = schedule.steps();
  CacheEngine engine(cfg, cache, plan_for(cache, steps),
                     EngineSeeds{options.clustering_seed, options.selection_seed});
  RecordingContext ctx(engine, record_layer, options.record.module);

  RunReport report;
  report.run_id = options.run_id;
  report.cache = cache;

  SeededRng noise(options.noise_seed, RngStream::noise);
  FeatureMap latent = seeded_gaussian(cfg.tokens(), cfg.dim, noise);
  double norm = frobenius_norm(latent);

  for (std::size_t i = 0; i < steps; ++i) {
    const std::size_t t = steps - i;
    engine.begin_step(i);
    const bool capture = options.record.features && i % options.record.stride == 0;
    ctx.arm(capture);
    const FeatureMap eps = predict_noise(model, latent, t, options.class_label, ctx);
    engine.end_step();

    latent = ddim_step(latent, eps, t, schedule, options.update_rule);
    if (!latent.all_finite()) throw NumericalError(i, "latent became non-finite");
    const double next_norm = frobenius_norm(latent);
    if (next_norm > options.divergence_factor * norm) {
      throw NumericalError(i, "latent norm grew from " + std::to_string(norm) + " to " +
                                  std::to_string(next_norm));
    }
    norm = next_norm;

    const StepAccounting& acc = engine.step_accounting();
    report.steps.push_back({i, t, engine.current_tag(), engine.current_offset(),
                            acc.computed_tokens, acc.kmeans_iterations, acc.flops, norm,
                            std::nullopt});
    report.flops += acc.flops;
    report.wall_time.clustering += acc.clustering_seconds;
    report.wall_time.propagation += acc.propagation_seconds;

    if (auto snap = ctx.take()) {
      report.trajectory.push_back({i, t, record_layer, options.record.module, std::move(*snap)});
    }
    if (options.record.latents) report.latents.push_back(latent);
  }

  for (const auto& e : engine.clusterings()) {
    report.clusterings.push_back(record_of(e.step, e.assignment, e.stats));
  }

  std::vector<LabeledStep> labeled;
  if (options.record.analysis_clusters && !report.trajectory.empty()) {
    const auto start = Clock::now();
    std::optional<CentroidCache> warm;
    const std::size_t k = std::min(options.record.analysis_clusters_k, cfg.tokens());
    for (const auto& snap : report.trajectory) {
      KMeansInit init = warm ? KMeansInit{WarmStart{*warm}}
                             : KMeansInit{RandomInit{options.clustering_seed}};
      ClusterAssignment a =
          kmeans(snap.features, k, init, {cache.kmeans_max_iters, cache.kmeans_tol});
      warm = CentroidCache{a.centroids, snap.step};
      report.analysis_clusterings.push_back(
          record_of(snap.step, a, distance_stats(snap.features, a)));
      labeled.push_back({snap.step, a.labels});
    }
    report.wall_time.analysis = std::chrono::duration<double>(Clock::now() - start).count();
  } else {
    for (const auto& c : report.clusterings) labeled.push_back({c.step, c.labels});
  }
  report.ari = ari_series(labeled, options.record.ari_offsets);

  report.final_latent = std::move(latent);
  report.wall_time.total = std::chrono::duration<double>(Clock::now() - run_start).count();
  report.wall_time.model =
      report.wall_time.total - report.wall_time.clustering - report.wall_time.propagation -
      report.wall_time.analysis;
  return report;
}

}  // namespace clusca
