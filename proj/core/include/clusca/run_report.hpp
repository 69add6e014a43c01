#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "clusca/cache_config.hpp"
#include "clusca/clustering.hpp"
#include "clusca/feature_map.hpp"
#include "clusca/flops.hpp"
#include "clusca/metrics.hpp"
#include "clusca/model.hpp"

namespace clusca {

struct StepRecord {
  std::size_t index = 0;     // 0-based position in the denoising loop
  std::size_t timestep = 0;  // t, counting down from the step count to 1
  StepTag tag = StepTag::full;
  std::size_t offset = 0;    // steps since the last full step
  std::size_t computed_tokens = 0;
  std::size_t kmeans_iterations = 0;
  FlopsTotals flops;
  double latent_norm = 0.0;
  std::optional<double> relative_error;  // vs the oracle latent at the same step

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct ClusteringRecord {
  std::size_t step = 0;
  std::size_t iterations = 0;
  double inertia = 0.0;
  std::size_t non_empty = 0;
  DistanceStats stats;
  std::vector<Label> labels;

  friend bool operator==(const ClusteringRecord& a, const ClusteringRecord& b) {
    return a.step == b.step && a.iterations == b.iterations && a.inertia == b.inertia &&
           a.non_empty == b.non_empty && a.stats.intra_mean == b.stats.intra_mean &&
           a.stats.global_mean == b.stats.global_mean && a.stats.ratio == b.stats.ratio &&
           a.labels == b.labels;
  }
};

struct TrajectorySnapshot {
  std::size_t step = 0;
  std::size_t timestep = 0;
  std::size_t layer = 0;
  Module module = Module::block;
  FeatureMap features;

  friend bool operator==(const TrajectorySnapshot&, const TrajectorySnapshot&) = default;
};

// Wall-clock seconds. Never part of determinism comparisons.
struct WallTime {
  double model = 0.0;
  double clustering = 0.0;
  double propagation = 0.0;
  double analysis = 0.0;  // trajectory clustering, outside the policy
  double total = 0.0;
};

struct RunReport {
  std::string run_id;
  CacheConfig cache;
  FeatureMap final_latent;
  FlopsTotals flops;
  std::vector<StepRecord> steps;
  std::vector<ClusteringRecord> clusterings;           // cycle-initial (policy) clusterings
  std::vector<ClusteringRecord> analysis_clusterings;  // one per recorded snapshot, if requested
  std::vector<AriPoint> ari;
  std::vector<TrajectorySnapshot> trajectory;
  std::vector<FeatureMap> latents;  // latent after each step, if requested
  std::optional<double> relative_error;
  WallTime wall_time;
};

// Equality over every field except wall time.
bool deterministic_equal(const RunReport& a, const RunReport& b);

// Fills the final and per-step relative errors against an oracle run of the
// same model, schedule and seeds. Per-step errors need latents in both.
void compare_to_oracle(RunReport& report, const RunReport& oracle);

struct ReportFormat {
  bool include_timing = false;
  bool include_latent = true;
};

std::string to_json(const RunReport& report, const ReportFormat& format = {});

// Shortest decimal text that round-trips to the same double.
std::string format_number(double value);

// Long-format trace: header "step,timestep,tag,metric,value", one row per
// (step, metric), then one row per clustering and ARI point.
std::string to_trace_csv(const RunReport& report);

}  // namespace clusca
