#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clusca/cache_config.hpp"
#include "clusca/model.hpp"
#include "clusca/noise_schedule.hpp"
#include "clusca/run_report.hpp"
#include "clusca/sampler.hpp"

namespace clusca::cli {

// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
};

// Environment variable that replaces the config's output_dir.
inline constexpr const char* kOutputRootEnv = "CLUSCA_OUTPUT_DIR";

struct ScheduleSettings {
  std::size_t steps = 50;
  double alpha_start = 0.999;
  double alpha_end = 0.95;
  ScheduleShape shape = ScheduleShape::linear;
  UpdateRule update_rule = UpdateRule::direct;
};

struct Seeds {
  std::uint64_t weights = 0;
  std::uint64_t noise = 1;
  std::uint64_t clustering = 2;
  std::uint64_t selection = 3;
};

struct ExperimentConfig {
  std::string run_id = "clusca";
  std::filesystem::path output_dir = "clusca-out";
  ModelConfig model;
  std::size_t class_label = 0;
  ScheduleSettings schedule;
  CacheConfig cache;
  Seeds seeds;
  TrajectorySpec record;
  bool compare_oracle = true;
  bool include_timing = false;
  double divergence_factor = 10.0;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// JSON text with optional sections model, schedule, cache, seeds, record and
// report. Missing fields keep their defaults; unknown fields are rejected.
// Syntax errors are reported with line and column.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

NoiseSchedule build_schedule(const ExperimentConfig& cfg);
SampleOptions build_sample_options(const ExperimentConfig& cfg);

struct ExperimentResult {
  RunReport report;
  std::optional<RunReport> oracle;
};

// Runs the configured policy and, when compare_oracle is set, the Full
// policy with the same seeds, filling relative errors.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Model& model);

// "name[:key=value]..." with keys interval, clusters, gamma, order,
// rearrange_last, skip_representatives. Example: "clusca:interval=1:gamma=0".
CacheConfig apply_policy_spec(CacheConfig base, std::string_view spec);

// Sets one sweep axis (gamma, N, K or O) on the cache configuration.
void apply_axis(CacheConfig& cache, std::string_view axis, double value);

std::filesystem::path output_root(const ExperimentConfig& cfg);

// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

int cmd_run(const std::filesystem::path& config, std::ostream& out, std::ostream& err);
int cmd_compare(const std::filesystem::path& config, const std::vector<std::string>& policies,
                std::size_t jobs, std::ostream& out, std::ostream& err);
int cmd_sweep(const std::filesystem::path& config, std::string_view axis,
              const std::vector<std::string>& values, std::size_t jobs, std::ostream& out,
              std::ostream& err);

}  // namespace clusca::cli
