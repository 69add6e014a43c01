#include "clusca/run_report.hpp"

#include <array>
#include <charconv>
#include <sstream>

#include "clusca/error.hpp"
#include "json.hpp"

namespace clusca {
namespace {

using nlohmann::ordered_json;

ordered_json matrix_json(const FeatureMap& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  }
  return rows;
}

ordered_json flops_json(const FlopsTotals& f) {
  return {{"model", f.model},
          {"clustering", f.clustering},
          {"propagation", f.propagation},
          {"total", f.total()},
          {"full_reference", f.full_reference},
          {"speedup", f.speedup()},
          {"model_speedup", f.model_speedup()},
          {"clustering_share", f.clustering_share()}};
}

ordered_json cache_json(const CacheConfig& c) {
  return {{"policy", to_string(c.policy)},
          {"interval", c.interval},
          {"clusters", c.clusters},
          {"gamma", c.gamma},
          {"order", c.order},
          {"rearrange_last", c.rearrange_last},
          {"cluster_layer", c.cluster_layer},
          {"cluster_module", to_string(c.cluster_module)},
          {"kmeans_max_iters", c.kmeans_max_iters},
          {"kmeans_tol", c.kmeans_tol},
          {"skip_representatives", c.skip_representatives}};
}

ordered_json clustering_json(const ClusteringRecord& r) {
  return {{"step", r.step},
          {"iterations", r.iterations},
          {"inertia", r.inertia},
          {"non_empty", r.non_empty},
          {"intra_mean", r.stats.intra_mean},
          {"global_mean", r.stats.global_mean},
          {"distance_ratio", r.stats.ratio},
          {"labels", r.labels}};
}

std::string number(double v) { return format_number(v); }

}  // namespace

std::string format_number(double value) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

bool deterministic_equal(const RunReport& a, const RunReport& b) {
  const auto same_cache = cache_json(a.cache) == cache_json(b.cache);
  return a.run_id == b.run_id && same_cache && a.final_latent == b.final_latent &&
         a.flops == b.flops && a.steps == b.steps && a.clusterings == b.clusterings &&
         a.analysis_clusterings == b.analysis_clusterings && a.ari == b.ari &&
         a.trajectory == b.trajectory && a.latents == b.latents &&
         a.relative_error == b.relative_error;
}

void compare_to_oracle(RunReport& report, const RunReport& oracle) {
  report.relative_error = relative_error(report.final_latent, oracle.final_latent);
  if (report.latents.size() == report.steps.size() &&
      oracle.latents.size() == report.latents.size()) {
    for (std::size_t i = 0; i < report.steps.size(); ++i) {
      report.steps[i].relative_error = relative_error(report.latents[i], oracle.latents[i]);
    }
  }
}

std::string to_json(const RunReport& report, const ReportFormat& format) {
  ordered_json j;
  j["run_id"] = report.run_id;
  j["cache"] = cache_json(report.cache);
  j["flops"] = flops_json(report.flops);
  j["relative_error"] =
      report.relative_error ? ordered_json(*report.relative_error) : ordered_json(nullptr);

  ordered_json steps = ordered_json::array();
  for (const auto& s : report.steps) {
    steps.push_back({{"index", s.index},
                     {"timestep", s.timestep},
                     {"tag", to_string(s.tag)},
                     {"offset", s.offset},
                     {"computed_tokens", s.computed_tokens},
                     {"kmeans_iterations", s.kmeans_iterations},
                     {"flops", flops_json(s.flops)},
                     {"latent_norm", s.latent_norm},
                     {"relative_error", s.relative_error ? ordered_json(*s.relative_error)
                                                         : ordered_json(nullptr)}});
  }
  j["steps"] = std::move(steps);

  ordered_json clusterings = ordered_json::array();
  for (const auto& c : report.clusterings) clusterings.push_back(clustering_json(c));
  j["clusterings"] = std::move(clusterings);
  ordered_json analysis = ordered_json::array();
  for (const auto& c : report.analysis_clusterings) analysis.push_back(clustering_json(c));
  j["analysis_clusterings"] = std::move(analysis);

  ordered_json ari = ordered_json::array();
  for (const auto& p : report.ari) {
    ari.push_back({{"offset", p.offset},
                   {"from_step", p.from_step},
                   {"to_step", p.to_step},
                   {"ari", p.value}});
  }
  j["ari"] = std::move(ari);

  ordered_json trajectory = ordered_json::array();
  for (const auto& t : report.trajectory) {
    trajectory.push_back({{"step", t.step},
                          {"timestep", t.timestep},
                          {"layer", t.layer},
                          {"module", to_string(t.module)},
                          {"features", matrix_json(t.features)}});
  }
  j["trajectory"] = std::move(trajectory);

  if (format.include_latent) j["final_latent"] = matrix_json(report.final_latent);
  if (format.include_timing) {
    j["wall_time"] = {{"model", report.wall_time.model},
                      {"clustering", report.wall_time.clustering},
                      {"propagation", report.wall_time.propagation},
                      {"analysis", report.wall_time.analysis},
                      {"total", report.wall_time.total}};
  }
  return j.dump(2) + "\n";
}

std::string to_trace_csv(const RunReport& report) {
  std::ostringstream out;
  out << "step,timestep,tag,metric,value\n";
  const auto row = [&out](std::size_t step, std::size_t t, std::string_view tag,
                          std::string_view metric, const std::string& value) {
    out << step << ',' << t << ',' << tag << ',' << metric << ',' << value << '\n';
  };
  for (const auto& s : report.steps) {
    const auto tag = to_string(s.tag);
    row(s.index, s.timestep, tag, "offset", std::to_string(s.offset));
    row(s.index, s.timestep, tag, "computed_tokens", std::to_string(s.computed_tokens));
    row(s.index, s.timestep, tag, "model_flops", std::to_string(s.flops.model));
    row(s.index, s.timestep, tag, "clustering_flops", std::to_string(s.flops.clustering));
    row(s.index, s.timestep, tag, "propagation_flops", std::to_string(s.flops.propagation));
    row(s.index, s.timestep, tag, "kmeans_iterations", std::to_string(s.kmeans_iterations));
    row(s.index, s.timestep, tag, "latent_norm", number(s.latent_norm));
    if (s.relative_error) row(s.index, s.timestep, tag, "relative_error", number(*s.relative_error));
  }
  const std::size_t steps = report.steps.size();
  const auto timestep_of = [steps](std::size_t index) { return steps - index; };
  for (const auto& c : report.clusterings) {
    row(c.step, timestep_of(c.step), "full", "intra_mean", number(c.stats.intra_mean));
    row(c.step, timestep_of(c.step), "full", "global_mean", number(c.stats.global_mean));
    row(c.step, timestep_of(c.step), "full", "distance_ratio", number(c.stats.ratio));
    row(c.step, timestep_of(c.step), "full", "inertia", number(c.inertia));
  }
  for (const auto& p : report.ari) {
    row(p.to_step, timestep_of(p.to_step), "-", "ari_offset_" + std::to_string(p.offset),
        number(p.value));
  }
  return out.str();
}

}  // namespace clusca
