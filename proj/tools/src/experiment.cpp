#include "clusca_cli/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "clusca/error.hpp"
#include "json.hpp"

namespace clusca::cli {
namespace {

using nlohmann::json;

// Reads fields of one JSON object, rejecting any key it was not asked about.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_, "expected an object");
  }

  template <typename T>
  void read(const char* key, T& target) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    try {
      target = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key), "has the wrong type (got " + std::string(it->type_name()) + ")");
    }
  }

  void read_size(const char* key, std::size_t& target) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    if (!it->is_number_unsigned()) throw ConfigError(field(key), "must be a non-negative integer");
    target = it->get<std::size_t>();
  }

  template <typename Parse>
  void read_enum(const char* key, Parse parse) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    if (!it->is_string()) throw ConfigError(field(key), "must be a string");
    try {
      parse(it->get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return std::nullopt;
    return Section(*it, field(key));
  }

  // Call after all reads.
  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.contains(key)) throw ConfigError(field(key.c_str()), "unknown field");
    }
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view text, const std::string& field) {
  const std::string s = trim(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ConfigError(field, "'" + s + "' is not a number");
  }
  return v;
}

std::size_t as_count(double v, const std::string& field) {
  if (v < 0.0 || std::floor(v) != v) throw ConfigError(field, "must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

bool parse_bool(std::string_view text, const std::string& field) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(field, "expected true or false");
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(trim(text.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

int report_error(std::ostream& err, const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (dynamic_cast<const NumericalError*>(&e)) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  }
  err << "error: " << e.what() << '\n';
  return kExitFailure;
}

std::filesystem::path prepare_output(const ExperimentConfig& cfg) {
  const auto root = output_root(cfg);
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec || !std::filesystem::is_directory(root)) {
    throw ConfigError("output_dir", "cannot create '" + root.string() + "'");
  }
  const auto probe = root / (".clusca-probe-" + cfg.run_id);
  {
    std::ofstream f(probe);
    if (!f) throw ConfigError("output_dir", "'" + root.string() + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
  return root;
}

struct MemberResult {
  std::string label;
  CacheConfig cache;
  RunReport report;
};

// Runs `configs` against a shared oracle, at most `jobs` at a time. Results
// keep input order and do not depend on `jobs`.
std::vector<MemberResult> run_members(const ExperimentConfig& base, const Model& model,
                                      const RunReport& oracle,
                                      const std::vector<std::pair<std::string, CacheConfig>>& configs,
                                      std::size_t jobs) {
  const NoiseSchedule schedule = build_schedule(base);
  const SampleOptions options = build_sample_options(base);
  const auto run_one = [&](const CacheConfig& cache) {
    RunReport r = sample(model, cache, schedule, options);
    compare_to_oracle(r, oracle);
    return r;
  };

  std::vector<MemberResult> out;
  out.reserve(configs.size());
  jobs = std::max<std::size_t>(jobs, 1);
  for (std::size_t begin = 0; begin < configs.size(); begin += jobs) {
    const std::size_t end = std::min(configs.size(), begin + jobs);
    if (jobs == 1) {
      out.push_back({configs[begin].first, configs[begin].second, run_one(configs[begin].second)});
      continue;
    }
    std::vector<std::future<RunReport>> pending;
    for (std::size_t i = begin; i < end; ++i) {
      pending.push_back(std::async(std::launch::async, run_one, configs[i].second));
    }
    for (std::size_t i = begin; i < end; ++i) {
      out.push_back({configs[i].first, configs[i].second, pending[i - begin].get()});
    }
  }
  return out;
}

RunReport run_oracle(const ExperimentConfig& cfg, const Model& model) {
  CacheConfig full = cfg.cache;
  full.policy = PolicyKind::full;
  return sample(model, full, build_schedule(cfg), build_sample_options(cfg));
}

void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  const auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      out << (c == 0 ? "" : "  ") << std::setw(static_cast<int>(width[c]))
          << (c == 0 ? std::left : std::right) << r[c];
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (run_id.empty() || run_id.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("run_id", "must be a non-empty file-name-safe string");
  }
  model.validate();
  if (class_label >= model.num_classes) {
    throw ConfigError("model.class_label", "must be < num_classes");
  }
  if (schedule.steps < 1) throw ConfigError("schedule.steps", "must be >= 1");
  (void)make_schedule(schedule.steps, schedule.alpha_start, schedule.alpha_end, schedule.shape);
  cache.validate(model);
  if (record.stride < 1) throw ConfigError("record.stride", "must be >= 1");
  const auto depth = static_cast<int>(model.depth);
  if (record.layer >= depth || record.layer < -depth) {
    throw ConfigError("record.layer", "out of range for depth " + std::to_string(depth));
  }
  if (record.analysis_clusters &&
      (record.analysis_clusters_k < 1 || record.analysis_clusters_k > model.tokens())) {
    throw ConfigError("record.analysis_clusters_k", "must lie in [1, T]");
  }
  if (!(divergence_factor > 1.0)) throw ConfigError("report.divergence_factor", "must be > 1");
}

ExperimentConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("parse error: ") + e.what());
  }

  ExperimentConfig cfg;
  Section top(root, "");
  top.read("run_id", cfg.run_id);
  std::string out_dir = cfg.output_dir.string();
  top.read("output_dir", out_dir);
  cfg.output_dir = out_dir;

  if (auto s = top.child("model")) {
    s->read_size("depth", cfg.model.depth);
    s->read_size("grid_h", cfg.model.grid_h);
    s->read_size("grid_w", cfg.model.grid_w);
    s->read_size("dim", cfg.model.dim);
    s->read_size("heads", cfg.model.heads);
    s->read_size("num_classes", cfg.model.num_classes);
    s->read_size("class_label", cfg.class_label);
    s->finish();
  }
  if (auto s = top.child("schedule")) {
    s->read_size("steps", cfg.schedule.steps);
    s->read("alpha_start", cfg.schedule.alpha_start);
    s->read("alpha_end", cfg.schedule.alpha_end);
    s->read_enum("shape", [&](const std::string& v) {
      cfg.schedule.shape = schedule_shape_from_string(v);
    });
    s->read_enum("update_rule", [&](const std::string& v) {
      cfg.schedule.update_rule = update_rule_from_string(v);
    });
    s->finish();
  }
  if (auto s = top.child("cache")) {
    s->read_enum("policy", [&](const std::string& v) { cfg.cache.policy = policy_from_string(v); });
    s->read_size("interval", cfg.cache.interval);
    s->read_size("clusters", cfg.cache.clusters);
    s->read("gamma", cfg.cache.gamma);
    s->read_size("order", cfg.cache.order);
    s->read("rearrange_last", cfg.cache.rearrange_last);
    s->read("cluster_layer", cfg.cache.cluster_layer);
    s->read_enum("cluster_module", [&](const std::string& v) {
      cfg.cache.cluster_module = module_from_string(v);
    });
    s->read_size("kmeans_max_iters", cfg.cache.kmeans_max_iters);
    s->read("kmeans_tol", cfg.cache.kmeans_tol);
    s->read("skip_representatives", cfg.cache.skip_representatives);
    s->finish();
  }
  if (auto s = top.child("seeds")) {
    s->read("weights", cfg.seeds.weights);
    s->read("noise", cfg.seeds.noise);
    s->read("clustering", cfg.seeds.clustering);
    s->read("selection", cfg.seeds.selection);
    s->finish();
  }
  if (auto s = top.child("record")) {
    s->read("features", cfg.record.features);
    s->read("layer", cfg.record.layer);
    s->read_enum("module", [&](const std::string& v) { cfg.record.module = module_from_string(v); });
    s->read_size("stride", cfg.record.stride);
    s->read("latents", cfg.record.latents);
    s->read("analysis_clusters", cfg.record.analysis_clusters);
    s->read_size("analysis_clusters_k", cfg.record.analysis_clusters_k);
    s->read("ari_offsets", cfg.record.ari_offsets);
    s->finish();
  }
  if (auto s = top.child("report")) {
    s->read("compare_oracle", cfg.compare_oracle);
    s->read("include_timing", cfg.include_timing);
    s->read("divergence_factor", cfg.divergence_factor);
    s->finish();
  }
  top.finish();

  cfg.model.weight_seed = cfg.seeds.weights;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot open '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

NoiseSchedule build_schedule(const ExperimentConfig& cfg) {
  return make_schedule(cfg.schedule.steps, cfg.schedule.alpha_start, cfg.schedule.alpha_end,
                       cfg.schedule.shape);
}

SampleOptions build_sample_options(const ExperimentConfig& cfg) {
  SampleOptions o;
  o.run_id = cfg.run_id;
  o.class_label = cfg.class_label;
  o.noise_seed = cfg.seeds.noise;
  o.clustering_seed = cfg.seeds.clustering;
  o.selection_seed = cfg.seeds.selection;
  o.update_rule = cfg.schedule.update_rule;
  o.divergence_factor = cfg.divergence_factor;
  o.record = cfg.record;
  return o;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Model& model) {
  ExperimentConfig effective = cfg;
  if (cfg.compare_oracle) effective.record.latents = true;
  const NoiseSchedule schedule = build_schedule(effective);
  const SampleOptions options = build_sample_options(effective);

  ExperimentResult result{sample(model, cfg.cache, schedule, options), std::nullopt};
  if (cfg.compare_oracle) {
    if (cfg.cache.policy == PolicyKind::full) {
      compare_to_oracle(result.report, result.report);
    } else {
      CacheConfig full = cfg.cache;
      full.policy = PolicyKind::full;
      RunReport oracle = sample(model, full, schedule, options);
      compare_to_oracle(result.report, oracle);
      result.oracle = std::move(oracle);
    }
    if (!cfg.record.latents) result.report.latents.clear();
  }
  return result;
}

CacheConfig apply_policy_spec(CacheConfig base, std::string_view spec) {
  const auto parts = split(spec, ':');
  base.policy = policy_from_string(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) {
      throw ConfigError("policies", "expected key=value in '" + parts[i] + "'");
    }
    const std::string key = trim(std::string_view(parts[i]).substr(0, eq));
    const std::string value = trim(std::string_view(parts[i]).substr(eq + 1));
    const std::string field = "policies." + key;
    if (key == "interval") {
      base.interval = as_count(parse_double(value, field), field);
    } else if (key == "clusters") {
      base.clusters = as_count(parse_double(value, field), field);
    } else if (key == "gamma") {
      base.gamma = parse_double(value, field);
    } else if (key == "order") {
      base.order = as_count(parse_double(value, field), field);
    } else if (key == "rearrange_last") {
      base.rearrange_last = parse_bool(value, field);
    } else if (key == "skip_representatives") {
      base.skip_representatives = parse_bool(value, field);
    } else {
      throw ConfigError(field, "unknown policy parameter");
    }
  }
  return base;
}

void apply_axis(CacheConfig& cache, std::string_view axis, double value) {
  if (axis == "gamma") {
    cache.gamma = value;
  } else if (axis == "N") {
    cache.interval = as_count(value, "sweep.N");
  } else if (axis == "K") {
    cache.clusters = as_count(value, "sweep.K");
  } else if (axis == "O") {
    cache.order = as_count(value, "sweep.O");
  } else {
    throw ConfigError("axis", "unknown sweep axis '" + std::string(axis) +
                                  "' (expected gamma, N, K or O)");
  }
}

std::filesystem::path output_root(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') return env;
  return cfg.output_dir;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + tmp.string() + "'");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw Error("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

int cmd_run(const std::filesystem::path& config, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig cfg = load_config(config);
    const auto root = prepare_output(cfg);
    const Model model(cfg.model);
    const ExperimentResult result = run_experiment(cfg, model);
    const RunReport& r = result.report;

    write_atomic(root / (cfg.run_id + ".report.json"),
                 to_json(r, ReportFormat{cfg.include_timing, true}));
    write_atomic(root / (cfg.run_id + ".trace.csv"), to_trace_csv(r));

    out << "policy            " << to_string(cfg.cache.policy) << '\n'
        << "total flops       " << r.flops.total() << '\n'
        << "speedup           " << format_number(r.flops.speedup()) << '\n'
        << "clustering share  " << format_number(r.flops.clustering_share()) << '\n';
    if (r.relative_error) out << "relative error    " << format_number(*r.relative_error) << '\n';
    const double wall = r.wall_time.total;
    if (wall > 0.0) {
      out << "wall time (s)     " << wall << "  clustering " << r.wall_time.clustering / wall * 100.0
          << "%  propagation " << r.wall_time.propagation / wall * 100.0 << "%\n";
    }
    out << "wrote " << (root / (cfg.run_id + ".report.json")).string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(err, e);
  }
}

int cmd_compare(const std::filesystem::path& config, const std::vector<std::string>& policies,
                std::size_t jobs, std::ostream& out, std::ostream& err) {
  try {
    if (policies.size() < 2) throw ConfigError("policies", "compare needs at least two policies");
    const ExperimentConfig cfg = load_config(config);
    std::vector<std::pair<std::string, CacheConfig>> configs;
    for (const auto& p : policies) {
      CacheConfig c = apply_policy_spec(cfg.cache, p);
      c.validate(cfg.model);
      configs.emplace_back(p, c);
    }
    const auto root = prepare_output(cfg);
    const Model model(cfg.model);
    ExperimentConfig base = cfg;
    base.record = TrajectorySpec{};
    base.record.latents = false;
    const RunReport oracle = run_oracle(base, model);
    const auto results = run_members(base, model, oracle, configs, jobs);

    std::ostringstream csv;
    csv << "policy,interval,clusters,gamma,order,model_flops,clustering_flops,propagation_flops,"
           "total_flops,speedup,relative_error\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : results) {
      const auto& f = m.report.flops;
      const std::string err_text = format_number(m.report.relative_error.value_or(0.0));
      csv << m.label << ',' << m.cache.interval << ',' << m.cache.clusters << ','
          << format_number(m.cache.gamma) << ',' << m.cache.order << ',' << f.model << ','
          << f.clustering << ',' << f.propagation << ',' << f.total() << ','
          << format_number(f.speedup()) << ',' << err_text << '\n';
      std::ostringstream speed;
      speed << std::fixed << std::setprecision(3) << f.speedup();
      std::ostringstream rel;
      rel << std::scientific << std::setprecision(4) << m.report.relative_error.value_or(0.0);
      rows.push_back({m.label, std::to_string(f.total()), speed.str(), rel.str()});
    }
    const auto path = root / (cfg.run_id + "-compare.report.csv");
    write_atomic(path, csv.str());
    print_table(out, {"policy", "flops", "speedup", "rel_error"}, rows);
    out << "wrote " << path.string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(err, e);
  }
}

int cmd_sweep(const std::filesystem::path& config, std::string_view axis,
              const std::vector<std::string>& values, std::size_t jobs, std::ostream& out,
              std::ostream& err) {
  try {
    if (values.empty()) throw ConfigError("values", "sweep needs at least one value");
    const ExperimentConfig cfg = load_config(config);
    std::vector<std::pair<std::string, CacheConfig>> configs;
    for (const auto& v : values) {
      CacheConfig c = cfg.cache;
      apply_axis(c, axis, parse_double(v, "values"));
      c.validate(cfg.model);
      configs.emplace_back(trim(v), c);
    }
    const auto root = prepare_output(cfg);
    const Model model(cfg.model);
    ExperimentConfig base = cfg;
    base.record = TrajectorySpec{};
    const RunReport oracle = run_oracle(base, model);
    const auto results = run_members(base, model, oracle, configs, jobs);

    std::ostringstream csv;
    csv << "axis,value,total_flops,speedup,relative_error\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : results) {
      const auto& f = m.report.flops;
      const std::string rel = format_number(m.report.relative_error.value_or(0.0));
      csv << axis << ',' << m.label << ',' << f.total() << ',' << format_number(f.speedup()) << ','
          << rel << '\n';
      rows.push_back({m.label, std::to_string(f.total()), format_number(f.speedup()), rel});
    }
    const auto path = root / (cfg.run_id + "-sweep-" + std::string(axis) + ".report.csv");
    write_atomic(path, csv.str());
    print_table(out, {std::string(axis), "flops", "speedup", "rel_error"}, rows);
    out << "wrote " << path.string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(err, e);
  }
}

}  // namespace clusca::cli
