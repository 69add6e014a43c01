#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "clusca/error.hpp"
#include "clusca_cli/experiment.hpp"
#include "doctest.h"

using namespace clusca;
using namespace clusca::cli;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path root;
  explicit Workspace(const std::string& name)
      : root(fs::temp_directory_path() / ("clusca-test-" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }

  fs::path config(const std::string& body, const std::string& file = "c.json") const {
    std::ofstream(root / file) << body;
    return root / file;
  }
  std::string read(const std::string& file) const {
    std::ifstream in(root / "out" / file);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
};

// Small model so each run takes milliseconds.
std::string small_config(const std::string& out, const std::string& cache = "{}") {
  return R"({"run_id": "t", "output_dir": ")" + out +
         R"(", "model": {"depth": 2, "grid_h": 4, "grid_w": 4, "dim": 8, "heads": 2},
  "schedule": {"steps": 10}, "cache": )" + cache + "}";
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config("{}");
  CHECK(cfg.cache.interval == 5);
  CHECK(cfg.cache.clusters == 16);
  CHECK(cfg.cache.order == 2);
  CHECK(cfg.cache.gamma == 0.005);
  CHECK(cfg.model.tokens() == 256);

  const auto custom = parse_config(R"({"cache": {"policy": "fora", "interval": 3},
                                       "seeds": {"weights": 9}, "record": {"module": "mlp"}})");
  CHECK(custom.cache.policy == PolicyKind::fora);
  CHECK(custom.cache.interval == 3);
  CHECK(custom.model.weight_seed == 9);
  CHECK(custom.record.module == Module::mlp);

  const auto field_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<accepted>");
  };
  CHECK(field_of(R"({"cache": {"clusters": 300}})") == "cache.clusters");
  CHECK(field_of(R"({"cache": {"gamma": 2}})") == "cache.gamma");
  CHECK(field_of(R"({"cache": {"bogus": 1}})") == "cache.bogus");
  CHECK(field_of(R"({"model": {"dim": "wide"}})") == "model.dim");
  CHECK(field_of(R"({"cache": {"policy": "magic"}})") == "cache.policy");
  CHECK(field_of(R"({"schedule": {"alpha_end": 0}})") == "schedule.alpha_end");

  try {
    parse_config("{\n  \"cache\": {\n    \"interval\": ,\n  }\n}");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("policy specs and sweep axes") {
  CacheConfig base;
  const auto c = apply_policy_spec(base, "clusca:interval=1:gamma=0:order=1");
  CHECK(c.policy == PolicyKind::clusca);
  CHECK(c.interval == 1);
  CHECK(c.gamma == 0.0);
  CHECK(c.order == 1);
  CHECK(apply_policy_spec(base, "fora").policy == PolicyKind::fora);
  CHECK_THROWS_AS(apply_policy_spec(base, "fora:speed=9"), ConfigError);
  CHECK_THROWS_AS(apply_policy_spec(base, "clusca:interval=1.5"), ConfigError);

  apply_axis(base, "K", 8);
  CHECK(base.clusters == 8);
  apply_axis(base, "gamma", 0.25);
  CHECK(base.gamma == 0.25);
  CHECK_THROWS_AS(apply_axis(base, "Q", 1), ConfigError);
}

TEST_CASE("run writes deterministic reports") {
  Workspace ws("run");
  const auto path = ws.config(small_config((ws.root / "out").string()));
  std::ostringstream out, err;
  REQUIRE(cmd_run(path, out, err) == kExitOk);
  const auto first = ws.read("t.report.json");
  const auto trace = ws.read("t.trace.csv");
  REQUIRE(cmd_run(path, out, err) == kExitOk);
  CHECK(ws.read("t.report.json") == first);
  CHECK(ws.read("t.trace.csv") == trace);
  CHECK(first.find("\"relative_error\"") != std::string::npos);
  CHECK_FALSE(fs::exists(ws.root / "out" / "t.report.json.tmp"));
}

TEST_CASE("run with the full policy reports speedup 1") {
  Workspace ws("full");
  const auto path = ws.config(small_config((ws.root / "out").string(), R"({"policy": "full"})"));
  std::ostringstream out, err;
  REQUIRE(cmd_run(path, out, err) == kExitOk);
  CHECK(ws.read("t.report.json").find("\"speedup\": 1.0,") != std::string::npos);
}

TEST_CASE("run exit codes") {
  Workspace ws("codes");
  std::ostringstream out, err;
  CHECK(cmd_run(ws.config(small_config((ws.root / "out").string(), R"({"clusters": 17})")), out,
                err) == kExitConfig);
  CHECK(err.str().find("cache.clusters") != std::string::npos);
  CHECK(cmd_run(ws.root / "missing.json", out, err) == kExitConfig);
  CHECK(cmd_run(ws.config("{ not json"), out, err) == kExitConfig);

  const auto diverging = R"({"output_dir": ")" + (ws.root / "out").string() +
                         R"(", "model": {"depth": 1, "grid_h": 2, "grid_w": 2, "dim": 4, "heads": 1},
      "schedule": {"steps": 10, "alpha_start": 0.6, "alpha_end": 0.3},
      "cache": {"policy": "full", "clusters": 2},
      "report": {"divergence_factor": 1.0001}})";
  CHECK(cmd_run(ws.config(diverging), out, err) == kExitNumerical);
}

TEST_CASE("output root can be overridden from the environment") {
  Workspace ws("env");
  const auto path = ws.config(small_config((ws.root / "ignored").string()));
  const auto target = ws.root / "out";
  ::setenv(kOutputRootEnv, target.string().c_str(), 1);
  std::ostringstream out, err;
  const int code = cmd_run(path, out, err);
  ::unsetenv(kOutputRootEnv);
  CHECK(code == kExitOk);
  CHECK(fs::exists(target / "t.report.json"));
  CHECK_FALSE(fs::exists(ws.root / "ignored" / "t.report.json"));
}

TEST_CASE("compare reductions") {
  Workspace ws("compare");
  const auto path = ws.config(small_config((ws.root / "out").string()));
  std::ostringstream out, err;
  REQUIRE(cmd_compare(path, {"full", "full", "clusca:interval=1", "fora", "taylorseer:order=0"}, 1,
                      out, err) == kExitOk);
  const auto rows = parse_csv(ws.read("t-compare.report.csv"));
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == std::vector<std::string>{"policy", "interval", "clusters", "gamma", "order",
                                            "model_flops", "clustering_flops", "propagation_flops",
                                            "total_flops", "speedup", "relative_error"});
  CHECK(rows[1][10] == "0");
  CHECK(rows[1][9] == "1");
  CHECK(rows[2][10] == "0");
  CHECK(rows[3][10] == "0");
  CHECK(rows[4][10] == rows[5][10]);
  CHECK(rows[4][8] == rows[5][8]);
  CHECK(out.str().find("taylorseer:order=0") != std::string::npos);

  const auto sequential = ws.read("t-compare.report.csv");
  REQUIRE(cmd_compare(path, {"full", "full", "clusca:interval=1", "fora", "taylorseer:order=0"}, 3,
                      out, err) == kExitOk);
  CHECK(ws.read("t-compare.report.csv") == sequential);

  CHECK(cmd_compare(path, {"fora"}, 1, out, err) == kExitConfig);
  CHECK(cmd_compare(path, {"fora", "clusca:clusters=99"}, 1, out, err) == kExitConfig);
}

TEST_CASE("sweep reductions") {
  Workspace ws("sweep");
  const auto path = ws.config(small_config((ws.root / "out").string(), R"({"interval": 3, "clusters": 4})"));
  std::ostringstream out, err;

  REQUIRE(cmd_sweep(path, "N", {"1", "3"}, 1, out, err) == kExitOk);
  auto rows = parse_csv(ws.read("t-sweep-N.report.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"axis", "value", "total_flops", "speedup", "relative_error"});
  CHECK(rows[1][4] == "0");

  REQUIRE(cmd_sweep(path, "K", {"2", "16"}, 2, out, err) == kExitOk);
  rows = parse_csv(ws.read("t-sweep-K.report.csv"));
  CHECK(std::stod(rows[2][4]) <= 1e-9);

  REQUIRE(cmd_sweep(path, "gamma", {"0"}, 1, out, err) == kExitOk);
  rows = parse_csv(ws.read("t-sweep-gamma.report.csv"));
  REQUIRE(rows.size() == 2);
  const auto gamma0 = ws.config(small_config((ws.root / "out").string(),
                                             R"({"interval": 3, "clusters": 4, "gamma": 0})"), "g.json");
  REQUIRE(cmd_run(gamma0, out, err) == kExitOk);
  const auto report = ws.read("t.report.json");
  CHECK(report.find("\"relative_error\": " + rows[1][4] + ",") != std::string::npos);
  CHECK(report.find("\"total\": " + rows[1][2] + ",") != std::string::npos);

  CHECK(cmd_sweep(path, "N", {"x"}, 1, out, err) == kExitConfig);
  CHECK(cmd_sweep(path, "K", {"17"}, 1, out, err) == kExitConfig);
}
