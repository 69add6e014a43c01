#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "clusca_cli/experiment.hpp"

int main(int argc, char** argv) {
  using namespace clusca::cli;

  CLI::App app{"Cluster-driven feature caching on a toy diffusion transformer"};
  app.require_subcommand(1);

  std::string config;
  std::string policies;
  std::string axis;
  std::string values;
  std::size_t jobs = 1;

  auto* run = app.add_subcommand("run", "sample once and write a report");
  run->add_option("--config", config, "experiment config (JSON)")->required();

  auto* compare = app.add_subcommand("compare", "run several policies against one oracle");
  compare->add_option("--config", config, "experiment config (JSON)")->required();
  compare->add_option("--policies", policies, "comma list, e.g. fora,clusca:gamma=0")->required();
  compare->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "vary one cache parameter");
  sweep->add_option("--config", config, "experiment config (JSON)")->required();
  sweep->add_option("--axis", axis, "gamma, N, K or O")
      ->required()
      ->check(CLI::IsMember({"gamma", "N", "K", "O"}));
  sweep->add_option("--values", values, "comma list of values")->required();
  sweep->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      const auto pos = s.find(',', start);
      out.push_back(s.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return out;
  };

  if (run->parsed()) return cmd_run(config, std::cout, std::cerr);
  if (compare->parsed()) return cmd_compare(config, split(policies), jobs, std::cout, std::cerr);
  return cmd_sweep(config, axis, split(values), jobs, std::cout, std::cerr);
}
