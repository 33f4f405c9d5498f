// Command-line front end.
//
//   secmec solve  <config> [flags]   joint solve at every sweep point
//   secmec sweep  <config> [flags]   the scenario named in the config
//   secmec oracle <config> --grid N  grid oracle next to the joint solve
//
// Exit codes: 0 success, 1 some row carries a solver-failure termination,
// 2 configuration or usage error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "secmec/errors.hpp"
#include "secmec/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool strict_paper_T = false;
  bool cccp_faithful = false;
  bool paper_linearization = false;
  bool log2_rates = false;
  int grid = 200;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("config", f.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "override the config seed");
  cmd->add_option("--out", f.out, "CSV destination (default: config output, else stdout)");
  cmd->add_flag("--strict-paper-T", f.strict_paper_T, "lambda residual rows use lambda*E - 1");
  cmd->add_flag("--cccp-faithful", f.cccp_faithful, "keep the legitimate entropy term concave (default)");
  cmd->add_flag("--paper-linearization", f.paper_linearization, "linearize both entropy terms");
  cmd->add_flag("--log2-rates", f.log2_rates, "rates in log2 units");
}

int emit(const std::vector<secmec::ResultRow>& rows, const std::string& path) {
  if (path.empty()) {
    std::cout << secmec::format_csv(rows);
    std::cout.flush();
  } else {
    secmec::write_csv(rows, path);
  }
  for (const secmec::ResultRow& r : rows) {
    if (secmec::is_error_termination(r.termination)) return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure computation-efficiency optimizer for edge offloading"};
  app.require_subcommand(1);
  Flags flags;
  CLI::App* solve = app.add_subcommand("solve", "joint solve at every sweep point");
  CLI::App* sweep = app.add_subcommand("sweep", "run the config's scenario");
  CLI::App* oracle = app.add_subcommand("oracle", "compare against the exhaustive grid oracle");
  for (CLI::App* cmd : {solve, sweep, oracle}) add_common(cmd, flags);
  oracle->add_option("--grid", flags.grid, "grid points per axis")->check(CLI::Range(2, 2000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (flags.cccp_faithful && flags.paper_linearization) {
    std::cerr << "error: --cccp-faithful and --paper-linearization are mutually exclusive\n";
    return 2;
  }

  try {
    secmec::ExperimentConfig cfg = secmec::load_config(flags.config);
    if (flags.seed) cfg.seed = flags.seed;
    if (flags.strict_paper_T) cfg.options.strict_paper_T = true;
    if (flags.cccp_faithful) cfg.options.cccp_faithful = true;
    if (flags.paper_linearization) cfg.options.cccp_faithful = false;
    if (flags.log2_rates) cfg.options.log2_rates = true;
    if (!flags.out.empty()) cfg.output = flags.out;
    cfg.validate();

    std::vector<secmec::ResultRow> rows;
    if (oracle->parsed()) {
      rows = secmec::run_oracle_comparison(cfg, {flags.grid, flags.grid, flags.grid});
    } else {
      if (solve->parsed()) cfg.scenario = secmec::Scenario::SingleRun;
      rows = secmec::run_experiment(cfg);
    }
    return emit(rows, cfg.output);
  } catch (const secmec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
