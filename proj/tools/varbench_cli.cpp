#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "varbench/error.h"
#include "varbench/harness.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitConfig = 2;

struct GlobalFlags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int replicates = 0;
  int jobs = 1;
  bool quiet = false;
};

int run(const std::string& command, const GlobalFlags& flags) {
  using varbench::ExperimentKind;
  varbench::ExperimentConfig cfg = varbench::load_config(flags.config);
  if (flags.seed_set) cfg.seed = flags.seed;
  if (flags.replicates > 0) cfg.replicates = flags.replicates;

  const auto expect = [&](ExperimentKind k) {
    if (cfg.kind != k) {
      throw varbench::ConfigError({"field 'kind': subcommand '" + command + "' needs kind '" +
                                   varbench::to_string(k) + "', config has '" + varbench::to_string(cfg.kind) +
                                   "'"});
    }
  };
  if (command == "bandit-run") expect(ExperimentKind::kBandit);
  if (command == "mdp-run") expect(ExperimentKind::kMdp);
  if (command == "epc-verify") expect(ExperimentKind::kEpc);
  if (command == "conc-verify") expect(ExperimentKind::kConc);
  if (command == "sweep" && !cfg.sweep) {
    throw varbench::ConfigError({"missing required field 'sweep' for subcommand 'sweep'"});
  }

  varbench::RunOptions opt;
  opt.jobs = flags.jobs;
  opt.out_dir = flags.out;
  if (!flags.quiet) opt.log = &std::cerr;
  const varbench::RunManifest m = varbench::run_experiment(cfg, opt);
  if (!flags.quiet) {
    std::cout << "config " << m.config_hash << "  wrote " << m.files.size() << " files to " << m.output_dir << "\n";
  }
  for (const auto& f : m.failures) std::cerr << "assertion failed: " << f << "\n";
  return m.assertions_passed ? kExitOk : kExitAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"varbench: variance-aware bandit and mixture-MDP experiment harness"};
  app.require_subcommand(1);
  GlobalFlags flags;
  app.add_option("--config", flags.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", flags.out, "Output directory (overrides config and VARBENCH_OUT_DIR)");
  auto* seed_opt = app.add_option("--seed", flags.seed, "Master seed override");
  app.add_option("--replicates", flags.replicates, "Replicate count override")->check(CLI::PositiveNumber);
  app.add_option("--jobs", flags.jobs, "Concurrent replicates")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", flags.quiet, "Suppress progress output");
  app.fallthrough();

  app.add_subcommand("bandit-run", "Run VOFUL2 and/or OFUL on a bandit config");
  app.add_subcommand("mdp-run", "Run VARLin2 on a mixture-MDP config");
  app.add_subcommand("epc-verify", "Check elliptical potential counts against the bound");
  app.add_subcommand("conc-verify", "Monte Carlo concentration checks and recursion grid");
  app.add_subcommand("sweep", "Run a bandit or mdp config over its sweep values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  flags.seed_set = seed_opt->count() > 0;
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    return run(command, flags);
  } catch (const varbench::ConfigError& e) {
    for (const auto& msg : e.errors()) std::cerr << "config error: " << msg << "\n";
    return kExitConfig;
  } catch (const varbench::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
