#include <iostream>

#include "CLI11.hpp"
#include "lla/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace lla::cli;
  CLI::App app{"Evidence estimation by likelihood-level adaptive sampling"};
  app.require_subcommand(1);

  std::string config_path;
  RunOverrides o;
  std::vector<std::uint64_t> budgets;
  std::vector<std::string> summaries;
  std::vector<double> priors;
  std::string select_out;

  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config file")->required();
    sub->add_option("--out-dir", o.out_dir, "Output directory (overrides out_dir)");
    sub->add_option("--seed-override", o.seed, "Replace the config seed");
    sub->add_option("--replications-override", o.replications, "Replace the replication count");
    sub->add_option("--workers", o.workers, "Worker threads");
  };

  auto* run = app.add_subcommand("run", "Run an experiment and write summaries and traces");
  add_run_flags(run);

  auto* conv = app.add_subcommand("convergence", "Error and COV against likelihood-evaluation budgets");
  add_run_flags(conv);
  conv->add_option("--budgets", budgets, "Evaluation budgets (overrides budgets)")->delimiter(',');

  auto* sel = app.add_subcommand("select", "Posterior model probabilities from run summaries");
  sel->add_option("summaries", summaries, "Run summary JSON files, one per model");
  sel->add_option("--priors", priors, "Prior model probabilities")->delimiter(',');
  sel->add_option("--out-dir", select_out, "Directory for selection.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(config_path, o, std::cout, std::cerr);
    if (*conv) return cmd_convergence(config_path, budgets, o, std::cout, std::cerr);
    return cmd_select(summaries, priors, select_out.empty() ? std::nullopt : std::optional(select_out),
                      std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "lla: " << e.what() << "\n";
    return kExitRuntime;
  }
}
