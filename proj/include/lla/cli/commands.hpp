#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lla/cli/config.hpp"
#include "lla/cli/records.hpp"

namespace lla::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct RunOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::optional<unsigned> workers;
};

void apply_overrides(ExperimentConfig& config, const RunOverrides& o);

// Seed of replication r, derived from the config seed.
std::uint64_t replication_seed(std::uint64_t seed, std::size_t replication);

struct ExperimentRun {
  // Ordered by model, then replication.
  std::vector<RunRecord> records;
  std::vector<LevelTrace> traces;
  std::vector<double> wall_seconds;
};

// Runs every (model, replication) pair of the config. A nonzero budget
// replaces the draw count for mc and max_evals for the other estimators.
// Throws ConfigError for settings that do not fit the benchmark.
ExperimentRun run_experiment(const ExperimentConfig& config, std::uint64_t budget = 0,
                             const std::string& source = "<config>");

int cmd_run(const std::string& config_path, const RunOverrides& o, std::ostream& out, std::ostream& err);

int cmd_select(const std::vector<std::string>& summary_paths, const std::vector<double>& priors,
               const std::optional<std::string>& out_dir, std::ostream& out, std::ostream& err);

int cmd_convergence(const std::string& config_path, const std::vector<std::uint64_t>& budgets,
                    const RunOverrides& o, std::ostream& out, std::ostream& err);

}  // namespace lla::cli
