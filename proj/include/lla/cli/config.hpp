#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lla/baselines.hpp"
#include "lla/lla_is.hpp"
#include "lla/lla_mcmc.hpp"
#include "lla/lla_ss.hpp"

namespace lla::cli {

// Raised for any problem with a config file; what() is "source:line: message".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline const std::vector<std::string>& estimator_names() {
  static const std::vector<std::string> names{"mc", "nested", "lla_is", "lla_ss", "lla_mcmc"};
  return names;
}

struct ExperimentConfig {
  std::string benchmark;
  std::optional<std::string> model;  // unset runs every model of the benchmark
  std::uint64_t data_seed = 1;
  // When true replication r uses data seed data_seed + r.
  bool vary_data = false;
  std::string estimator;
  std::uint64_t seed = 0;
  std::size_t replications = 1;
  unsigned workers = 1;
  std::string out_dir = "out";
  std::vector<std::uint64_t> budgets;

  std::size_t mc_samples = 20000;
  NestedConfig nested{};
  ISConfig is{};
  SSConfig ss{};
  MCMCConfig mcmc{};

  // Source line of each key ("seed", "lla_ss.n_replace") and section header
  // ("[lla_ss]"), for error messages raised after parsing.
  std::map<std::string, std::size_t> lines;
  std::size_t line_of(const std::string& key) const;
};

// Flat key = value text with [section] headers; '#' starts a comment.
ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

// Estimator settings checked against the benchmark's dimension; throws
// ConfigError naming the section that failed.
void validate_for_dimension(const ExperimentConfig& config, std::size_t dimension,
                            const std::string& source = "<config>");

}  // namespace lla::cli
