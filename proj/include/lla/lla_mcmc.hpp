#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "lla/core.hpp"
#include "lla/parallel.hpp"
#include "lla/schedule.hpp"

namespace lla {

struct KernelConfig {
  // Per-dimension Gaussian step sizes; empty means 0.25 x prior stddev.
  std::vector<double> proposal_stddev;
  // Component-wise (modified) Metropolis-Hastings; unset means d > 10.
  std::optional<bool> component_wise;
  std::size_t steps_per_sample = 5;

  void validate(std::size_t dimension) const;
  // Copy with defaults filled in for this problem.
  KernelConfig resolved(const BayesianProblem& problem) const;
};

struct StepResult {
  ParameterVector state;
  double log_l = kNegInf;
  bool accepted = false;
  std::uint64_t evals = 0;
};

// One move of a chain targeting p(theta | L(theta) > lambda). The candidate
// is first accepted or rejected on the prior ratio alone; only a candidate
// that differs from the current state costs a likelihood evaluation. The
// kernel must be resolved.
StepResult constrained_mh_step(const ParameterVector& state, double log_l, double log_lambda,
                               const KernelConfig& kernel, const BayesianProblem& problem,
                               Engine& rng);

struct Replenished {
  std::vector<ParameterVector> theta;
  std::vector<double> log_l;
  std::uint64_t evals = 0;
};

// n_needed chains, each started at a uniformly chosen passing sample and
// advanced steps_per_sample constrained steps. Chain c draws from the stream
// (seed, stream_tag, iteration, c).
Replenished replenish(const std::vector<ParameterVector>& passing,
                      const std::vector<double>& passing_log_l, std::size_t n_needed,
                      double log_lambda, const KernelConfig& kernel,
                      const BayesianProblem& problem, std::uint64_t seed,
                      std::uint64_t stream_tag, std::uint64_t iteration,
                      const Executor& executor = Executor{});

double chi_mcmc(double chi_prev, std::size_t n_pass, std::size_t n_total);

struct MCMCConfig {
  std::size_t n_samples = 1000;
  std::size_t n_replace = 25;
  // When true the rejection count follows level_policy's fraction schedule
  // instead of n_replace.
  bool use_fraction_schedule = false;
  KernelConfig kernel{};
  LevelPolicy level_policy{};
  StoppingPolicy stopping{1e-4, 0.005, 1000, 20000};

  void validate(std::size_t dimension) const;
};

EvidenceEstimate run_lla_mcmc(const BayesianProblem& problem, const MCMCConfig& config,
                              std::uint64_t seed, const Executor& executor = Executor{});

}  // namespace lla
