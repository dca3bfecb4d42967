#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lla/core.hpp"
#include "lla/parallel.hpp"
#include "lla/schedule.hpp"

namespace lla {

// Tensor grid of equal-mass strata built from the inverse marginal CDFs.
// Stratum s has 0-based substratum index s_k in dimension k, covering
// F_k^{-1}((s_k, s_k + 1] / n_k).
struct StrataGrid {
  std::vector<std::size_t> per_dim_counts;
  std::size_t n_strata = 0;
  std::vector<std::vector<ParameterVector>> pool_theta;
  std::vector<std::vector<double>> pool_log_l;
  std::vector<double> pool_max;
  std::vector<std::size_t> active;  // ascending stratum indices

  double mass(std::size_t /*stratum*/) const { return 1.0 / static_cast<double>(n_strata); }
  std::vector<std::size_t> multi_index(std::size_t stratum) const;
  // Probability-scale bounds (lower, upper] of the stratum in dimension k.
  std::pair<double, double> unit_bounds(std::size_t stratum, std::size_t k) const;
};

struct SSConfig {
  std::vector<std::size_t> per_dim_counts;
  std::size_t n_per_iteration = 500;
  LevelPolicy level_policy{0.0, 0.025, 0.9};
  StoppingPolicy stopping{};
  std::size_t max_strata = 1'000'000;

  void validate(std::size_t dimension) const;
};

StrataGrid build_strata(const BayesianProblem& problem, const std::vector<std::size_t>& per_dim_counts,
                        std::size_t max_strata = 1'000'000);

// n prior draws restricted to one stratum by inverse-CDF sampling.
std::vector<ParameterVector> sample_stratum(const BayesianProblem& problem, const StrataGrid& grid,
                                            std::size_t stratum, std::size_t n, Engine& rng);

// Sum over active strata of p_s times the pooled exceedance fraction.
double chi_ss(const StrataGrid& grid, double log_lambda);

// Plug-in variance chi(1 - chi)/N - (1/N) sum_s p_s (chi_s - chi)^2, where N
// is the pooled count over active strata and inactive strata count with
// chi_s = 0. Clamped at zero.
double var_chi_ss(const StrataGrid& grid, double log_lambda, double chi_hat);

// Per-stratum sample counts for one iteration: ceil(N / |I|) in index order,
// the shortfall taken from the last strata, at least one each.
std::vector<std::size_t> allocate_samples(std::size_t n_total, std::size_t n_active);

EvidenceEstimate run_lla_ss(const BayesianProblem& problem, const SSConfig& config,
                            std::uint64_t seed, const Executor& executor = Executor{});

// Same run, also returning the final grid (pools and active set) for inspection.
EvidenceEstimate run_lla_ss(const BayesianProblem& problem, const SSConfig& config,
                            std::uint64_t seed, const Executor& executor, StrataGrid& grid_out);

}  // namespace lla
