#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lla/core.hpp"
#include "lla/parallel.hpp"
#include "lla/priors.hpp"
#include "lla/schedule.hpp"

namespace lla {

// Diagonal Gaussian importance density truncated to the prior support.
class GaussianISD {
 public:
  GaussianISD(ParameterVector mean, std::vector<double> stddev, std::vector<Interval> support);

  const ParameterVector& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return stddev_; }
  const std::vector<Interval>& support() const { return support_; }

  double log_pdf(std::span<const double> theta) const;
  ParameterVector sample(Engine& rng) const;

 private:
  ParameterVector mean_;
  std::vector<double> stddev_;
  std::vector<Interval> support_;
  std::vector<TruncatedNormal> marginals_;
};

struct ISConfig {
  std::size_t n_initial = 1000;
  // gamma_S / N. Zero disables the ESS guard.
  double ess_threshold_fraction = 0.5;
  double stddev_multiplier = 2.0;
  // When set, replaces multiplier * sample stddev in every refit.
  std::optional<std::vector<double>> fixed_stddev;
  double stddev_floor_fraction = 1e-8;
  LevelPolicy level_policy{};
  StoppingPolicy stopping{};

  void validate(std::size_t dimension) const;
};

// Mean and multiplier * sample stddev of the retained samples. Zero spreads
// fall back to floor_fraction * support width (or floor_fraction when the
// support is unbounded).
GaussianISD fit_isd(const std::vector<ParameterVector>& retained, double multiplier,
                    const std::vector<Interval>& prior_support, double floor_fraction = 1e-8);

// (1/N) sum_j 1[L_j > lambda] w_j with w_j = exp(log_weights[j]).
double chi_is(std::span<const double> log_likelihoods, std::span<const double> log_weights,
              double log_lambda);

EvidenceEstimate run_lla_is(const BayesianProblem& problem, const ISConfig& config,
                            std::uint64_t seed, const Executor& executor = Executor{});

}  // namespace lla
