#pragma once

#include <cstddef>
#include <cstdint>

#include "lla/core.hpp"
#include "lla/lla_mcmc.hpp"
#include "lla/parallel.hpp"
#include "lla/schedule.hpp"

namespace lla {

// log E = logsumexp(log L_j) - log n over prior draws. The trace lists the
// distinct likelihood values in increasing order so that its increments sum
// to the same estimate. log_evidence_stderr is the delta-method standard
// error of log E, i.e. the relative standard error of the linear mean.
EvidenceEstimate run_mc(const BayesianProblem& problem, std::size_t n, std::uint64_t seed,
                        const Executor& executor = Executor{});

struct NestedConfig {
  std::size_t n_live = 500;
  StoppingPolicy stopping{1e-4, 1e-12, 1'000'000, 10'000'000};
  KernelConfig kernel{{}, std::nullopt, 20};

  void validate(std::size_t dimension) const;
};

// Deterministic prior volume after i removals, X_i = exp(-i/N), in logs.
inline double nested_log_volume(std::size_t i, std::size_t n_live) {
  return -static_cast<double>(i) / static_cast<double>(n_live);
}

EvidenceEstimate run_nested(const BayesianProblem& problem, const NestedConfig& config,
                            std::uint64_t seed);

}  // namespace lla
