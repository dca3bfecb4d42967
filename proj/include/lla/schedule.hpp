#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lla/core.hpp"

namespace lla {

// Rejection fraction f_i = min(cap, offset + slope * i), raised by
// escalation_factor (up to escalation_cap) whenever the chosen order
// statistic fails to rise above the previous level.
struct LevelPolicy {
  double offset = 0.0;
  double slope = 0.025;
  double cap = 0.3;
  double escalation_factor = 1.5;
  double escalation_cap = 0.9;
  int max_escalations = 10;

  double fraction(std::size_t iteration) const;
  void validate() const;
};

struct StoppingPolicy {
  double delta_evidence_tol = 1e-4;
  double chi_tol = 0.005;
  std::size_t max_iterations = 100;
  std::uint64_t max_evals = 20000;

  void validate() const;
};

struct LevelSelection {
  double log_lambda = kNegInf;
  std::size_t n_reject = 0;
  double fraction = 0.0;
  bool degenerate = false;
};

// ceil(f * n), kept inside [1, n]. A small tolerance stops 0.3 * 1000 from
// rounding up to 301.
std::size_t rejection_count(double fraction, std::size_t n);

LevelSelection select_level(std::span<const double> sorted_log_likelihoods,
                            const LevelPolicy& policy, std::size_t iteration,
                            double log_lambda_prev);

// Same result as select_level on the sorted sequence, using partial
// selection; reorders its argument.
LevelSelection select_level_unsorted(std::vector<double>& log_likelihoods,
                                     const LevelPolicy& policy, std::size_t iteration,
                                     double log_lambda_prev);

// Same escalation rule, starting from an absolute rejection count instead of
// a scheduled fraction.
LevelSelection select_level_by_count(std::span<const double> sorted_log_likelihoods,
                                     std::size_t n_reject, const LevelPolicy& policy,
                                     double log_lambda_prev);

struct StopDecision {
  bool stop = false;
  TerminationReason reason = TerminationReason::max_iterations;
};

// Evaluated after each completed iteration. The evidence-change test is
// skipped when the last increment is -inf (an empty shell carries no
// information about convergence).
StopDecision should_stop(const LevelTrace& trace, const StoppingPolicy& policy,
                         double last_log_increment);

}  // namespace lla
