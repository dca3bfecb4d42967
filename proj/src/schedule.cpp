#include "lla/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lla {

double LevelPolicy::fraction(std::size_t iteration) const {
  return std::min(cap, offset + slope * static_cast<double>(iteration));
}

void LevelPolicy::validate() const {
  if (!(cap > 0.0 && cap < 1.0)) throw std::invalid_argument("level fraction cap must lie in (0, 1)");
  if (!(offset >= 0.0) || !(slope >= 0.0)) {
    throw std::invalid_argument("level schedule offset and slope must be nonnegative");
  }
  if (!(offset + slope > 0.0)) throw std::invalid_argument("level fraction at iteration 1 must be positive");
  if (!(escalation_factor > 1.0)) throw std::invalid_argument("escalation factor must exceed 1");
  if (!(escalation_cap > 0.0 && escalation_cap < 1.0)) {
    throw std::invalid_argument("escalation cap must lie in (0, 1)");
  }
  if (max_escalations < 0) throw std::invalid_argument("max_escalations must be nonnegative");
}

void StoppingPolicy::validate() const {
  if (!(delta_evidence_tol > 0.0)) throw std::invalid_argument("delta_evidence_tol must be positive");
  if (!(chi_tol > 0.0 && chi_tol < 1.0)) throw std::invalid_argument("chi_tol must lie in (0, 1)");
  if (max_iterations == 0) throw std::invalid_argument("max_iterations must be positive");
  if (max_evals == 0) throw std::invalid_argument("max_evals must be positive");
}

std::size_t rejection_count(double fraction, std::size_t n) {
  const double target = fraction * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(target - 1e-9 * std::max(1.0, target)));
  return std::clamp<std::size_t>(k, 1, n);
}

namespace {

// kth(k) returns the k-th lowest value (1-based) of a sequence of length n.
template <typename Kth>
LevelSelection escalate(std::size_t n, Kth&& kth, double fraction, const LevelPolicy& policy,
                        double log_lambda_prev) {
  if (n == 0) throw EvidenceError("level selection needs at least one sample");
  LevelSelection sel;
  sel.fraction = fraction;
  for (int attempt = 0;; ++attempt) {
    sel.n_reject = rejection_count(sel.fraction, n);
    sel.log_lambda = kth(sel.n_reject);
    if (exceeds_level(sel.log_lambda, log_lambda_prev)) return sel;
    if (attempt >= policy.max_escalations || sel.fraction >= policy.escalation_cap) break;
    sel.fraction = std::min(policy.escalation_cap, sel.fraction * policy.escalation_factor);
  }
  sel.degenerate = true;
  return sel;
}

}  // namespace

LevelSelection select_level(std::span<const double> sorted_log_likelihoods,
                            const LevelPolicy& policy, std::size_t iteration,
                            double log_lambda_prev) {
  return escalate(
      sorted_log_likelihoods.size(), [&](std::size_t k) { return sorted_log_likelihoods[k - 1]; },
      policy.fraction(iteration), policy, log_lambda_prev);
}

LevelSelection select_level_unsorted(std::vector<double>& log_likelihoods,
                                     const LevelPolicy& policy, std::size_t iteration,
                                     double log_lambda_prev) {
  auto kth = [&](std::size_t k) {
    auto it = log_likelihoods.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(log_likelihoods.begin(), it, log_likelihoods.end());
    return *it;
  };
  return escalate(log_likelihoods.size(), kth, policy.fraction(iteration), policy,
                  log_lambda_prev);
}

LevelSelection select_level_by_count(std::span<const double> sorted_log_likelihoods,
                                     std::size_t n_reject, const LevelPolicy& policy,
                                     double log_lambda_prev) {
  const double n = static_cast<double>(std::max<std::size_t>(1, sorted_log_likelihoods.size()));
  return escalate(
      sorted_log_likelihoods.size(), [&](std::size_t k) { return sorted_log_likelihoods[k - 1]; },
      static_cast<double>(n_reject) / n, policy, log_lambda_prev);
}

StopDecision should_stop(const LevelTrace& trace, const StoppingPolicy& policy,
                         double last_log_increment) {
  StopDecision d;
  if (trace.iterations() == 0) return d;
  if (last_log_increment != kNegInf && !std::isnan(last_log_increment)) {
    const double log_e = log_sum_exp(trace.log_increments);
    if (std::exp(last_log_increment - log_e) < policy.delta_evidence_tol) {
      return {true, TerminationReason::delta_evidence};
    }
  }
  if (trace.chi.back() < policy.chi_tol) return {true, TerminationReason::chi_floor};
  if (trace.iterations() >= policy.max_iterations) return {true, TerminationReason::max_iterations};
  if (trace.n_evals.back() >= policy.max_evals) return {true, TerminationReason::max_evals};
  return d;
}

}  // namespace lla
