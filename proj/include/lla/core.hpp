#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lla/priors.hpp"
#include "lla/rng.hpp"

namespace lla {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using ParameterVector = std::vector<double>;

// Deterministic and thread-safe; may return -inf for zero likelihood.
using LogLikelihood = std::function<double(std::span<const double>)>;

class EvidenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BayesianProblem {
  std::vector<PriorPtr> priors;
  LogLikelihood log_likelihood;

  std::size_t dimension() const { return priors.size(); }
  double log_prior(std::span<const double> theta) const;
  ParameterVector sample_prior(Engine& rng) const;
  void validate() const;
};

enum class TerminationReason {
  delta_evidence,
  chi_floor,
  max_iterations,
  max_evals,
  degenerate_level,
};

std::string_view to_string(TerminationReason reason);
std::optional<TerminationReason> termination_reason_from_string(std::string_view name);

// Row 0 is the initial state (lambda = -inf, chi = 1); row i > 0 describes
// iteration i. Shell statistics are empty when no sample landed in a shell.
struct LevelTrace {
  std::vector<double> log_lambda;
  std::vector<double> chi;
  std::vector<double> log_increments;
  std::vector<ParameterVector> shell_means;
  std::vector<ParameterVector> shell_second_moments;
  std::vector<std::uint64_t> n_evals;
  // Diagnostics filled by particular estimators; empty otherwise.
  std::vector<double> chi_variance;
  std::vector<std::size_t> active_strata;
  // Importance sampling: ESS of the batch behind each iteration's chi
  // estimate, one entry per row after row 0.
  std::vector<double> ess;

  std::size_t iterations() const { return log_lambda.empty() ? 0 : log_lambda.size() - 1; }
  void start(std::uint64_t evals);
  void push(double log_lambda, double chi, double log_increment, ParameterVector shell_mean,
            ParameterVector shell_second_moment, std::uint64_t evals);
};

struct EvidenceEstimate {
  double log_evidence = kNegInf;
  LevelTrace trace;
  ParameterVector posterior_mean;
  std::vector<double> posterior_variance;
  TerminationReason termination_reason = TerminationReason::max_iterations;
  std::uint64_t total_evals = 0;
  double max_log_likelihood = kNegInf;
  // Standard error of log E, when the estimator provides one (Monte Carlo).
  std::optional<double> log_evidence_stderr;
  std::vector<std::string> warnings;
};

// Numerically stable log(sum(exp(xs))). Throws EvidenceError on NaN or empty input.
double log_sum_exp(std::span<const double> xs);
double log_add_exp(double a, double b);

// Strict super-level test L > lambda; ties do not exceed.
inline bool exceeds_level(double log_l, double log_lambda) { return log_l > log_lambda; }

// (sum w)^2 / sum w^2 over nonnegative finite weights.
double effective_sample_size(std::span<const double> weights);
// Same quantity from log-weights, scaled to avoid overflow.
double effective_sample_size_from_logs(std::span<const double> log_weights);

struct EvidenceUpdate {
  double log_evidence;
  double log_increment;
  double chi;      // chi_cur after clamping to [0, chi_prev]
  bool clamped;    // chi_cur arrived above chi_prev
};

// Rectangle-rule step: E_new = E_prev + lambda * (chi_prev - chi_cur), in logs.
EvidenceUpdate evidence_update(double log_evidence_prev, double log_lambda, double chi_prev,
                               double chi_cur);

struct PosteriorMoments {
  ParameterVector mean;
  std::vector<double> variance;
};

// Evidence-weighted shell averages of theta and theta^2.
PosteriorMoments posterior_moments(const LevelTrace& trace, double log_evidence);

// Weighted first and second moments of the samples falling in one shell.
class ShellAccumulator {
 public:
  explicit ShellAccumulator(std::size_t dimension);

  void add(std::span<const double> theta, double weight = 1.0);
  bool empty() const { return total_weight_ <= 0.0; }
  ParameterVector mean() const;
  ParameterVector second_moment() const;

 private:
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
  double total_weight_ = 0.0;
};

// Fills posterior moments, total evals and the max log-likelihood bookkeeping
// shared by every estimator. Safe to call on a trace without shells.
void finalize_estimate(EvidenceEstimate& estimate);

}  // namespace lla
