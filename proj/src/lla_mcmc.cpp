#include "lla/lla_mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "internal.hpp"

namespace lla {

void KernelConfig::validate(std::size_t dimension) const {
  if (steps_per_sample < 1) throw std::invalid_argument("steps_per_sample must be at least 1");
  if (!proposal_stddev.empty()) {
    if (proposal_stddev.size() != dimension && proposal_stddev.size() != 1) {
      throw std::invalid_argument("proposal_stddev must have one entry or one per dimension");
    }
    for (double s : proposal_stddev) {
      if (!(s > 0.0) || !std::isfinite(s)) {
        throw std::invalid_argument("proposal_stddev entries must be positive");
      }
    }
  }
}

KernelConfig KernelConfig::resolved(const BayesianProblem& problem) const {
  const std::size_t d = problem.dimension();
  KernelConfig k = *this;
  if (k.proposal_stddev.empty()) {
    k.proposal_stddev.resize(d);
    for (std::size_t i = 0; i < d; ++i) k.proposal_stddev[i] = 0.25 * problem.priors[i]->stddev();
  } else if (k.proposal_stddev.size() == 1 && d > 1) {
    k.proposal_stddev.assign(d, k.proposal_stddev[0]);
  }
  if (!k.component_wise) k.component_wise = d > 10;
  return k;
}

StepResult constrained_mh_step(const ParameterVector& state, double log_l, double log_lambda,
                               const KernelConfig& kernel, const BayesianProblem& problem,
                               Engine& rng) {
  const std::size_t d = state.size();
  StepResult out{state, log_l, false, 0};
  ParameterVector candidate = state;
  if (kernel.component_wise.value_or(false)) {
    for (std::size_t k = 0; k < d; ++k) {
      const double xi = state[k] + kernel.proposal_stddev[k] * standard_normal(rng);
      const double log_ratio =
          problem.priors[k]->log_pdf(xi) - problem.priors[k]->log_pdf(state[k]);
      if (std::log(uniform_open(rng)) < log_ratio) candidate[k] = xi;
    }
  } else {
    for (std::size_t k = 0; k < d; ++k) {
      candidate[k] += kernel.proposal_stddev[k] * standard_normal(rng);
    }
    const double log_ratio = problem.log_prior(candidate) - problem.log_prior(state);
    if (!(std::log(uniform_open(rng)) < log_ratio)) return out;
  }
  if (candidate == state) {
    out.accepted = true;
    return out;
  }
  const double cand_l = detail::checked_log_likelihood(problem, candidate);
  out.evals = 1;
  if (exceeds_level(cand_l, log_lambda)) {
    out.state = std::move(candidate);
    out.log_l = cand_l;
    out.accepted = true;
  }
  return out;
}

Replenished replenish(const std::vector<ParameterVector>& passing,
                      const std::vector<double>& passing_log_l, std::size_t n_needed,
                      double log_lambda, const KernelConfig& kernel,
                      const BayesianProblem& problem, std::uint64_t seed,
                      std::uint64_t stream_tag, std::uint64_t iteration,
                      const Executor& executor) {
  if (passing.empty()) throw EvidenceError("level unreachable: no surviving samples");
  if (kernel.steps_per_sample < 1) throw std::invalid_argument("steps_per_sample must be at least 1");
  Replenished out;
  out.theta.resize(n_needed);
  out.log_l.resize(n_needed);
  std::vector<std::uint64_t> evals(n_needed, 0);
  executor.parallel_for(n_needed, [&](std::size_t c) {
    Engine rng = make_stream(seed, {stream_tag, iteration, c});
    std::uniform_int_distribution<std::size_t> pick(0, passing.size() - 1);
    const std::size_t start = pick(rng);
    StepResult cur{passing[start], passing_log_l[start], false, 0};
    for (std::size_t s = 0; s < kernel.steps_per_sample; ++s) {
      StepResult next = constrained_mh_step(cur.state, cur.log_l, log_lambda, kernel, problem, rng);
      evals[c] += next.evals;
      cur = std::move(next);
    }
    out.theta[c] = std::move(cur.state);
    out.log_l[c] = cur.log_l;
  });
  for (auto e : evals) out.evals += e;
  return out;
}

double chi_mcmc(double chi_prev, std::size_t n_pass, std::size_t n_total) {
  if (n_total == 0) return chi_prev;
  return chi_prev * static_cast<double>(n_pass) / static_cast<double>(n_total);
}

void MCMCConfig::validate(std::size_t dimension) const {
  if (n_samples < 2) throw std::invalid_argument("lla_mcmc n_samples must be at least 2");
  if (!use_fraction_schedule && !(n_replace >= 1 && n_replace < n_samples)) {
    throw std::invalid_argument("lla_mcmc n_replace must satisfy 1 <= n_replace < n_samples");
  }
  kernel.validate(dimension);
  level_policy.validate();
  stopping.validate();
}

EvidenceEstimate run_lla_mcmc(const BayesianProblem& problem, const MCMCConfig& config,
                              std::uint64_t seed, const Executor& executor) {
  problem.validate();
  config.validate(problem.dimension());
  const KernelConfig kernel = config.kernel.resolved(problem);
  const std::size_t d = problem.dimension();
  const std::size_t n = config.n_samples;

  std::vector<ParameterVector> theta(n);
  std::vector<double> log_l(n);
  Engine init_rng = make_stream(seed, {detail::kTagMCMC, 0});
  for (auto& t : theta) t = problem.sample_prior(init_rng);
  executor.parallel_for(n, [&](std::size_t j) {
    log_l[j] = detail::checked_log_likelihood(problem, theta[j]);
  });
  std::uint64_t evals = n;

  EvidenceEstimate est;
  est.trace.start(0);
  for (double l : log_l) est.max_log_likelihood = std::max(est.max_log_likelihood, l);
  double chi = 1.0;
  double log_e = kNegInf;
  double lambda_prev = kNegInf;

  for (std::size_t it = 1;; ++it) {
    std::vector<double> sorted = log_l;
    std::sort(sorted.begin(), sorted.end());
    const LevelSelection sel =
        config.use_fraction_schedule
            ? select_level(sorted, config.level_policy, it, lambda_prev)
            : select_level_by_count(sorted, config.n_replace, config.level_policy, lambda_prev);
    if (sel.degenerate) {
      est.termination_reason = TerminationReason::degenerate_level;
      break;
    }

    std::vector<ParameterVector> passing;
    std::vector<double> passing_l;
    ShellAccumulator shell(d);
    for (std::size_t j = 0; j < n; ++j) {
      if (exceeds_level(log_l[j], sel.log_lambda)) {
        passing.push_back(std::move(theta[j]));
        passing_l.push_back(log_l[j]);
      } else {
        shell.add(theta[j]);
      }
    }
    const double chi_hat = chi_mcmc(chi, passing.size(), n);
    const EvidenceUpdate upd = evidence_update(log_e, sel.log_lambda, chi, chi_hat);
    est.trace.push(sel.log_lambda, upd.chi, upd.log_increment, shell.mean(),
                   shell.second_moment(), evals);
    log_e = upd.log_evidence;
    chi = upd.chi;
    lambda_prev = sel.log_lambda;

    const StopDecision stop = should_stop(est.trace, config.stopping, upd.log_increment);
    if (stop.stop) {
      est.termination_reason = stop.reason;
      break;
    }
    if (passing.empty()) {
      est.warnings.push_back("iteration " + std::to_string(it) +
                             ": level unreachable, no surviving samples");
      est.termination_reason = TerminationReason::degenerate_level;
      break;
    }

    const std::size_t need = n - passing.size();
    Replenished fresh = replenish(passing, passing_l, need, sel.log_lambda, kernel, problem, seed,
                                  detail::kTagMCMC, it, executor);
    evals += fresh.evals;
    theta = std::move(passing);
    log_l = std::move(passing_l);
    for (std::size_t c = 0; c < need; ++c) {
      theta.push_back(std::move(fresh.theta[c]));
      log_l.push_back(fresh.log_l[c]);
      est.max_log_likelihood = std::max(est.max_log_likelihood, fresh.log_l[c]);
    }
  }

  finalize_estimate(est);
  est.total_evals = evals;
  return est;
}

}  // namespace lla
