#include "lla/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "internal.hpp"

namespace lla {

EvidenceEstimate run_mc(const BayesianProblem& problem, std::size_t n, std::uint64_t seed,
                        const Executor& executor) {
  problem.validate();
  if (n < 1) throw std::invalid_argument("mc sample count must be positive");
  std::vector<ParameterVector> theta(n);
  std::vector<double> log_l(n);
  Engine rng = make_stream(seed, {detail::kTagMC});
  for (auto& t : theta) t = problem.sample_prior(rng);
  executor.parallel_for(n, [&](std::size_t j) {
    log_l[j] = detail::checked_log_likelihood(problem, theta[j]);
  });

  EvidenceEstimate est;
  est.trace.start(0);
  est.termination_reason = TerminationReason::max_evals;
  for (double l : log_l) est.max_log_likelihood = std::max(est.max_log_likelihood, l);

  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < n; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return log_l[a] < log_l[b]; });
  const double nd = static_cast<double>(n);
  std::size_t pos = 0;
  while (pos < n) {
    const double level = log_l[order[pos]];
    std::size_t end = pos;
    ShellAccumulator shell(problem.dimension());
    while (end < n && log_l[order[end]] == level) shell.add(theta[order[end++]]);
    if (level != kNegInf) {
      const double count = static_cast<double>(end - pos);
      est.trace.push(level, static_cast<double>(n - end) / nd, level + std::log(count / nd),
                     shell.mean(), shell.second_moment(), n);
    }
    pos = end;
  }

  if (est.max_log_likelihood == kNegInf) {
    est.warnings.push_back("every sampled likelihood is zero");
    est.total_evals = n;
    est.log_evidence = kNegInf;
    return est;
  }
  finalize_estimate(est);
  est.total_evals = n;

  // Relative standard error of the linear mean, computed with shifted weights.
  double mean = 0.0, sq = 0.0;
  for (double l : log_l) {
    const double w = std::exp(l - est.max_log_likelihood);
    mean += w;
    sq += w * w;
  }
  mean /= nd;
  const double var = n > 1 ? std::max(0.0, (sq / nd - mean * mean) * nd / (nd - 1.0)) : 0.0;
  est.log_evidence_stderr = std::sqrt(var / nd) / mean;
  return est;
}

void NestedConfig::validate(std::size_t dimension) const {
  if (n_live < 2) throw std::invalid_argument("nested n_live must be at least 2");
  kernel.validate(dimension);
  stopping.validate();
}

EvidenceEstimate run_nested(const BayesianProblem& problem, const NestedConfig& config,
                            std::uint64_t seed) {
  problem.validate();
  config.validate(problem.dimension());
  const KernelConfig kernel = config.kernel.resolved(problem);
  const std::size_t n = config.n_live;
  const std::size_t d = problem.dimension();

  std::vector<ParameterVector> live(n);
  std::vector<double> live_l(n);
  Engine init_rng = make_stream(seed, {detail::kTagNested, 0});
  for (std::size_t j = 0; j < n; ++j) {
    live[j] = problem.sample_prior(init_rng);
    live_l[j] = detail::checked_log_likelihood(problem, live[j]);
  }
  std::uint64_t evals = n;

  EvidenceEstimate est;
  est.trace.start(0);
  for (double l : live_l) est.max_log_likelihood = std::max(est.max_log_likelihood, l);
  // -expm1(-1/N): fraction of the current volume removed per iteration.
  const double log_shrink = std::log(-std::expm1(-1.0 / static_cast<double>(n)));
  bool terminal_row = false;
  double log_x_last = 0.0;

  auto add_row = [&](double level, double log_x, double inc, const ParameterVector& shell_mean,
                     const ParameterVector& shell_sq) {
    auto& tr = est.trace;
    if (tr.iterations() > 0 && !exceeds_level(level, tr.log_lambda.back())) {
      // Tied level: merge into the previous row so levels stay strictly increasing.
      const std::size_t r = tr.log_lambda.size() - 1;
      const double merged = log_add_exp(tr.log_increments[r], inc);
      if (!shell_mean.empty() && !tr.shell_means[r].empty()) {
        const double wa = std::exp(tr.log_increments[r] - merged);
        const double wb = std::exp(inc - merged);
        for (std::size_t k = 0; k < d; ++k) {
          tr.shell_means[r][k] = wa * tr.shell_means[r][k] + wb * shell_mean[k];
          tr.shell_second_moments[r][k] = wa * tr.shell_second_moments[r][k] + wb * shell_sq[k];
        }
      }
      tr.log_increments[r] = merged;
      tr.chi[r] = std::exp(log_x);
      tr.n_evals[r] = evals;
      return;
    }
    tr.push(level, std::exp(log_x), inc, shell_mean, shell_sq, evals);
  };

  for (std::size_t i = 1;; ++i) {
    const auto jmin = static_cast<std::size_t>(
        std::min_element(live_l.begin(), live_l.end()) - live_l.begin());
    const double l_min = live_l[jmin];
    const double log_x_prev = nested_log_volume(i - 1, n);

    std::vector<std::size_t> above;
    for (std::size_t j = 0; j < n; ++j) {
      if (exceeds_level(live_l[j], l_min)) above.push_back(j);
    }
    if (above.empty()) {
      // Every live point sits on the same level: all remaining volume belongs to it.
      ShellAccumulator shell(d);
      for (const auto& t : live) shell.add(t);
      add_row(l_min, kNegInf, l_min + log_x_prev, shell.mean(), shell.second_moment());
      est.termination_reason = TerminationReason::degenerate_level;
      terminal_row = true;
      break;
    }

    const double log_x = nested_log_volume(i, n);
    const double inc = l_min + log_x_prev + log_shrink;
    ParameterVector sq(d);
    for (std::size_t k = 0; k < d; ++k) sq[k] = live[jmin][k] * live[jmin][k];
    add_row(l_min, log_x, inc, live[jmin], sq);
    log_x_last = log_x;

    const StopDecision stop = should_stop(est.trace, config.stopping, inc);
    if (stop.stop) {
      est.termination_reason = stop.reason;
      break;
    }

    Engine rng = make_stream(seed, {detail::kTagNested, i});
    std::uniform_int_distribution<std::size_t> pick(0, above.size() - 1);
    const std::size_t start = above[pick(rng)];
    StepResult cur{live[start], live_l[start], false, 0};
    for (std::size_t s = 0; s < kernel.steps_per_sample; ++s) {
      StepResult next = constrained_mh_step(cur.state, cur.log_l, l_min, kernel, problem, rng);
      evals += next.evals;
      cur = std::move(next);
    }
    live[jmin] = std::move(cur.state);
    live_l[jmin] = cur.log_l;
    est.max_log_likelihood = std::max(est.max_log_likelihood, cur.log_l);
  }

  if (!terminal_row) {
    // Remaining live points share the final volume equally.
    const double log_mean_l = log_sum_exp(live_l) - std::log(static_cast<double>(n));
    ShellAccumulator shell(d);
    for (std::size_t j = 0; j < n; ++j) shell.add(live[j], std::exp(live_l[j] - log_mean_l));
    add_row(log_mean_l, kNegInf, log_mean_l + log_x_last, shell.mean(), shell.second_moment());
  }

  finalize_estimate(est);
  est.total_evals = evals;
  return est;
}

}  // namespace lla
