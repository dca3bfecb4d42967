#include "lla/lla_is.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "internal.hpp"

namespace lla {

GaussianISD::GaussianISD(ParameterVector mean, std::vector<double> stddev,
                         std::vector<Interval> support)
    : mean_(std::move(mean)), stddev_(std::move(stddev)), support_(std::move(support)) {
  if (mean_.size() != stddev_.size() || mean_.size() != support_.size()) {
    throw std::invalid_argument("importance density dimensions disagree");
  }
  marginals_.reserve(mean_.size());
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    if (!(stddev_[k] > 0.0)) throw std::invalid_argument("importance stddev must be positive");
    marginals_.emplace_back(mean_[k], stddev_[k], support_[k]);
  }
}

double GaussianISD::log_pdf(std::span<const double> theta) const {
  double lp = 0.0;
  for (std::size_t k = 0; k < marginals_.size(); ++k) lp += marginals_[k].log_pdf(theta[k]);
  return lp;
}

ParameterVector GaussianISD::sample(Engine& rng) const {
  ParameterVector theta(marginals_.size());
  for (std::size_t k = 0; k < marginals_.size(); ++k) theta[k] = marginals_[k].sample(rng);
  return theta;
}

void ISConfig::validate(std::size_t dimension) const {
  if (n_initial < 10) throw std::invalid_argument("lla_is n_initial must be at least 10");
  if (!(ess_threshold_fraction >= 0.0 && ess_threshold_fraction < 1.0)) {
    throw std::invalid_argument("ess_threshold_fraction must lie in [0, 1)");
  }
  if (!(stddev_multiplier > 0.0)) throw std::invalid_argument("stddev_multiplier must be positive");
  if (fixed_stddev) {
    if (fixed_stddev->size() != dimension) {
      throw std::invalid_argument("fixed_stddev length must equal the problem dimension");
    }
    for (double s : *fixed_stddev) {
      if (!(s > 0.0)) throw std::invalid_argument("fixed_stddev entries must be positive");
    }
  }
  if (!(stddev_floor_fraction > 0.0)) throw std::invalid_argument("stddev floor must be positive");
  level_policy.validate();
  stopping.validate();
}

GaussianISD fit_isd(const std::vector<ParameterVector>& retained, double multiplier,
                    const std::vector<Interval>& prior_support, double floor_fraction) {
  if (retained.size() < 2) throw EvidenceError("insufficient samples for ISD");
  const std::size_t d = prior_support.size();
  const double n = static_cast<double>(retained.size());
  ParameterVector mean(d, 0.0);
  for (const auto& t : retained) {
    for (std::size_t k = 0; k < d; ++k) mean[k] += t[k];
  }
  for (double& m : mean) m /= n;
  std::vector<double> sd(d, 0.0);
  for (const auto& t : retained) {
    for (std::size_t k = 0; k < d; ++k) sd[k] += (t[k] - mean[k]) * (t[k] - mean[k]);
  }
  for (std::size_t k = 0; k < d; ++k) {
    sd[k] = multiplier * std::sqrt(sd[k] / (n - 1.0));
    if (!(sd[k] > 0.0)) {
      const double width = prior_support[k].width();
      sd[k] = std::isfinite(width) ? floor_fraction * width : floor_fraction;
    }
  }
  return GaussianISD(std::move(mean), std::move(sd), prior_support);
}

double chi_is(std::span<const double> log_likelihoods, std::span<const double> log_weights,
              double log_lambda) {
  if (log_likelihoods.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t j = 0; j < log_likelihoods.size(); ++j) {
    if (exceeds_level(log_likelihoods[j], log_lambda)) sum += std::exp(log_weights[j]);
  }
  return sum / static_cast<double>(log_likelihoods.size());
}

namespace {

struct Batch {
  std::vector<ParameterVector> theta;
  std::vector<double> log_l;
  std::vector<double> log_w;
};

// Draws n samples from q (the prior when q is empty) and appends them. Draws
// come from one stream per (iteration, round); only the likelihood
// evaluations run in parallel.
void draw(Batch& batch, std::size_t n, const BayesianProblem& problem,
          const std::optional<GaussianISD>& q, std::uint64_t seed, std::uint64_t iteration,
          std::uint64_t round, const Executor& executor) {
  const std::size_t base = batch.theta.size();
  batch.theta.resize(base + n);
  batch.log_l.resize(base + n);
  batch.log_w.resize(base + n);
  Engine rng = make_stream(seed, {detail::kTagIS, iteration, round});
  for (std::size_t j = 0; j < n; ++j) {
    auto& t = batch.theta[base + j];
    if (q) {
      t = q->sample(rng);
      batch.log_w[base + j] = problem.log_prior(t) - q->log_pdf(t);
    } else {
      t = problem.sample_prior(rng);
      batch.log_w[base + j] = 0.0;
    }
  }
  executor.parallel_for(n, [&](std::size_t j) {
    batch.log_l[base + j] = detail::checked_log_likelihood(problem, batch.theta[base + j]);
  });
}

// Running sums for the ESS of a growing batch, rescaled to the largest weight
// seen so far.
class RunningESS {
 public:
  void add(std::span<const double> log_weights) {
    for (double lw : log_weights) {
      if (std::isnan(lw)) throw EvidenceError("non-numeric term");
      if (lw == kNegInf) continue;
      if (lw > max_) {
        const double r = std::exp(max_ - lw);
        s_ *= r;
        s2_ *= r * r;
        max_ = lw;
      }
      const double r = std::exp(lw - max_);
      s_ += r;
      s2_ += r * r;
    }
  }
  double value() const { return s2_ > 0.0 ? s_ * s_ / s2_ : 0.0; }

 private:
  double max_ = kNegInf;
  double s_ = 0.0;
  double s2_ = 0.0;
};

}  // namespace

EvidenceEstimate run_lla_is(const BayesianProblem& problem, const ISConfig& config,
                            std::uint64_t seed, const Executor& executor) {
  problem.validate();
  config.validate(problem.dimension());
  const std::size_t d = problem.dimension();
  std::vector<Interval> support(d);
  for (std::size_t k = 0; k < d; ++k) support[k] = problem.priors[k]->support();

  EvidenceEstimate est;
  est.trace.start(0);
  std::optional<GaussianISD> q;
  double chi = 1.0;
  double log_e = kNegInf;
  double lambda_prev = kNegInf;
  std::uint64_t evals = 0;
  const double gamma = config.ess_threshold_fraction * static_cast<double>(config.n_initial);

  for (std::size_t it = 1;; ++it) {
    Batch batch;
    std::uint64_t round = 0;
    draw(batch, config.n_initial, problem, q, seed, it, round++, executor);
    evals += config.n_initial;
    for (double l : batch.log_l) est.max_log_likelihood = std::max(est.max_log_likelihood, l);

    std::vector<double> candidates;
    for (double l : batch.log_l) {
      if (exceeds_level(l, lambda_prev)) candidates.push_back(l);
    }
    if (candidates.empty()) {
      est.termination_reason = TerminationReason::degenerate_level;
      break;
    }
    std::sort(candidates.begin(), candidates.end());
    const LevelSelection sel = select_level(candidates, config.level_policy, it, lambda_prev);
    if (sel.degenerate) {
      est.termination_reason = TerminationReason::degenerate_level;
      break;
    }

    bool budget_exhausted = false;
    RunningESS ess;
    ess.add(batch.log_w);
    while (gamma > 0.0 && !(ess.value() > gamma)) {
      if (evals >= config.stopping.max_evals) {
        budget_exhausted = true;
        break;
      }
      const auto extra =
          std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(gamma - ess.value())));
      const std::size_t first = batch.log_l.size();
      draw(batch, extra, problem, q, seed, it, round++, executor);
      evals += extra;
      ess.add(std::span<const double>(batch.log_w).subspan(first));
      for (std::size_t j = first; j < batch.log_l.size(); ++j) {
        est.max_log_likelihood = std::max(est.max_log_likelihood, batch.log_l[j]);
      }
    }
    if (budget_exhausted) {
      est.warnings.push_back("iteration " + std::to_string(it) +
                             ": evaluation budget exhausted before the ESS guard passed");
      est.termination_reason = TerminationReason::max_evals;
      break;
    }

    const double chi_hat = chi_is(batch.log_l, batch.log_w, sel.log_lambda);
    const EvidenceUpdate upd = evidence_update(log_e, sel.log_lambda, chi, chi_hat);
    if (upd.clamped) {
      est.warnings.push_back("iteration " + std::to_string(it) +
                             ": chi estimate rose above the previous value and was clamped");
    }

    ShellAccumulator shell(d);
    std::vector<ParameterVector> retained;
    for (std::size_t j = 0; j < batch.theta.size(); ++j) {
      const double l = batch.log_l[j];
      if (exceeds_level(l, sel.log_lambda)) {
        retained.push_back(batch.theta[j]);
      } else if (exceeds_level(l, lambda_prev)) {
        shell.add(batch.theta[j], std::exp(batch.log_w[j]));
      }
    }
    est.trace.push(sel.log_lambda, upd.chi, upd.log_increment, shell.mean(),
                   shell.second_moment(), evals);
    est.trace.ess.push_back(ess.value());
    log_e = upd.log_evidence;
    chi = upd.chi;
    lambda_prev = sel.log_lambda;

    if (retained.size() >= 2) {
      try {
        GaussianISD fitted = fit_isd(retained, config.stddev_multiplier, support,
                                     config.stddev_floor_fraction);
        if (config.fixed_stddev) {
          fitted = GaussianISD(fitted.mean(), *config.fixed_stddev, support);
        }
        q = std::move(fitted);
      } catch (const std::exception& e) {
        est.warnings.push_back("iteration " + std::to_string(it) +
                               ": importance density refit failed (" + e.what() +
                               "); previous density reused");
      }
    } else if (chi > 0.0) {
      est.warnings.push_back("iteration " + std::to_string(it) +
                             ": fewer than two retained samples; previous density reused");
    }

    const StopDecision stop = should_stop(est.trace, config.stopping, upd.log_increment);
    if (stop.stop) {
      est.termination_reason = stop.reason;
      break;
    }
  }

  finalize_estimate(est);
  est.total_evals = evals;
  return est;
}

}  // namespace lla
