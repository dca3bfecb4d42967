#include "lla/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

namespace lla {

double BayesianProblem::log_prior(std::span<const double> theta) const {
  double lp = 0.0;
  for (std::size_t k = 0; k < priors.size(); ++k) {
    lp += priors[k]->log_pdf(theta[k]);
    if (lp == kNegInf) break;
  }
  return lp;
}

ParameterVector BayesianProblem::sample_prior(Engine& rng) const {
  ParameterVector theta(priors.size());
  for (std::size_t k = 0; k < priors.size(); ++k) theta[k] = priors[k]->sample(rng);
  return theta;
}

void BayesianProblem::validate() const {
  if (priors.empty()) throw std::invalid_argument("problem dimension must be positive");
  for (const auto& p : priors) {
    if (!p) throw std::invalid_argument("null marginal prior");
  }
  if (!log_likelihood) throw std::invalid_argument("problem has no log-likelihood");
}

namespace {
constexpr std::array<std::pair<TerminationReason, std::string_view>, 5> kReasonNames{{
    {TerminationReason::delta_evidence, "delta_evidence"},
    {TerminationReason::chi_floor, "chi_floor"},
    {TerminationReason::max_iterations, "max_iterations"},
    {TerminationReason::max_evals, "max_evals"},
    {TerminationReason::degenerate_level, "degenerate_level"},
}};
}  // namespace

std::string_view to_string(TerminationReason reason) {
  for (const auto& [r, name] : kReasonNames) {
    if (r == reason) return name;
  }
  return "unknown";
}

std::optional<TerminationReason> termination_reason_from_string(std::string_view name) {
  for (const auto& [r, n] : kReasonNames) {
    if (n == name) return r;
  }
  return std::nullopt;
}

void LevelTrace::start(std::uint64_t evals) {
  *this = LevelTrace{};
  push(kNegInf, 1.0, kNegInf, {}, {}, evals);
}

void LevelTrace::push(double lambda, double chi_value, double log_increment,
                      ParameterVector shell_mean, ParameterVector shell_second_moment,
                      std::uint64_t evals) {
  log_lambda.push_back(lambda);
  chi.push_back(chi_value);
  log_increments.push_back(log_increment);
  shell_means.push_back(std::move(shell_mean));
  shell_second_moments.push_back(std::move(shell_second_moment));
  n_evals.push_back(evals);
}

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) throw EvidenceError("log_sum_exp of an empty sequence");
  double max_x = kNegInf;
  for (double x : xs) {
    if (std::isnan(x)) throw EvidenceError("non-numeric term");
    max_x = std::max(max_x, x);
  }
  if (max_x == kNegInf) return kNegInf;
  if (max_x == std::numeric_limits<double>::infinity()) return max_x;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - max_x);
  return max_x + std::log(sum);
}

double log_add_exp(double a, double b) {
  const std::array<double, 2> xs{a, b};
  return log_sum_exp(xs);
}

double effective_sample_size(std::span<const double> weights) {
  if (weights.empty()) throw EvidenceError("degenerate weights");
  double max_w = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw EvidenceError("weights must be finite and nonnegative");
    max_w = std::max(max_w, w);
  }
  if (max_w == 0.0) throw EvidenceError("degenerate weights");
  double s = 0.0, s2 = 0.0;
  for (double w : weights) {
    const double r = w / max_w;
    s += r;
    s2 += r * r;
  }
  return s * s / s2;
}

double effective_sample_size_from_logs(std::span<const double> log_weights) {
  if (log_weights.empty()) throw EvidenceError("degenerate weights");
  double max_lw = kNegInf;
  for (double lw : log_weights) {
    if (std::isnan(lw)) throw EvidenceError("non-numeric term");
    max_lw = std::max(max_lw, lw);
  }
  if (max_lw == kNegInf) throw EvidenceError("degenerate weights");
  double s = 0.0, s2 = 0.0;
  for (double lw : log_weights) {
    const double r = std::exp(lw - max_lw);
    s += r;
    s2 += r * r;
  }
  return s * s / s2;
}

EvidenceUpdate evidence_update(double log_evidence_prev, double log_lambda, double chi_prev,
                               double chi_cur) {
  EvidenceUpdate out{log_evidence_prev, kNegInf, chi_cur, false};
  if (chi_cur > chi_prev) {
    out.clamped = true;
    out.chi = chi_prev;
  }
  out.chi = std::max(out.chi, 0.0);
  const double dchi = chi_prev - out.chi;
  if (dchi > 0.0) {
    out.log_increment = log_lambda + std::log(dchi);
    out.log_evidence = log_add_exp(log_evidence_prev, out.log_increment);
  }
  return out;
}

PosteriorMoments posterior_moments(const LevelTrace& trace, double log_evidence) {
  std::size_t dim = 0;
  for (const auto& m : trace.shell_means) {
    if (!m.empty()) {
      dim = m.size();
      break;
    }
  }
  if (dim == 0) throw EvidenceError("no shells accumulated");

  // Shells without samples carry no location information; the weights are
  // renormalised over the shells that do.
  std::vector<std::size_t> used;
  std::vector<double> log_w;
  for (std::size_t i = 0; i < trace.shell_means.size(); ++i) {
    if (trace.shell_means[i].empty() || trace.log_increments[i] == kNegInf) continue;
    used.push_back(i);
    log_w.push_back(trace.log_increments[i] - log_evidence);
  }
  if (used.empty()) throw EvidenceError("no shells accumulated");
  const double log_norm = log_sum_exp(log_w);

  PosteriorMoments out{ParameterVector(dim, 0.0), std::vector<double>(dim, 0.0)};
  std::vector<double> second(dim, 0.0);
  for (std::size_t u = 0; u < used.size(); ++u) {
    const double w = std::exp(log_w[u] - log_norm);
    const auto& m = trace.shell_means[used[u]];
    const auto& m2 = trace.shell_second_moments[used[u]];
    for (std::size_t k = 0; k < dim; ++k) {
      out.mean[k] += w * m[k];
      second[k] += w * (m2.empty() ? m[k] * m[k] : m2[k]);
    }
  }
  for (std::size_t k = 0; k < dim; ++k) {
    out.variance[k] = std::max(0.0, second[k] - out.mean[k] * out.mean[k]);
  }
  return out;
}

ShellAccumulator::ShellAccumulator(std::size_t dimension)
    : sum_(dimension, 0.0), sum_sq_(dimension, 0.0) {}

void ShellAccumulator::add(std::span<const double> theta, double weight) {
  if (!(weight > 0.0)) return;
  for (std::size_t k = 0; k < sum_.size(); ++k) {
    sum_[k] += weight * theta[k];
    sum_sq_[k] += weight * theta[k] * theta[k];
  }
  total_weight_ += weight;
}

ParameterVector ShellAccumulator::mean() const {
  if (empty()) return {};
  ParameterVector m(sum_.size());
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = sum_[k] / total_weight_;
  return m;
}

ParameterVector ShellAccumulator::second_moment() const {
  if (empty()) return {};
  ParameterVector m(sum_sq_.size());
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = sum_sq_[k] / total_weight_;
  return m;
}

void finalize_estimate(EvidenceEstimate& estimate) {
  const auto& trace = estimate.trace;
  estimate.log_evidence =
      trace.log_increments.empty() ? kNegInf : log_sum_exp(trace.log_increments);
  estimate.total_evals = trace.n_evals.empty() ? 0 : trace.n_evals.back();
  const bool any_shell = std::any_of(trace.shell_means.begin(), trace.shell_means.end(),
                                     [](const auto& m) { return !m.empty(); });
  if (any_shell && estimate.log_evidence != kNegInf) {
    auto moments = posterior_moments(trace, estimate.log_evidence);
    estimate.posterior_mean = std::move(moments.mean);
    estimate.posterior_variance = std::move(moments.variance);
  }
}

}  // namespace lla
