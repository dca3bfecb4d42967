#include "lla/selection.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lla/core.hpp"

namespace lla {

void ModelSet::validate() const {
  if (names.size() != log_evidences.size()) {
    throw std::invalid_argument("model names and evidences differ in length");
  }
  if (log_evidences.empty()) throw std::invalid_argument("model set is empty");
  if (!prior_probs.empty()) {
    if (prior_probs.size() != log_evidences.size()) {
      throw std::invalid_argument("model priors and evidences differ in length");
    }
    double total = 0.0;
    for (double p : prior_probs) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw std::invalid_argument("model prior probabilities must be nonnegative");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("model prior probabilities must sum to 1");
    }
  }
  for (double e : log_evidences) {
    if (std::isnan(e) || e == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("log evidences must be finite or -inf");
    }
  }
}

std::vector<double> posterior_model_probabilities(const ModelSet& models) {
  models.validate();
  const std::size_t m = models.log_evidences.size();
  std::vector<double> log_joint(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double prior = models.prior_probs.empty() ? 1.0 / static_cast<double>(m)
                                                    : models.prior_probs[k];
    log_joint[k] = models.log_evidences[k] + std::log(prior);
  }
  const double log_norm = log_sum_exp(log_joint);
  if (log_norm == kNegInf) throw EvidenceError("no model explains the data");
  std::vector<double> post(m);
  for (std::size_t k = 0; k < m; ++k) post[k] = std::exp(log_joint[k] - log_norm);
  return post;
}

ModelSelectionResult select_models(const ModelSet& models) {
  ModelSelectionResult r;
  r.posterior_probs = posterior_model_probabilities(models);
  r.names = models.names;
  r.log_evidences = models.log_evidences;
  r.prior_probs = models.prior_probs;
  if (r.prior_probs.empty()) {
    r.prior_probs.assign(r.names.size(), 1.0 / static_cast<double>(r.names.size()));
  }
  return r;
}

double log_bayes_factor(double log_evidence_a, double log_evidence_b) {
  if (std::isnan(log_evidence_a) || std::isnan(log_evidence_b)) {
    throw std::invalid_argument("log evidence is NaN");
  }
  if (log_evidence_a == kNegInf && log_evidence_b == kNegInf) {
    throw EvidenceError("undefined factor");
  }
  return log_evidence_a - log_evidence_b;
}

}  // namespace lla
