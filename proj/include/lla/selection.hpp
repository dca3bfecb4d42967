#pragma once

#include <string>
#include <vector>

namespace lla {

struct ModelSet {
  std::vector<std::string> names;
  std::vector<double> log_evidences;
  std::vector<double> prior_probs;  // empty means uniform

  void validate() const;
};

struct ModelSelectionResult {
  std::vector<std::string> names;
  std::vector<double> log_evidences;
  std::vector<double> prior_probs;
  std::vector<double> posterior_probs;
};

// P(M_k | D) = exp(log E_k + log P(M_k) - logsumexp_j(log E_j + log P(M_j))).
std::vector<double> posterior_model_probabilities(const ModelSet& models);

ModelSelectionResult select_models(const ModelSet& models);

// log E_a - log E_b; +inf when only b is -inf, -inf when only a is.
double log_bayes_factor(double log_evidence_a, double log_evidence_b);

}  // namespace lla
