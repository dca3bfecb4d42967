#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "lla/core.hpp"

namespace lla::detail {

// Stream tags keep the estimators' RNG key spaces apart.
enum StreamTag : std::uint64_t {
  kTagIS = 0x4953,
  kTagSS = 0x5353,
  kTagMCMC = 0x4d43,
  kTagMC = 0x4d50,
  kTagNested = 0x4e53,
};

inline double checked_log_likelihood(const BayesianProblem& problem,
                                     std::span<const double> theta) {
  const double l = problem.log_likelihood(theta);
  if (std::isnan(l)) throw EvidenceError("log-likelihood returned NaN");
  if (l == std::numeric_limits<double>::infinity()) {
    throw EvidenceError("log-likelihood returned +inf");
  }
  return l;
}

}  // namespace lla::detail
