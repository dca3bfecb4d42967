#pragma once

#include <limits>
#include <memory>
#include <string>

#include "lla/rng.hpp"

namespace lla {

struct Interval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x >= lower && x <= upper; }
  bool bounded() const;
  double width() const { return upper - lower; }
};

// One independent marginal of a product prior.
class MarginalPrior {
 public:
  virtual ~MarginalPrior() = default;

  virtual double log_pdf(double x) const = 0;
  virtual double cdf(double x) const = 0;
  // Nondecreasing map (0,1) -> support.
  virtual double inverse_cdf(double u) const = 0;
  virtual double mean() const = 0;
  virtual double stddev() const = 0;
  virtual Interval support() const = 0;
  virtual std::string describe() const = 0;

  double sample(Engine& rng) const { return inverse_cdf(uniform_open(rng)); }
};

using PriorPtr = std::shared_ptr<const MarginalPrior>;

// Gaussian restricted to [lower, upper]; infinite bounds give the plain
// normal. Tail probabilities are evaluated on whichever side keeps precision.
class TruncatedNormal final : public MarginalPrior {
 public:
  TruncatedNormal(double mean, double stddev, Interval bounds = {});

  double log_pdf(double x) const override;
  double cdf(double x) const override;
  double inverse_cdf(double u) const override;
  double mean() const override;
  double stddev() const override;
  Interval support() const override { return bounds_; }
  std::string describe() const override;

  double location() const { return mu_; }
  double scale() const { return sigma_; }

 private:
  double mu_;
  double sigma_;
  Interval bounds_;
  bool use_upper_tail_;
  double tail_lo_;  // Phi(a) or Q(a), depending on use_upper_tail_
  double tail_hi_;
  double log_mass_;
};

class Uniform final : public MarginalPrior {
 public:
  Uniform(double lower, double upper);

  double log_pdf(double x) const override;
  double cdf(double x) const override;
  double inverse_cdf(double u) const override;
  double mean() const override { return 0.5 * (lo_ + hi_); }
  double stddev() const override;
  Interval support() const override { return {lo_, hi_}; }
  std::string describe() const override;

 private:
  double lo_;
  double hi_;
};

PriorPtr normal_prior(double mean, double stddev);
PriorPtr truncated_normal_prior(double mean, double stddev, double lower, double upper);
PriorPtr uniform_prior(double lower, double upper);

}  // namespace lla
