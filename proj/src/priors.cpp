#include "lla/priors.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lla {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Phi^{-1}(p) for p in (0, 1).
double std_normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace

bool Interval::bounded() const { return std::isfinite(lower) && std::isfinite(upper); }

TruncatedNormal::TruncatedNormal(double mean, double stddev, Interval bounds)
    : mu_(mean), sigma_(stddev), bounds_(bounds) {
  if (!(stddev > 0.0) || !std::isfinite(stddev) || !std::isfinite(mean)) {
    throw std::invalid_argument("normal prior requires finite mean and positive stddev");
  }
  if (!(bounds.lower < bounds.upper)) {
    throw std::invalid_argument("truncation interval is empty");
  }
  const double za = (bounds.lower - mu_) / sigma_;
  const double zb = (bounds.upper - mu_) / sigma_;
  // Work in the upper tail when the interval sits right of the mean.
  use_upper_tail_ = za > 0.0;
  if (use_upper_tail_) {
    tail_lo_ = std_normal_cdf(-za);
    tail_hi_ = std_normal_cdf(-zb);
  } else {
    tail_lo_ = std_normal_cdf(za);
    tail_hi_ = std_normal_cdf(zb);
  }
  const double mass = std::abs(tail_hi_ - tail_lo_);
  if (!(mass > 0.0)) throw std::invalid_argument("truncation interval has no prior mass");
  log_mass_ = std::log(mass);
}

double TruncatedNormal::log_pdf(double x) const {
  if (!bounds_.contains(x)) return -kInf;
  const double z = (x - mu_) / sigma_;
  return -0.5 * z * z - std::log(sigma_) - 0.5 * std::log(2.0 * std::numbers::pi) - log_mass_;
}

double TruncatedNormal::cdf(double x) const {
  if (x <= bounds_.lower) return 0.0;
  if (x >= bounds_.upper) return 1.0;
  const double z = (x - mu_) / sigma_;
  if (use_upper_tail_) return (tail_lo_ - std_normal_cdf(-z)) / (tail_lo_ - tail_hi_);
  return (std_normal_cdf(z) - tail_lo_) / (tail_hi_ - tail_lo_);
}

double TruncatedNormal::inverse_cdf(double u) const {
  double z;
  if (use_upper_tail_) {
    z = -std_normal_quantile(tail_lo_ - u * (tail_lo_ - tail_hi_));
  } else {
    z = std_normal_quantile(tail_lo_ + u * (tail_hi_ - tail_lo_));
  }
  const double x = mu_ + sigma_ * z;
  return std::min(std::max(x, bounds_.lower), bounds_.upper);
}

double TruncatedNormal::mean() const {
  if (!std::isfinite(bounds_.lower) && !std::isfinite(bounds_.upper)) return mu_;
  const double za = (bounds_.lower - mu_) / sigma_;
  const double zb = (bounds_.upper - mu_) / sigma_;
  auto phi = [](double z) {
    return std::isfinite(z) ? std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi) : 0.0;
  };
  return mu_ + sigma_ * (phi(za) - phi(zb)) / std::exp(log_mass_);
}

double TruncatedNormal::stddev() const {
  if (!std::isfinite(bounds_.lower) && !std::isfinite(bounds_.upper)) return sigma_;
  const double za = (bounds_.lower - mu_) / sigma_;
  const double zb = (bounds_.upper - mu_) / sigma_;
  auto phi = [](double z) {
    return std::isfinite(z) ? std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi) : 0.0;
  };
  auto zphi = [&](double z) { return std::isfinite(z) ? z * phi(z) : 0.0; };
  const double mass = std::exp(log_mass_);
  const double r = (phi(za) - phi(zb)) / mass;
  const double var = 1.0 + (zphi(za) - zphi(zb)) / mass - r * r;
  return sigma_ * std::sqrt(std::max(var, 0.0));
}

std::string TruncatedNormal::describe() const {
  std::ostringstream os;
  os << "normal(" << mu_ << ", " << sigma_ << ")";
  if (std::isfinite(bounds_.lower) || std::isfinite(bounds_.upper)) {
    os << " truncated to [" << bounds_.lower << ", " << bounds_.upper << "]";
  }
  return os.str();
}

Uniform::Uniform(double lower, double upper) : lo_(lower), hi_(upper) {
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw std::invalid_argument("uniform prior requires finite lower < upper");
  }
}

double Uniform::log_pdf(double x) const {
  if (x < lo_ || x > hi_) return -kInf;
  return -std::log(hi_ - lo_);
}

double Uniform::cdf(double x) const {
  if (x <= lo_) return 0.0;
  if (x >= hi_) return 1.0;
  return (x - lo_) / (hi_ - lo_);
}

double Uniform::inverse_cdf(double u) const {
  return std::min(std::max(lo_ + u * (hi_ - lo_), lo_), hi_);
}

double Uniform::stddev() const { return (hi_ - lo_) / std::sqrt(12.0); }

std::string Uniform::describe() const {
  std::ostringstream os;
  os << "uniform(" << lo_ << ", " << hi_ << ")";
  return os.str();
}

PriorPtr normal_prior(double mean, double stddev) {
  return std::make_shared<TruncatedNormal>(mean, stddev);
}

PriorPtr truncated_normal_prior(double mean, double stddev, double lower, double upper) {
  return std::make_shared<TruncatedNormal>(mean, stddev, Interval{lower, upper});
}

PriorPtr uniform_prior(double lower, double upper) {
  return std::make_shared<Uniform>(lower, upper);
}

}  // namespace lla
