#include "lla/models.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lla {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

enum DataStream : std::uint64_t {
  kDataExampleOne = 1,
  kDataTruncated = 2,
  kDataHighDim = 3,
  kDataRegression = 4,
};

Engine data_stream(std::uint64_t seed, DataStream which) {
  return make_stream(seed, {0xDA7A, which});
}

}  // namespace

void ConjugateGaussianProblem::validate() const {
  if (data.empty()) throw std::invalid_argument("conjugate problem needs at least one observation");
  if (!(sigma > 0.0) || !(sigma0 > 0.0)) {
    throw std::invalid_argument("conjugate problem stddevs must be positive");
  }
}

double conjugate_exact_log_evidence(const ConjugateGaussianProblem& p) {
  p.validate();
  const double n = static_cast<double>(p.data.size());
  double mean = 0.0;
  for (double x : p.data) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : p.data) ss += (x - mean) * (x - mean);
  const double s2 = p.sigma * p.sigma;
  const double t2 = p.sigma0 * p.sigma0;
  const double dm = mean - p.mu0;
  return -0.5 * n * (kLog2Pi + std::log(s2)) + 0.5 * (std::log(s2) - std::log(n * t2 + s2)) -
         ss / (2.0 * s2) - n * dm * dm / (2.0 * (s2 + n * t2));
}

PosteriorMoments conjugate_posterior(const ConjugateGaussianProblem& p) {
  p.validate();
  const double n = static_cast<double>(p.data.size());
  double mean = 0.0;
  for (double x : p.data) mean += x;
  mean /= n;
  const double s2 = p.sigma * p.sigma;
  const double t2 = p.sigma0 * p.sigma0;
  const double post_mean = (t2 * n * mean + s2 * p.mu0) / (n * t2 + s2);
  const double post_var = 1.0 / (n / s2 + 1.0 / t2);
  return {{post_mean}, {post_var}};
}

BayesianProblem make_conjugate_problem(const ConjugateGaussianProblem& p) {
  p.validate();
  const double n = static_cast<double>(p.data.size());
  double mean = 0.0;
  for (double x : p.data) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : p.data) ss += (x - mean) * (x - mean);
  const double s2 = p.sigma * p.sigma;
  const double norm = -0.5 * n * (kLog2Pi + std::log(s2));
  BayesianProblem problem;
  problem.priors = {normal_prior(p.mu0, p.sigma0)};
  // sum (x_j - mu)^2 = ss + n (mean - mu)^2
  problem.log_likelihood = [=](std::span<const double> theta) {
    const double d = mean - theta[0];
    return norm - (ss + n * d * d) / (2.0 * s2);
  };
  return problem;
}

namespace {

struct Axis {
  std::vector<double> nodes;
  std::vector<double> log_weights;
};

Axis trapezoid_axis(Interval b, std::size_t m) {
  Axis ax;
  ax.nodes.resize(m);
  ax.log_weights.resize(m);
  const double h = (b.upper - b.lower) / static_cast<double>(m - 1);
  for (std::size_t i = 0; i < m; ++i) {
    ax.nodes[i] = i + 1 == m ? b.upper : b.lower + h * static_cast<double>(i);
    ax.log_weights[i] = std::log(i == 0 || i + 1 == m ? 0.5 * h : h);
  }
  return ax;
}

double trapezoid_log_integral(const BayesianProblem& problem, const std::vector<Interval>& bounds,
                              const std::vector<std::size_t>& nodes) {
  const std::size_t d = problem.dimension();
  std::vector<Axis> axes;
  for (std::size_t k = 0; k < d; ++k) axes.push_back(trapezoid_axis(bounds[k], nodes[k]));
  auto log_f = [&](std::span<const double> theta) {
    const double lp = problem.log_prior(theta);
    if (lp == kNegInf) return kNegInf;
    return lp + problem.log_likelihood(theta);
  };
  if (d == 1) {
    std::vector<double> terms(nodes[0]);
    for (std::size_t i = 0; i < nodes[0]; ++i) {
      const double t[1] = {axes[0].nodes[i]};
      terms[i] = axes[0].log_weights[i] + log_f(t);
    }
    return log_sum_exp(terms);
  }
  std::vector<double> rows(nodes[0]);
  std::vector<double> terms(nodes[1]);
  for (std::size_t i = 0; i < nodes[0]; ++i) {
    for (std::size_t j = 0; j < nodes[1]; ++j) {
      const double t[2] = {axes[0].nodes[i], axes[1].nodes[j]};
      terms[j] = axes[1].log_weights[j] + log_f(t);
    }
    rows[i] = axes[0].log_weights[i] + log_sum_exp(terms);
  }
  return log_sum_exp(rows);
}

}  // namespace

double grid_log_evidence(const BayesianProblem& problem, const QuadratureOracle& oracle) {
  problem.validate();
  const std::size_t d = problem.dimension();
  if (d > 2) throw std::invalid_argument("grid oracle supports at most two dimensions");
  std::vector<std::size_t> nodes = oracle.nodes.empty() ? std::vector<std::size_t>(d, 1001)
                                                        : oracle.nodes;
  if (nodes.size() != d) throw std::invalid_argument("grid node counts must match the dimension");
  for (auto m : nodes) {
    if (m < 1001) throw std::invalid_argument("grid oracle needs at least 1001 nodes per dimension");
  }
  std::vector<Interval> bounds = oracle.bounds;
  if (bounds.empty()) {
    for (std::size_t k = 0; k < d; ++k) {
      const auto& prior = *problem.priors[k];
      const Interval s = prior.support();
      const double m = prior.mean();
      const double sd = prior.stddev();
      bounds.push_back({std::max(s.lower, m - 10.0 * sd), std::min(s.upper, m + 10.0 * sd)});
    }
  }
  if (bounds.size() != d) throw std::invalid_argument("grid bounds must match the dimension");

  const double coarse = trapezoid_log_integral(problem, bounds, nodes);
  std::vector<std::size_t> fine_nodes(nodes);
  for (auto& m : fine_nodes) m = 2 * m - 1;
  const double fine = trapezoid_log_integral(problem, bounds, fine_nodes);
  if (!(std::abs(fine - coarse) < oracle.convergence_tol) &&
      !(coarse == kNegInf && fine == kNegInf)) {
    throw EvidenceError("oracle not converged");
  }
  return fine;
}

std::vector<double> example_one_dataset(std::uint64_t seed) {
  Engine rng = data_stream(seed, kDataExampleOne);
  std::vector<double> x(100);
  for (double& v : x) v = 1.5 + 0.5 * standard_normal(rng);
  return x;
}

ConjugateGaussianProblem example_one_problem(std::uint64_t seed) {
  return {example_one_dataset(seed), 1.0, 0.25, 0.5};
}

HighDimGaussian highdim_gaussian_data(std::uint64_t seed, std::size_t dimension) {
  Engine rng = data_stream(seed, kDataHighDim);
  HighDimGaussian h;
  h.observations.resize(dimension);
  for (double& y : h.observations) {
    const double truth = standard_normal(rng);
    y = truth + h.noise_sigma * standard_normal(rng);
  }
  return h;
}

std::vector<double> highdim_log_evidence_terms(const HighDimGaussian& h) {
  std::vector<double> terms;
  terms.reserve(h.observations.size());
  for (double y : h.observations) {
    terms.push_back(conjugate_exact_log_evidence({{y}, 0.0, 1.0, h.noise_sigma}));
  }
  return terms;
}

double legendre(std::size_t k, double x) {
  if (k == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (std::size_t j = 1; j < k; ++j) {
    const double jd = static_cast<double>(j);
    const double p2 = ((2.0 * jd + 1.0) * x * p1 - jd * p0) / (jd + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

RegressionData polynomial_regression_data(std::uint64_t seed) {
  Engine rng = data_stream(seed, kDataRegression);
  RegressionData r;
  const std::size_t n = 40;
  const double coef[3] = {0.3, -0.8, 0.6};
  for (std::size_t j = 0; j < n; ++j) {
    const double x = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(n - 1);
    double mean = 0.0;
    for (std::size_t k = 0; k < 3; ++k) mean += coef[k] * legendre(k, x);
    r.x.push_back(x);
    r.y.push_back(mean + r.noise_sigma * standard_normal(rng));
  }
  return r;
}

double regression_exact_log_evidence(const RegressionData& data, std::size_t degree) {
  const auto n = static_cast<Eigen::Index>(data.x.size());
  const auto m = static_cast<Eigen::Index>(degree + 1);
  Eigen::MatrixXd phi(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < m; ++k) {
      phi(i, k) = legendre(static_cast<std::size_t>(k), data.x[static_cast<std::size_t>(i)]);
    }
  }
  Eigen::MatrixXd cov = data.coef_prior_sigma * data.coef_prior_sigma * phi * phi.transpose();
  cov.diagonal().array() += data.noise_sigma * data.noise_sigma;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw EvidenceError("regression covariance not positive definite");
  const Eigen::Map<const Eigen::VectorXd> y(data.y.data(), n);
  const Eigen::VectorXd z = llt.matrixL().solve(y);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(n) * kLog2Pi + log_det + z.squaredNorm());
}

BayesianProblem make_regression_problem(const RegressionData& data, std::size_t degree) {
  const std::size_t n = data.x.size();
  const std::size_t m = degree + 1;
  std::vector<double> basis(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m; ++k) basis[i * m + k] = legendre(k, data.x[i]);
  }
  const double s2 = data.noise_sigma * data.noise_sigma;
  const double norm = -0.5 * static_cast<double>(n) * (kLog2Pi + std::log(s2));
  BayesianProblem problem;
  for (std::size_t k = 0; k < m; ++k) problem.priors.push_back(normal_prior(0.0, data.coef_prior_sigma));
  problem.log_likelihood = [basis, y = data.y, n, m, s2, norm](std::span<const double> beta) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double fit = 0.0;
      for (std::size_t k = 0; k < m; ++k) fit += basis[i * m + k] * beta[k];
      rss += (y[i] - fit) * (y[i] - fit);
    }
    return norm - rss / (2.0 * s2);
  };
  return problem;
}

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names = {
      "conjugate_gaussian", "uniform_linear",       "truncated_gaussian_1d",
      "bimodal_2d",         "highdim_gaussian_100", "polynomial_regression_set"};
  return names;
}

Benchmark make_benchmark(std::string_view name, std::uint64_t seed) {
  Benchmark b;
  b.name = std::string(name);
  b.seed = seed;
  if (name == "conjugate_gaussian") {
    const auto p = example_one_problem(seed);
    b.models.push_back({"conjugate_gaussian", make_conjugate_problem(p),
                        conjugate_exact_log_evidence(p), "closed_form"});
  } else if (name == "uniform_linear") {
    BayesianProblem p;
    p.priors = {uniform_prior(0.0, 1.0)};
    p.log_likelihood = [](std::span<const double> t) { return std::log(2.0 * t[0]); };
    b.models.push_back({"uniform_linear", std::move(p), 0.0, "closed_form"});
  } else if (name == "truncated_gaussian_1d") {
    Engine rng = data_stream(seed, kDataTruncated);
    std::vector<double> data(20);
    for (double& v : data) v = 1.38 + 0.1 * standard_normal(rng);
    const double s2 = 0.01;
    const double norm = -0.5 * static_cast<double>(data.size()) * (kLog2Pi + std::log(s2));
    BayesianProblem p;
    p.priors = {truncated_normal_prior(1.25, 0.5, 1.0, 1.5)};
    p.log_likelihood = [data, s2, norm](std::span<const double> t) {
      double ss = 0.0;
      for (double x : data) ss += (x - t[0]) * (x - t[0]);
      return norm - ss / (2.0 * s2);
    };
    const double ref = grid_log_evidence(p);
    b.models.push_back({"truncated_gaussian_1d", std::move(p), ref, "grid"});
  } else if (name == "bimodal_2d") {
    BayesianProblem p;
    p.priors = {uniform_prior(-5.0, 5.0), uniform_prior(-5.0, 5.0)};
    p.log_likelihood = [](std::span<const double> t) {
      const double s2 = 0.16;
      const double log_norm = -kLog2Pi - std::log(s2);
      const double a = (t[0] + 1.5) * (t[0] + 1.5) + (t[1] + 1.5) * (t[1] + 1.5);
      const double c = (t[0] - 2.0) * (t[0] - 2.0) + (t[1] - 1.5) * (t[1] - 1.5);
      return log_add_exp(std::log(0.6) + log_norm - a / (2.0 * s2),
                         std::log(0.4) + log_norm - c / (2.0 * s2));
    };
    QuadratureOracle oracle;
    oracle.nodes = {2001, 2001};
    const double ref = grid_log_evidence(p, oracle);
    b.models.push_back({"bimodal_2d", std::move(p), ref, "grid"});
  } else if (name == "highdim_gaussian_100") {
    const HighDimGaussian h = highdim_gaussian_data(seed, 100);
    const auto terms = highdim_log_evidence_terms(h);
    double ref = 0.0;
    for (double t : terms) ref += t;
    const double s2 = h.noise_sigma * h.noise_sigma;
    const double norm = -0.5 * static_cast<double>(terms.size()) * (kLog2Pi + std::log(s2));
    BayesianProblem p;
    p.priors.assign(terms.size(), normal_prior(0.0, 1.0));
    p.log_likelihood = [y = h.observations, s2, norm](std::span<const double> t) {
      double ss = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) ss += (y[k] - t[k]) * (y[k] - t[k]);
      return norm - ss / (2.0 * s2);
    };
    b.models.push_back({"highdim_gaussian_100", std::move(p), ref, "closed_form"});
  } else if (name == "polynomial_regression_set") {
    const RegressionData data = polynomial_regression_data(seed);
    for (std::size_t degree = 1; degree <= 3; ++degree) {
      b.models.push_back({"degree_" + std::to_string(degree), make_regression_problem(data, degree),
                          regression_exact_log_evidence(data, degree), "closed_form"});
    }
  } else {
    throw std::invalid_argument("unknown benchmark: " + std::string(name));
  }
  return b;
}

}  // namespace lla
