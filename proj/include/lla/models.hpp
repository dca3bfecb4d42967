#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lla/core.hpp"

namespace lla {

// n observations x_j ~ N(mu, sigma^2) with known sigma and prior mu ~ N(mu0, sigma0^2).
struct ConjugateGaussianProblem {
  std::vector<double> data;
  double mu0 = 0.0;
  double sigma0 = 1.0;
  double sigma = 1.0;

  void validate() const;
};

// Closed-form log evidence, assembled from logs only (no linear exponentials).
double conjugate_exact_log_evidence(const ConjugateGaussianProblem& p);

// Analytic posterior mean and variance of mu.
PosteriorMoments conjugate_posterior(const ConjugateGaussianProblem& p);

BayesianProblem make_conjugate_problem(const ConjugateGaussianProblem& p);

// Tensor-grid trapezoid oracle for d <= 2. Empty bounds default to
// mean +/- 10 prior stddev, clipped to the prior support.
struct QuadratureOracle {
  std::vector<std::size_t> nodes;  // per dimension, each >= 1001; empty means 1001
  std::vector<Interval> bounds;
  double convergence_tol = 1e-6;
};

// Evaluates the rule at the requested nodes and again with every interval
// halved; throws "oracle not converged" when the two differ by more than
// convergence_tol. Returns the finer value.
double grid_log_evidence(const BayesianProblem& problem, const QuadratureOracle& oracle = {});

struct BenchmarkModel {
  std::string name;
  BayesianProblem problem;
  double reference_log_evidence = 0.0;
  std::string reference_method;  // "closed_form" or "grid"
};

struct Benchmark {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<BenchmarkModel> models;
};

const std::vector<std::string>& benchmark_names();

// Throws std::invalid_argument("unknown benchmark: ...") for other names.
Benchmark make_benchmark(std::string_view name, std::uint64_t seed);

// Pieces of the benchmarks, exposed for tests.
std::vector<double> example_one_dataset(std::uint64_t seed);
ConjugateGaussianProblem example_one_problem(std::uint64_t seed);

struct HighDimGaussian {
  std::vector<double> observations;  // one per dimension
  double noise_sigma = 2.0;
};
HighDimGaussian highdim_gaussian_data(std::uint64_t seed, std::size_t dimension = 100);
// Per-dimension log evidences; the benchmark reference is their sum.
std::vector<double> highdim_log_evidence_terms(const HighDimGaussian& h);

struct RegressionData {
  std::vector<double> x;
  std::vector<double> y;
  double noise_sigma = 0.05;
  double coef_prior_sigma = 5.0;
};
RegressionData polynomial_regression_data(std::uint64_t seed);
// Legendre polynomial P_k(x) by the three-term recurrence.
double legendre(std::size_t k, double x);
// Exact log evidence of the degree-m Legendre model, y ~ N(0, s^2 I + t^2 Phi Phi^T).
double regression_exact_log_evidence(const RegressionData& data, std::size_t degree);
BayesianProblem make_regression_problem(const RegressionData& data, std::size_t degree);

}  // namespace lla
