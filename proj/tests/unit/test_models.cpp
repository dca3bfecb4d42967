#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "lla/models.hpp"
#include "oracles.hpp"

using namespace lla;

TEST_CASE("single observation evidence") {
  ConjugateGaussianProblem p{{0.0}, 0.0, 1.0, 1.0};
  CHECK(conjugate_exact_log_evidence(p) == doctest::Approx(-1.265512).epsilon(1e-6));
  CHECK(conjugate_exact_log_evidence(p) == doctest::Approx(-0.5 * std::log(4.0 * std::numbers::pi)));
}

TEST_CASE("closed form agrees with the term-by-term formula") {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const auto p = example_one_problem(s);
    CHECK(conjugate_exact_log_evidence(p) ==
          doctest::Approx(test::literal_conjugate_log_evidence(p.data, p.mu0, p.sigma0, p.sigma))
              .epsilon(1e-12));
  }
}

TEST_CASE("evidence is translation invariant") {
  auto p = example_one_problem(3);
  const double base = conjugate_exact_log_evidence(p);
  for (double shift : {-3.0, 0.5, 10.0}) {
    auto q = p;
    for (double& x : q.data) x += shift;
    q.mu0 += shift;
    CHECK(std::abs(conjugate_exact_log_evidence(q) - base) <= 1e-10);
  }
}

TEST_CASE("data matching the prior mean never lowers the evidence") {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    auto p = example_one_problem(s);
    double mean = 0.0;
    for (double x : p.data) mean += x;
    mean /= static_cast<double>(p.data.size());
    auto q = p;
    for (double& x : q.data) x += p.mu0 - mean;
    CHECK(conjugate_exact_log_evidence(q) >= conjugate_exact_log_evidence(p));
  }
}

TEST_CASE("Example-I datasets land in the magnitude band") {
  for (std::uint64_t s = 1; s <= 100; ++s) {
    const double v = conjugate_exact_log_evidence(example_one_problem(s));
    CHECK(v >= -78.0);
    CHECK(v <= -62.0);
  }
  auto d = example_one_dataset(1);
  CHECK(d.size() == 100);
}

TEST_CASE("conjugate posterior") {
  auto p = example_one_problem(1);
  const double n = 100.0;
  double xbar = 0.0;
  for (double x : p.data) xbar += x / n;
  const double s02 = 0.0625, s2 = 0.25;
  auto post = conjugate_posterior(p);
  CHECK(post.mean[0] == doctest::Approx((s02 * n * xbar + s2 * 1.0) / (n * s02 + s2)));
  CHECK(post.variance[0] == doctest::Approx(s02 * s2 / (n * s02 + s2)));
}

TEST_CASE("likelihood of the conjugate problem matches the product of normals") {
  auto p = example_one_problem(2);
  auto prob = make_conjugate_problem(p);
  const double mu = 1.37;
  double direct = 0.0;
  for (double x : p.data) {
    direct += -0.5 * std::log(2.0 * std::numbers::pi * 0.25) - (x - mu) * (x - mu) / (2.0 * 0.25);
  }
  CHECK(prob.log_likelihood(std::vector<double>{mu}) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("grid oracle examples") {
  CHECK(std::abs(grid_log_evidence(test::uniform_linear_problem())) <= 1e-8);
  ConjugateGaussianProblem one{{0.0}, 0.0, 1.0, 1.0};
  CHECK(std::abs(grid_log_evidence(make_conjugate_problem(one)) -
                 conjugate_exact_log_evidence(one)) <= 1e-6);
  CHECK(std::abs(grid_log_evidence(test::constant_problem(-2.0, 1)) + 2.0) <= 1e-10);
  CHECK(std::abs(grid_log_evidence(test::constant_problem(-2.0, 2)) + 2.0) <= 1e-10);
}

TEST_CASE("grid oracle agrees with the closed form on Example-I datasets") {
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto p = example_one_problem(s);
    CHECK(std::abs(grid_log_evidence(make_conjugate_problem(p)) - conjugate_exact_log_evidence(p)) <=
          1e-6);
  }
}

TEST_CASE("grid oracle refuses an unresolved integrand") {
  BayesianProblem spike;
  spike.priors = {uniform_prior(0.0, 1.0)};
  spike.log_likelihood = [](std::span<const double> t) {
    return -0.5 * (t[0] - 0.3) * (t[0] - 0.3) / 1e-8;
  };
  CHECK_THROWS_WITH(grid_log_evidence(spike), "oracle not converged");
}

TEST_CASE("truncated benchmark reference against adaptive quadrature") {
  auto b = make_benchmark("truncated_gaussian_1d", 0);
  const auto& m = b.models[0];
  CHECK(m.reference_method == "grid");
  const double peak = m.problem.log_likelihood(std::vector<double>{1.38});
  const double z = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double t) {
        const std::vector<double> x{t};
        return std::exp(m.problem.log_prior(x) + m.problem.log_likelihood(x) - peak);
      },
      1.0, 1.5, 20, 1e-13);
  CHECK(std::abs(std::log(z) + peak - m.reference_log_evidence) <= 1e-6);
}

TEST_CASE("high-dimensional reference factorizes") {
  auto b = make_benchmark("highdim_gaussian_100", 1);
  const auto h = highdim_gaussian_data(1, 100);
  const auto terms = highdim_log_evidence_terms(h);
  REQUIRE(terms.size() == 100);
  double sum = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    sum += terms[k];
    ConjugateGaussianProblem one{{h.observations[k]}, 0.0, 1.0, h.noise_sigma};
    CHECK(terms[k] == doctest::Approx(conjugate_exact_log_evidence(one)).epsilon(1e-12));
  }
  CHECK(std::abs(b.models[0].reference_log_evidence - sum) <= 1e-10);
  CHECK(b.models[0].problem.dimension() == 100);
}

TEST_CASE("bimodal reference from the grid") {
  auto b = make_benchmark("bimodal_2d", 0);
  CHECK(b.models[0].reference_method == "grid");
  // Both components sit well inside the box, so the evidence is close to 1/100.
  CHECK(b.models[0].reference_log_evidence == doctest::Approx(std::log(0.01)).epsilon(1e-6));
}

TEST_CASE("regression set prefers the generating degree") {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    auto b = make_benchmark("polynomial_regression_set", s);
    REQUIRE(b.models.size() == 3);
    CHECK(b.models[1].reference_log_evidence > b.models[0].reference_log_evidence);
    CHECK(b.models[1].reference_log_evidence > b.models[2].reference_log_evidence);
  }
}

TEST_CASE("regression evidence matches the grid for the linear model") {
  // Degree 1 has two coefficients, within reach of the tensor grid.
  const auto data = polynomial_regression_data(2);
  auto prob = make_regression_problem(data, 1);
  QuadratureOracle o;
  o.nodes = {2001, 2001};
  o.bounds = {{-1.0, 1.5}, {-1.5, 0.5}};
  // Bounds cover the posterior, which is tight next to the prior scale 5.
  CHECK(std::abs(grid_log_evidence(prob, o) - regression_exact_log_evidence(data, 1)) <= 1e-4);
}

TEST_CASE("legendre recurrence") {
  for (double x : {-1.0, -0.3, 0.0, 0.8, 1.0}) {
    CHECK(legendre(0, x) == 1.0);
    CHECK(legendre(1, x) == x);
    CHECK(legendre(2, x) == doctest::Approx(0.5 * (3 * x * x - 1)));
    CHECK(legendre(3, x) == doctest::Approx(0.5 * (5 * x * x * x - 3 * x)));
  }
}

TEST_CASE("unknown benchmark") {
  CHECK_THROWS_WITH(make_benchmark("nope", 1), "unknown benchmark: nope");
  for (const auto& name : benchmark_names()) CHECK_NOTHROW(make_benchmark(name, 1));
}
