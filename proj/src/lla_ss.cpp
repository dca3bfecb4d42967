#include "lla/lla_ss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "internal.hpp"

namespace lla {

std::vector<std::size_t> StrataGrid::multi_index(std::size_t stratum) const {
  std::vector<std::size_t> idx(per_dim_counts.size());
  for (std::size_t k = 0; k < per_dim_counts.size(); ++k) {
    idx[k] = stratum % per_dim_counts[k];
    stratum /= per_dim_counts[k];
  }
  return idx;
}

std::pair<double, double> StrataGrid::unit_bounds(std::size_t stratum, std::size_t k) const {
  const auto idx = multi_index(stratum);
  const double n = static_cast<double>(per_dim_counts[k]);
  return {static_cast<double>(idx[k]) / n, static_cast<double>(idx[k] + 1) / n};
}

void SSConfig::validate(std::size_t dimension) const {
  if (per_dim_counts.size() != dimension) {
    throw std::invalid_argument("per_dim_counts length must equal the problem dimension");
  }
  for (auto c : per_dim_counts) {
    if (c < 1) throw std::invalid_argument("per_dim_counts entries must be at least 1");
  }
  if (n_per_iteration < 1) throw std::invalid_argument("n_per_iteration must be positive");
  level_policy.validate();
  stopping.validate();
}

StrataGrid build_strata(const BayesianProblem& problem,
                        const std::vector<std::size_t>& per_dim_counts, std::size_t max_strata) {
  if (per_dim_counts.size() != problem.dimension()) {
    throw std::invalid_argument("per_dim_counts length must equal the problem dimension");
  }
  StrataGrid grid;
  grid.per_dim_counts = per_dim_counts;
  std::size_t total = 1;
  for (auto c : per_dim_counts) {
    if (c < 1) throw std::invalid_argument("per_dim_counts entries must be at least 1");
    if (total > max_strata / c) throw EvidenceError("stratification infeasible in this dimension");
    total *= c;
  }
  if (total > max_strata) throw EvidenceError("stratification infeasible in this dimension");
  grid.n_strata = total;
  grid.pool_theta.resize(total);
  grid.pool_log_l.resize(total);
  grid.pool_max.assign(total, kNegInf);
  grid.active.resize(total);
  for (std::size_t s = 0; s < total; ++s) grid.active[s] = s;
  return grid;
}

namespace {

ParameterVector draw_in_stratum(const BayesianProblem& problem, const StrataGrid& grid,
                                const std::vector<std::size_t>& idx, Engine& rng) {
  ParameterVector theta(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double n = static_cast<double>(grid.per_dim_counts[k]);
    // u in (s_k/n, (s_k+1)/n); the open draw keeps it off both ends.
    const double u = (static_cast<double>(idx[k]) + uniform_open(rng)) / n;
    theta[k] = problem.priors[k]->inverse_cdf(u);
  }
  return theta;
}

}  // namespace

std::vector<ParameterVector> sample_stratum(const BayesianProblem& problem, const StrataGrid& grid,
                                            std::size_t stratum, std::size_t n, Engine& rng) {
  const auto idx = grid.multi_index(stratum);
  std::vector<ParameterVector> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) out.push_back(draw_in_stratum(problem, grid, idx, rng));
  return out;
}

double chi_ss(const StrataGrid& grid, double log_lambda) {
  double chi = 0.0;
  for (auto s : grid.active) {
    const auto& pool = grid.pool_log_l[s];
    if (pool.empty()) throw EvidenceError("stratum never sampled");
    const auto hits = std::count_if(pool.begin(), pool.end(),
                                    [&](double l) { return exceeds_level(l, log_lambda); });
    chi += grid.mass(s) * static_cast<double>(hits) / static_cast<double>(pool.size());
  }
  return std::clamp(chi, 0.0, 1.0);
}

double var_chi_ss(const StrataGrid& grid, double log_lambda, double chi_hat) {
  std::size_t n_pooled = 0;
  double spread = 0.0;
  double active_mass = 0.0;
  for (auto s : grid.active) {
    const auto& pool = grid.pool_log_l[s];
    if (pool.empty()) throw EvidenceError("stratum never sampled");
    n_pooled += pool.size();
    const auto hits = std::count_if(pool.begin(), pool.end(),
                                    [&](double l) { return exceeds_level(l, log_lambda); });
    const double chi_s = static_cast<double>(hits) / static_cast<double>(pool.size());
    spread += grid.mass(s) * (chi_s - chi_hat) * (chi_s - chi_hat);
    active_mass += grid.mass(s);
  }
  if (n_pooled == 0) return 0.0;
  spread += std::max(0.0, 1.0 - active_mass) * chi_hat * chi_hat;
  const double n = static_cast<double>(n_pooled);
  return std::max(0.0, chi_hat * (1.0 - chi_hat) / n - spread / n);
}

std::vector<std::size_t> allocate_samples(std::size_t n_total, std::size_t n_active) {
  std::vector<std::size_t> alloc(n_active, 1);
  if (n_active == 0) return alloc;
  const std::size_t per = (n_total + n_active - 1) / n_active;
  std::size_t remaining = n_total;
  for (auto& a : alloc) {
    a = std::clamp<std::size_t>(remaining, 1, per);
    remaining -= std::min(a, remaining);
  }
  return alloc;
}

EvidenceEstimate run_lla_ss(const BayesianProblem& problem, const SSConfig& config,
                            std::uint64_t seed, const Executor& executor) {
  StrataGrid grid;
  return run_lla_ss(problem, config, seed, executor, grid);
}

EvidenceEstimate run_lla_ss(const BayesianProblem& problem, const SSConfig& config,
                            std::uint64_t seed, const Executor& executor, StrataGrid& grid_out) {
  problem.validate();
  config.validate(problem.dimension());
  const std::size_t d = problem.dimension();
  StrataGrid grid = build_strata(problem, config.per_dim_counts, config.max_strata);

  EvidenceEstimate est;
  est.trace.start(0);
  est.trace.chi_variance.push_back(0.0);
  est.trace.active_strata.push_back(grid.active.size());
  double chi = 1.0;
  double log_e = kNegInf;
  double lambda_prev = kNegInf;
  std::uint64_t evals = 0;

  for (std::size_t it = 1;; ++it) {
    const auto alloc = allocate_samples(config.n_per_iteration, grid.active.size());
    std::vector<std::size_t> offset(alloc.size() + 1, 0);
    for (std::size_t a = 0; a < alloc.size(); ++a) offset[a + 1] = offset[a] + alloc[a];
    const std::size_t n_new = offset.back();
    std::vector<ParameterVector> theta(n_new);
    std::vector<double> log_l(n_new);
    // One stream per (stratum, iteration); draws are cheap, evaluations are not.
    executor.parallel_for(alloc.size(), [&](std::size_t a) {
      const std::size_t s = grid.active[a];
      Engine rng = make_stream(seed, {detail::kTagSS, s, it});
      const auto idx = grid.multi_index(s);
      for (std::size_t j = offset[a]; j < offset[a + 1]; ++j) {
        theta[j] = draw_in_stratum(problem, grid, idx, rng);
      }
    });
    executor.parallel_for(n_new, [&](std::size_t j) {
      log_l[j] = detail::checked_log_likelihood(problem, theta[j]);
    });
    for (std::size_t a = 0; a < alloc.size(); ++a) {
      const std::size_t s = grid.active[a];
      for (std::size_t j = offset[a]; j < offset[a + 1]; ++j) {
        grid.pool_theta[s].push_back(std::move(theta[j]));
        grid.pool_log_l[s].push_back(log_l[j]);
        grid.pool_max[s] = std::max(grid.pool_max[s], log_l[j]);
        est.max_log_likelihood = std::max(est.max_log_likelihood, log_l[j]);
      }
    }
    evals += n_new;

    std::vector<double> candidates;
    for (auto s : grid.active) {
      for (double l : grid.pool_log_l[s]) {
        if (exceeds_level(l, lambda_prev)) candidates.push_back(l);
      }
    }
    if (candidates.empty()) {
      est.termination_reason = TerminationReason::degenerate_level;
      break;
    }
    const LevelSelection sel =
        select_level_unsorted(candidates, config.level_policy, it, lambda_prev);
    if (sel.degenerate) {
      est.termination_reason = TerminationReason::degenerate_level;
      break;
    }

    const double chi_hat = chi_ss(grid, sel.log_lambda);
    const double chi_var = var_chi_ss(grid, sel.log_lambda, chi_hat);
    const EvidenceUpdate upd = evidence_update(log_e, sel.log_lambda, chi, chi_hat);
    if (upd.clamped) {
      est.warnings.push_back("iteration " + std::to_string(it) +
                             ": chi estimate rose above the previous value and was clamped");
    }

    ShellAccumulator shell(d);
    for (auto s : grid.active) {
      const double w = grid.mass(s) / static_cast<double>(grid.pool_log_l[s].size());
      for (std::size_t j = 0; j < grid.pool_log_l[s].size(); ++j) {
        const double l = grid.pool_log_l[s][j];
        if (exceeds_level(l, lambda_prev) && !exceeds_level(l, sel.log_lambda)) {
          shell.add(grid.pool_theta[s][j], w);
        }
      }
    }

    std::vector<std::size_t> still_active;
    for (auto s : grid.active) {
      if (exceeds_level(grid.pool_max[s], sel.log_lambda)) {
        still_active.push_back(s);
      } else if (grid.pool_max[s] >= sel.log_lambda - 1.0) {
        est.warnings.push_back("iteration " + std::to_string(it) + ": stratum " +
                               std::to_string(s) +
                               " deactivated with its best sample within 1 log-unit of the level");
      }
    }
    grid.active = std::move(still_active);

    est.trace.push(sel.log_lambda, upd.chi, upd.log_increment, shell.mean(),
                   shell.second_moment(), evals);
    est.trace.chi_variance.push_back(chi_var);
    est.trace.active_strata.push_back(grid.active.size());
    log_e = upd.log_evidence;
    chi = upd.chi;
    lambda_prev = sel.log_lambda;

    if (grid.active.empty()) {
      est.termination_reason = TerminationReason::chi_floor;
      break;
    }
    const StopDecision stop = should_stop(est.trace, config.stopping, upd.log_increment);
    if (stop.stop) {
      est.termination_reason = stop.reason;
      break;
    }
  }

  finalize_estimate(est);
  est.total_evals = evals;
  grid_out = std::move(grid);
  return est;
}

}  // namespace lla
