#include "lla/cli/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "lla/baselines.hpp"
#include "lla/models.hpp"
#include "lla/parallel.hpp"
#include "lla/selection.hpp"

namespace lla::cli {

namespace fs = std::filesystem;

void apply_overrides(ExperimentConfig& config, const RunOverrides& o) {
  if (o.out_dir) config.out_dir = *o.out_dir;
  if (o.seed) config.seed = *o.seed;
  if (o.replications) {
    if (*o.replications < 1) throw ConfigError("--replications-override", 0, "must be at least 1");
    config.replications = *o.replications;
  }
  if (o.workers) config.workers = std::max(1u, *o.workers);
}

std::uint64_t replication_seed(std::uint64_t seed, std::size_t replication) { return seed + replication; }

namespace {

EvidenceEstimate run_estimator(const ExperimentConfig& c, const BayesianProblem& problem,
                               std::uint64_t seed, std::uint64_t budget, const Executor& ex) {
  if (c.estimator == "mc") return run_mc(problem, budget ? budget : c.mc_samples, seed, ex);
  if (c.estimator == "nested") {
    NestedConfig n = c.nested;
    if (budget) n.stopping.max_evals = budget;
    return run_nested(problem, n, seed);
  }
  if (c.estimator == "lla_is") {
    ISConfig is = c.is;
    if (budget) is.stopping.max_evals = budget;
    return run_lla_is(problem, is, seed, ex);
  }
  if (c.estimator == "lla_ss") {
    SSConfig ss = c.ss;
    if (budget) ss.stopping.max_evals = budget;
    return run_lla_ss(problem, ss, seed, ex);
  }
  MCMCConfig m = c.mcmc;
  if (budget) m.stopping.max_evals = budget;
  return run_lla_mcmc(problem, m, seed, ex);
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Loads, overrides and checks a config; prints the error and returns nullopt
// when it is unusable.
std::optional<ExperimentConfig> prepare(const std::string& path, const RunOverrides& o, std::ostream& err) {
  try {
    ExperimentConfig c = load_config(path);
    apply_overrides(c, o);
    return c;
  } catch (const ConfigError& e) {
    err << "lla: " << e.what() << "\n";
    return std::nullopt;
  }
}

std::vector<std::vector<RunRecord>> by_model(const std::vector<RunRecord>& records) {
  std::vector<std::vector<RunRecord>> groups;
  for (const auto& r : records) {
    if (groups.empty() || groups.back().front().model != r.model) groups.emplace_back();
    groups.back().push_back(r);
  }
  return groups;
}

}  // namespace

ExperimentRun run_experiment(const ExperimentConfig& config, std::uint64_t budget,
                             const std::string& source) {
  // One benchmark instance per distinct data seed.
  std::map<std::uint64_t, Benchmark> benchmarks;
  auto data_seed_of = [&](std::size_t r) { return config.vary_data ? config.data_seed + r : config.data_seed; };
  for (std::size_t r = 0; r < config.replications; ++r) {
    const auto ds = data_seed_of(r);
    if (!benchmarks.count(ds)) benchmarks.emplace(ds, make_benchmark(config.benchmark, ds));
  }

  std::vector<std::size_t> model_indices;
  const auto& first = benchmarks.begin()->second;
  for (std::size_t m = 0; m < first.models.size(); ++m) {
    if (!config.model || first.models[m].name == *config.model) model_indices.push_back(m);
  }
  if (model_indices.empty()) {
    throw ConfigError(source, config.line_of("model"),
                      "benchmark '" + config.benchmark + "' has no model '" + *config.model + "'");
  }
  for (std::size_t m : model_indices) validate_for_dimension(config, first.models[m].problem.dimension(), source);

  const std::size_t reps = config.replications;
  const std::size_t n_tasks = model_indices.size() * reps;
  ExperimentRun run;
  run.records.resize(n_tasks);
  run.traces.resize(n_tasks);
  run.wall_seconds.resize(n_tasks);

  // Several tasks share the workers one each; a single task gets them all.
  const Executor outer(n_tasks > 1 ? config.workers : 1);
  const Executor inner(n_tasks > 1 ? 1 : config.workers);
  outer.parallel_for(n_tasks, [&](std::size_t t) {
    const std::size_t r = t % reps;
    const auto& bench = benchmarks.at(data_seed_of(r));
    const auto& model = bench.models[model_indices[t / reps]];
    const std::uint64_t seed = replication_seed(config.seed, r);

    const auto start = std::chrono::steady_clock::now();
    EvidenceEstimate est = run_estimator(config, model.problem, seed, budget, inner);
    run.wall_seconds[t] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    RunRecord& rec = run.records[t];
    rec.benchmark = config.benchmark;
    rec.data_seed = bench.seed;
    rec.model = model.name;
    rec.estimator = config.estimator;
    rec.replication = r;
    rec.seed = seed;
    rec.log_evidence = est.log_evidence;
    rec.reference_log_evidence = model.reference_log_evidence;
    rec.reference_method = model.reference_method;
    rec.relative_error = relative_error(est.log_evidence, model.reference_log_evidence);
    rec.log_evidence_stderr = est.log_evidence_stderr;
    rec.total_evals = est.total_evals;
    rec.iterations = est.trace.iterations();
    rec.termination_reason = std::string(to_string(est.termination_reason));
    rec.max_log_likelihood = est.max_log_likelihood;
    rec.posterior_mean = est.posterior_mean;
    rec.posterior_variance = est.posterior_variance;
    rec.warnings = est.warnings;
    run.traces[t] = std::move(est.trace);
  });
  return run;
}

int cmd_run(const std::string& config_path, const RunOverrides& o, std::ostream& out, std::ostream& err) {
  auto config = prepare(config_path, o, err);
  if (!config) return kExitUsage;

  ExperimentRun run;
  try {
    run = run_experiment(*config, 0, config_path);
  } catch (const ConfigError& e) {
    err << "lla: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "lla: estimator failed: " << e.what() << "\ntermination_reason: error\n";
    return kExitRuntime;
  }

  const fs::path dir(config->out_dir);
  std::vector<SummaryRow> rows;
  std::string timing = "model,replication,wall_seconds\n";
  for (std::size_t t = 0; t < run.records.size(); ++t) {
    const auto& rec = run.records[t];
    const fs::path base = dir / rec.model / ("rep" + std::to_string(rec.replication));
    write_file(base.string() + ".json", write_summary_json(rec));
    write_file(base.string() + "_trace.csv", write_trace_csv(trace_rows(run.traces[t])));
    timing += rec.model + ',' + std::to_string(rec.replication) + ',' + format_real(run.wall_seconds[t]) + '\n';
  }
  for (const auto& group : by_model(run.records)) {
    for (const auto& rec : group) rows.push_back(summary_row(rec));
    if (group.size() > 1) rows.push_back(aggregate_row(group.front().model, aggregate(group)));
  }
  const std::string summary = write_summary_csv(rows);
  write_file(dir / "summary.csv", summary);
  // Wall time is the one nondeterministic output, so it lives apart.
  write_file(dir / "timing.csv", timing);
  out << summary;
  return kExitOk;
}

int cmd_select(const std::vector<std::string>& summary_paths, const std::vector<double>& priors,
               const std::optional<std::string>& out_dir, std::ostream& out, std::ostream& err) {
  if (summary_paths.size() < 2) {
    err << "lla: select needs at least two run summaries\n";
    return kExitUsage;
  }
  std::vector<RunRecord> recs;
  try {
    for (const auto& p : summary_paths) recs.push_back(parse_summary_json(read_file(p)));
  } catch (const std::exception& e) {
    err << "lla: " << e.what() << "\n";
    return kExitUsage;
  }
  for (const auto& r : recs) {
    if (r.benchmark != recs.front().benchmark || r.data_seed != recs.front().data_seed) {
      err << "lla: summaries come from different benchmarks or datasets (" << recs.front().benchmark
          << " seed " << recs.front().data_seed << " vs " << r.benchmark << " seed " << r.data_seed << ")\n";
      return kExitUsage;
    }
  }

  ModelSet ms;
  for (const auto& r : recs) {
    ms.names.push_back(r.model);
    ms.log_evidences.push_back(r.log_evidence);
  }
  ms.prior_probs = priors;
  ModelSelectionResult res;
  try {
    res = select_models(ms);
  } catch (const std::invalid_argument& e) {
    err << "lla: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "lla: " << e.what() << "\n";
    return kExitRuntime;
  }

  std::string csv = "model,log_evidence,prior_probability,posterior_probability\n";
  for (std::size_t k = 0; k < res.names.size(); ++k) {
    csv += res.names[k] + ',' + format_real(res.log_evidences[k]) + ',' + format_real(res.prior_probs[k]) +
           ',' + format_real(res.posterior_probs[k]) + '\n';
  }
  out << std::left << std::setw(24) << "model" << std::setw(16) << "log evidence" << std::setw(12) << "prior"
      << "posterior\n";
  for (std::size_t k = 0; k < res.names.size(); ++k) {
    out << std::left << std::setw(24) << res.names[k] << std::setw(16) << std::fixed << std::setprecision(4)
        << res.log_evidences[k] << std::setw(12) << res.prior_probs[k] << res.posterior_probs[k] << "\n";
  }
  if (out_dir) write_file(fs::path(*out_dir) / "selection.csv", csv);
  return kExitOk;
}

int cmd_convergence(const std::string& config_path, const std::vector<std::uint64_t>& budgets,
                    const RunOverrides& o, std::ostream& out, std::ostream& err) {
  auto config = prepare(config_path, o, err);
  if (!config) return kExitUsage;
  const auto& list = budgets.empty() ? config->budgets : budgets;
  if (list.empty()) {
    err << "lla: convergence needs a nonempty budget list\n";
    return kExitUsage;
  }
  for (auto b : list) {
    if (b == 0) {
      err << "lla: budgets must be positive\n";
      return kExitUsage;
    }
  }

  std::vector<ConvergenceRow> rows;
  try {
    for (auto b : list) {
      const auto run = run_experiment(*config, b, config_path);
      if (by_model(run.records).size() != 1) {
        throw ConfigError(config_path, config->line_of("benchmark"),
                          "convergence needs a single model; set 'model'");
      }
      const Aggregate a = aggregate(run.records);
      rows.push_back({b, a.error_pct, a.cov_pct, a.mean_evals});
    }
  } catch (const ConfigError& e) {
    err << "lla: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "lla: estimator failed: " << e.what() << "\ntermination_reason: error\n";
    return kExitRuntime;
  }
  const std::string csv = write_convergence_csv(rows);
  write_file(fs::path(config->out_dir) / "convergence.csv", csv);
  out << csv;
  return kExitOk;
}

}  // namespace lla::cli
