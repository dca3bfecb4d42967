#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "doctest.h"
#include "lla/cli/commands.hpp"
#include "lla/models.hpp"
#include "test_stats.hpp"

using namespace lla;
using namespace lla::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lla_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

int config_error_line(const std::string& text) {
  try {
    parse_config(text, "t.cfg");
  } catch (const ConfigError& e) {
    return static_cast<int>(e.line());
  }
  return -1;
}

const std::string kSmallSS =
    "benchmark = conjugate_gaussian\n"
    "estimator = lla_ss\n"
    "seed = 5\n"
    "[lla_ss]\n"
    "per_dim_counts = 5\n"
    "n_per_iteration = 200\n"
    "[stopping]\n"
    "max_evals = 4000\n";

}  // namespace

TEST_CASE("config parsing examples") {
  const auto c = parse_config(
      "# comment\n"
      "benchmark = conjugate_gaussian   # trailing\n"
      "estimator = lla_mcmc\n"
      "seed = 18446744073709551615\n"
      "replications = 3\n"
      "\n"
      "[lla_mcmc]\n"
      "n_samples = 200\n"
      "proposal_stddev = 0.1, 0.2\n"
      "component_wise = true\n"
      "[levels]\n"
      "cap = 0.5\n"
      "[stopping]\n"
      "max_evals = 777\n");
  CHECK(c.benchmark == "conjugate_gaussian");
  CHECK(c.seed == 18446744073709551615ull);
  CHECK(c.replications == 3);
  CHECK(c.mcmc.n_samples == 200);
  CHECK(c.mcmc.kernel.proposal_stddev == std::vector<double>{0.1, 0.2});
  CHECK(c.mcmc.kernel.component_wise == true);
  CHECK(c.mcmc.level_policy.cap == 0.5);
  CHECK(c.mcmc.stopping.max_evals == 777);
  CHECK(c.line_of("[lla_mcmc]") == 7);
  CHECK(c.line_of("lla_mcmc.n_samples") == 8);
}

TEST_CASE("config errors carry the offending line") {
  CHECK(config_error_line("benchmark = conjugate_gaussian\nseed = 1\n") == 3);
  CHECK(config_error_line("benchmark = conjugate_gaussian\nestimator = lla_ss\n\n") == 4);
  CHECK(config_error_line("seed = 1\nseed = 2\n") == 2);
  CHECK(config_error_line("seed = 1\nestimator = lla_ss\n[wat]\n") == 3);
  CHECK(config_error_line("seed = x1\n") == 1);
  CHECK(config_error_line("seed = 1\nestimator = lla_ss\nbogus = 3\n") == 3);
  CHECK(config_error_line("estimator = lla_ss\nbenchmark = conjugate_gaussian\nseed = 1\n[lla_is]\n"
                          "n_initial = 10\n") == 4);
  CHECK(config_error_line("estimator = magic\n") == 1);
  CHECK(config_error_line("seed = 1\nestimator = mc\nbenchmark = nope\n") == 3);
  CHECK(config_error_line("seed = 1\nestimator = mc\nbenchmark = uniform_linear\n[levels]\nslope = 0.1\n") == 4);
  CHECK(config_error_line("benchmark = conjugate_gaussian\nestimator = lla_ss\nseed = 1\n[stopping]\n"
                          "chi_tol = abc\n") == 5);
  try {
    parse_config("seed = 1\n", "x.cfg");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("x.cfg:2: ", 0) == 0);
  }
}

TEST_CASE("dimension checks point at the estimator section") {
  auto c = parse_config(
      "benchmark = conjugate_gaussian\nestimator = lla_ss\nseed = 1\n\n[lla_ss]\nper_dim_counts = 5, 5\n");
  try {
    validate_for_dimension(c, 1, "c.cfg");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 5);
  }
}

TEST_CASE("run with a missing estimator exits 2 with a line number") {
  const auto dir = scratch("missing");
  const auto cfg = write_text(dir / "bad.cfg", "benchmark = conjugate_gaussian\nseed = 1\n");
  std::ostringstream out, err;
  CHECK(cmd_run(cfg.string(), {}, out, err) == kExitUsage);
  CHECK(err.str().find("bad.cfg:3: missing required key 'estimator'") != std::string::npos);
}

TEST_CASE("settings that do not fit the benchmark exit 2") {
  const auto dir = scratch("misfit");
  const auto cfg = write_text(dir / "m.cfg",
                              "benchmark = uniform_linear\nestimator = lla_is\nseed = 1\n[lla_is]\n"
                              "fixed_stddev = 0.1, 0.1\n");
  std::ostringstream out, err;
  CHECK(cmd_run(cfg.string(), {}, out, err) == kExitUsage);
  CHECK(err.str().find("m.cfg:4:") != std::string::npos);

  const auto cfg2 = write_text(dir / "n.cfg",
                               "benchmark = polynomial_regression_set\nmodel = degree_9\nestimator = mc\nseed = 1\n");
  CHECK(cmd_run(cfg2.string(), {}, out, err) == kExitUsage);
  CHECK(err.str().find("n.cfg:2:") != std::string::npos);
}

TEST_CASE("estimator failure exits 1 with a termination reason") {
  const auto dir = scratch("fail");
  const auto cfg = write_text(dir / "f.cfg",
                              "benchmark = bimodal_2d\nestimator = lla_ss\nseed = 1\nout_dir = " +
                                  (dir / "out").string() + "\n[lla_ss]\nper_dim_counts = 5, 5\nmax_strata = 10\n");
  std::ostringstream out, err;
  CHECK(cmd_run(cfg.string(), {}, out, err) == kExitRuntime);
  CHECK(err.str().find("stratification infeasible") != std::string::npos);
  CHECK(err.str().find("termination_reason") != std::string::npos);
}

TEST_CASE("real formatting round trips") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 600) - 300);
    CHECK(parse_real(format_real(x)) == x);
  }
  CHECK(parse_real(format_real(kNegInf)) == kNegInf);
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK_THROWS(parse_real("1.0x"));
}

TEST_CASE("run record JSON round trips") {
  RunRecord r;
  r.benchmark = "conjugate_gaussian";
  r.data_seed = 3;
  r.model = "conjugate_gaussian";
  r.estimator = "lla_ss";
  r.replication = 4;
  r.seed = 18446744073709551615ull;
  r.log_evidence = -69.83541234567891;
  r.reference_log_evidence = -69.8354;
  r.reference_method = "closed_form";
  r.relative_error = 1.7e-7;
  r.total_evals = 10500;
  r.iterations = 37;
  r.termination_reason = "delta_evidence";
  r.max_log_likelihood = -60.1;
  r.posterior_mean = {1.234};
  r.posterior_variance = {0.0024};
  r.warnings = {"something, with a comma"};
  CHECK(parse_summary_json(write_summary_json(r)) == r);

  r.log_evidence = kNegInf;
  r.max_log_likelihood = kNegInf;
  r.log_evidence_stderr = 0.25;
  r.posterior_mean.clear();
  r.posterior_variance.clear();
  CHECK(parse_summary_json(write_summary_json(r)) == r);
  CHECK(write_summary_json(r).find("\"-inf\"") != std::string::npos);
}

TEST_CASE("trace CSV round trips") {
  auto est = run_lla_ss(make_conjugate_problem(example_one_problem(2)),
                        [] {
                          SSConfig c;
                          c.per_dim_counts = {5};
                          c.level_policy = {0.0, 0.025, 0.9};
                          return c;
                        }(),
                        9);
  const auto rows = trace_rows(est.trace);
  const auto text = write_trace_csv(rows);
  CHECK(text.rfind("iteration,log_lambda,chi,log_increment,cumulative_evals\n", 0) == 0);
  CHECK(text.find("\n0,-inf,1,-inf,0\n") != std::string::npos);
  CHECK(parse_trace_csv(text) == rows);
  CHECK(write_trace_csv(parse_trace_csv(text)) == text);
  CHECK_THROWS(parse_trace_csv("iteration,chi\n"));
}

TEST_CASE("summary and convergence CSV round trip") {
  std::vector<SummaryRow> rows{{"m", "0", "7", -1.5, -1.25, 20.0, std::nullopt, 900.0, "12", "chi_floor"},
                               {"m", "aggregate", "", -1.5, -1.25, 20.0, 0.5, 900.0, "", ""}};
  CHECK(parse_summary_csv(write_summary_csv(rows)) == rows);
  std::vector<ConvergenceRow> conv{{2500, 0.5, 0.1, 2480.5}, {5000, 0.25, 0.05, 4990.0}};
  CHECK(parse_convergence_csv(write_convergence_csv(conv)) == conv);
}

TEST_CASE("ten replications give ten rows and an aggregate row") {
  const auto dir = scratch("reps");
  const auto cfg = write_text(dir / "r.cfg", kSmallSS + "");
  RunOverrides o;
  o.out_dir = (dir / "out").string();
  o.replications = 10;
  o.workers = 4;
  std::ostringstream out, err;
  REQUIRE(cmd_run(cfg.string(), o, out, err) == kExitOk);
  const auto rows = parse_summary_csv(slurp(dir / "out" / "summary.csv"));
  REQUIRE(rows.size() == 11);
  std::vector<double> errs, ratios;
  for (std::size_t k = 0; k < 10; ++k) {
    CHECK(rows[k].replication == std::to_string(k));
    const auto rec = parse_summary_json(slurp(dir / "out" / "conjugate_gaussian" / ("rep" + std::to_string(k) + ".json")));
    CHECK(rec.seed == 5 + k);
    CHECK(rec.log_evidence == rows[k].log_evidence);
    CHECK(fs::exists(dir / "out" / "conjugate_gaussian" / ("rep" + std::to_string(k) + "_trace.csv")));
    errs.push_back(100.0 * std::abs(rec.log_evidence - rec.reference_log_evidence) /
                   std::abs(rec.reference_log_evidence));
    ratios.push_back(rec.log_evidence / rec.reference_log_evidence);
  }
  const auto& agg = rows[10];
  CHECK(agg.replication == "aggregate");
  CHECK(agg.error_pct == doctest::Approx(test::mean_of(errs)).epsilon(1e-12));
  REQUIRE(agg.cov_pct);
  CHECK(*agg.cov_pct == doctest::Approx(100.0 * test::sd_of(ratios) / test::mean_of(ratios)).epsilon(1e-9));
  CHECK(*agg.cov_pct > 0.0);
}

TEST_CASE("outputs are byte-identical at 1 and 8 workers") {
  const auto dir = scratch("det");
  const auto cfg = write_text(dir / "d.cfg", kSmallSS + "");
  for (unsigned w : {1u, 8u}) {
    for (std::size_t reps : {std::size_t{1}, std::size_t{3}}) {
      RunOverrides o;
      o.out_dir = (dir / ("w" + std::to_string(w) + "_r" + std::to_string(reps))).string();
      o.workers = w;
      o.replications = reps;
      std::ostringstream out, err;
      REQUIRE(cmd_run(cfg.string(), o, out, err) == kExitOk);
    }
  }
  for (const char* reps : {"_r1", "_r3"}) {
    const auto a = dir / (std::string("w1") + reps);
    const auto b = dir / (std::string("w8") + reps);
    std::size_t compared = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (!e.is_regular_file() || e.path().filename() == "timing.csv") continue;
      const auto rel = fs::relative(e.path(), a);
      CHECK(slurp(e.path()) == slurp(b / rel));
      ++compared;
    }
    CHECK(compared >= 3);
  }
}

TEST_CASE("select over regression models") {
  const auto dir = scratch("select");
  const auto data = polynomial_regression_data(1);
  std::vector<std::string> paths;
  for (std::size_t d = 1; d <= 3; ++d) {
    RunRecord r;
    r.benchmark = "polynomial_regression_set";
    r.data_seed = 1;
    r.model = "degree_" + std::to_string(d);
    r.estimator = "mc";
    r.log_evidence = regression_exact_log_evidence(data, d);
    r.reference_log_evidence = r.log_evidence;
    r.termination_reason = "max_evals";
    paths.push_back(write_text(dir / (r.model + ".json"), write_summary_json(r)).string());
  }
  std::ostringstream out, err;
  REQUIRE(cmd_select(paths, {}, dir.string(), out, err) == kExitOk);
  CHECK(out.str().find("degree_2") != std::string::npos);
  const auto csv = slurp(dir / "selection.csv");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "model,log_evidence,prior_probability,posterior_probability");
  std::vector<double> post;
  while (std::getline(in, line)) post.push_back(parse_real(line.substr(line.rfind(',') + 1)));
  REQUIRE(post.size() == 3);
  CHECK(post[1] > 0.95);

  std::ostringstream o1, e1;
  CHECK(cmd_select({paths[0]}, {}, std::nullopt, o1, e1) == kExitUsage);
  CHECK(cmd_select(paths, {0.5, 0.5}, std::nullopt, o1, e1) == kExitUsage);

  auto other = parse_summary_json(slurp(paths[2]));
  other.benchmark = "conjugate_gaussian";
  const auto odd = write_text(dir / "odd.json", write_summary_json(other)).string();
  std::ostringstream o2, e2;
  CHECK(cmd_select({paths[0], odd}, {}, std::nullopt, o2, e2) == kExitUsage);
  CHECK(e2.str().find("different benchmarks") != std::string::npos);
  other.benchmark = "polynomial_regression_set";
  other.data_seed = 2;
  write_text(dir / "odd.json", write_summary_json(other));
  CHECK(cmd_select({paths[0], odd}, {}, std::nullopt, o2, e2) == kExitUsage);
}

TEST_CASE("select with equal evidences gives a uniform row") {
  const auto dir = scratch("uniform_select");
  std::vector<std::string> paths;
  for (const char* m : {"a", "b", "c", "d"}) {
    RunRecord r;
    r.benchmark = "polynomial_regression_set";
    r.model = m;
    r.log_evidence = -12.5;
    paths.push_back(write_text(dir / (std::string(m) + ".json"), write_summary_json(r)).string());
  }
  std::ostringstream out, err;
  REQUIRE(cmd_select(paths, {}, dir.string(), out, err) == kExitOk);
  std::istringstream in(slurp(dir / "selection.csv"));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) CHECK(parse_real(line.substr(line.rfind(',') + 1)) == doctest::Approx(0.25));
}

TEST_CASE("convergence budget list handling") {
  const auto dir = scratch("conv");
  const auto cfg = write_text(dir / "c.cfg", kSmallSS + "");
  RunOverrides o;
  o.out_dir = (dir / "out").string();
  std::ostringstream out, err;
  CHECK(cmd_convergence(cfg.string(), {}, o, out, err) == kExitUsage);
  CHECK(err.str().find("budget") != std::string::npos);
  REQUIRE(cmd_convergence(cfg.string(), {3000}, o, out, err) == kExitOk);
  const auto rows = parse_convergence_csv(slurp(dir / "out" / "convergence.csv"));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].budget == 3000);
  CHECK(rows[0].mean_evals <= 3000.0);
}

TEST_CASE("convergence error falls with the budget on Example I") {
  RunOverrides o;
  o.out_dir = scratch("conv_ex1").string();
  std::ostringstream out, err;
  REQUIRE(cmd_convergence(std::string(LLA_CONFIG_DIR) + "/example1_lla_ss.cfg", {2500, 5000, 10000}, o, out,
                          err) == kExitOk);
  const auto rows = parse_convergence_csv(slurp(fs::path(*o.out_dir) / "convergence.csv"));
  REQUIRE(rows.size() == 3);
  int inversions = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) inversions += rows[k].mean_abs_error_pct > rows[k - 1].mean_abs_error_pct;
  CHECK(inversions <= 1);
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].mean_evals >= rows[k - 1].mean_evals);
}

TEST_CASE("shipped configs parse") {
  for (const auto& e : fs::directory_iterator(LLA_CONFIG_DIR)) {
    CAPTURE(e.path().string());
    CHECK_NOTHROW(load_config(e.path().string()));
  }
}

TEST_CASE("command-line binary exit codes") {
  const auto dir = scratch("binary");
  const std::string bin = LLA_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(status(bin) == 2);
  CHECK(status(bin + " run") == 2);
  CHECK(status(bin + " run --config " + (dir / "nope.cfg").string()) == 2);
  const auto cfg = write_text(dir / "ok.cfg", kSmallSS);
  CHECK(status(bin + " run --config " + cfg.string() + " --out-dir " + (dir / "out").string() +
               " --seed-override 9 --replications-override 2") == 0);
  const auto rec = parse_summary_json(slurp(dir / "out" / "conjugate_gaussian" / "rep1.json"));
  CHECK(rec.seed == 10);
  CHECK(status(bin + " select " + (dir / "out" / "conjugate_gaussian" / "rep0.json").string()) == 2);
  CHECK(status(bin + " convergence --config " + cfg.string() + " --out-dir " + (dir / "c").string() +
               " --budgets 2000,3000") == 0);
  CHECK(parse_convergence_csv(slurp(dir / "c" / "convergence.csv")).size() == 2);
}
