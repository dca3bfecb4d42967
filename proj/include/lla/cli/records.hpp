#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lla/core.hpp"

namespace lla::cli {

// One estimator run, as written to <model>/rep<k>.json.
struct RunRecord {
  std::string benchmark;
  std::uint64_t data_seed = 0;
  std::string model;
  std::string estimator;
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  double log_evidence = kNegInf;
  double reference_log_evidence = 0.0;
  std::string reference_method;
  double relative_error = 0.0;  // |log E - ref| / |ref|, or |log E - ref| when ref = 0
  std::optional<double> log_evidence_stderr;
  std::uint64_t total_evals = 0;
  std::size_t iterations = 0;
  std::string termination_reason;
  double max_log_likelihood = kNegInf;
  std::vector<double> posterior_mean;
  std::vector<double> posterior_variance;
  std::vector<std::string> warnings;

  bool operator==(const RunRecord&) const = default;
};

double relative_error(double estimate, double reference);

std::string write_summary_json(const RunRecord& r);
RunRecord parse_summary_json(std::string_view text);

struct TraceRow {
  std::size_t iteration = 0;
  double log_lambda = kNegInf;
  double chi = 1.0;
  double log_increment = kNegInf;
  std::uint64_t cumulative_evals = 0;

  bool operator==(const TraceRow&) const = default;
};

std::vector<TraceRow> trace_rows(const LevelTrace& trace);
// Header iteration,log_lambda,chi,log_increment,cumulative_evals; reals at
// 17 significant digits, infinities as inf / -inf.
std::string write_trace_csv(const std::vector<TraceRow>& rows);
std::vector<TraceRow> parse_trace_csv(std::string_view text);

// One row of summary.csv. Per-run rows leave cov_pct empty; the aggregate row
// (replication "aggregate") averages over runs.
struct SummaryRow {
  std::string model;
  std::string replication;
  std::string seed;
  double log_evidence = 0.0;
  double reference_log_evidence = 0.0;
  double error_pct = 0.0;
  std::optional<double> cov_pct;
  double total_evals = 0.0;
  std::string iterations;
  std::string termination_reason;

  bool operator==(const SummaryRow&) const = default;
};

struct Aggregate {
  double mean_log_evidence = 0.0;
  double mean_reference = 0.0;
  // Mean over runs of 100 * relative error.
  double error_pct = 0.0;
  // 100 * sd / mean of log E / log E_ref across runs (of log E when the
  // reference is 0).
  double cov_pct = 0.0;
  double mean_evals = 0.0;
};

Aggregate aggregate(const std::vector<RunRecord>& runs);
SummaryRow summary_row(const RunRecord& r);
SummaryRow aggregate_row(const std::string& model, const Aggregate& a);
std::string write_summary_csv(const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> parse_summary_csv(std::string_view text);

struct ConvergenceRow {
  std::uint64_t budget = 0;
  double mean_abs_error_pct = 0.0;
  double cov_pct = 0.0;
  double mean_evals = 0.0;

  bool operator==(const ConvergenceRow&) const = default;
};

std::string write_convergence_csv(const std::vector<ConvergenceRow>& rows);
std::vector<ConvergenceRow> parse_convergence_csv(std::string_view text);

// Fixed-format real used by every table: %.17g, with inf spelled out.
std::string format_real(double x);
double parse_real(std::string_view s);

}  // namespace lla::cli
