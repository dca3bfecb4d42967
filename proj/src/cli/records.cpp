#include "lla/cli/records.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace lla::cli {

using nlohmann::json;

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_real(std::string_view s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double out = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return out;
}

double relative_error(double estimate, double reference) {
  const double diff = std::abs(estimate - reference);
  return reference == 0.0 ? diff : diff / std::abs(reference);
}

namespace {

// JSON has no infinities; non-finite reals travel as strings.
json real_json(double x) { return std::isfinite(x) ? json(x) : json(format_real(x)); }

double json_real(const json& j) {
  return j.is_string() ? parse_real(j.get<std::string>()) : j.get<double>();
}

json reals_json(const std::vector<double>& xs) {
  json a = json::array();
  for (double x : xs) a.push_back(real_json(x));
  return a;
}

std::vector<double> json_reals(const json& j) {
  std::vector<double> out;
  for (const auto& e : j) out.push_back(json_real(e));
  return out;
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  while (true) {
    const auto comma = line.find(',');
    out.emplace_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

// Rows of a CSV whose first line must equal header.
std::vector<std::vector<std::string>> read_table(std::string_view text, std::string_view header) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw std::invalid_argument("unexpected table header '" + line + "'");
  }
  const std::size_t width = split_line(header).size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != width) throw std::invalid_argument("malformed row '" + line + "'");
    rows.push_back(std::move(cells));
  }
  return rows;
}

template <typename T>
T parse_uint(const std::string& s) {
  T out{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("not an integer: '" + s + "'");
  }
  return out;
}

constexpr std::string_view kTraceHeader = "iteration,log_lambda,chi,log_increment,cumulative_evals";
constexpr std::string_view kSummaryHeader =
    "model,replication,seed,log_evidence,reference_log_evidence,error_pct,cov_pct,total_evals,"
    "iterations,termination_reason";
constexpr std::string_view kConvergenceHeader = "budget,mean_abs_error_pct,cov_pct,mean_evals";

}  // namespace

std::string write_summary_json(const RunRecord& r) {
  json j;
  j["benchmark"] = r.benchmark;
  j["data_seed"] = r.data_seed;
  j["model"] = r.model;
  j["estimator"] = r.estimator;
  j["replication"] = r.replication;
  j["seed"] = r.seed;
  j["log_evidence"] = real_json(r.log_evidence);
  j["reference_log_evidence"] = real_json(r.reference_log_evidence);
  j["reference_method"] = r.reference_method;
  j["relative_error"] = real_json(r.relative_error);
  j["log_evidence_stderr"] = r.log_evidence_stderr ? real_json(*r.log_evidence_stderr) : json(nullptr);
  j["total_evals"] = r.total_evals;
  j["iterations"] = r.iterations;
  j["termination_reason"] = r.termination_reason;
  j["max_log_likelihood"] = real_json(r.max_log_likelihood);
  j["posterior_mean"] = reals_json(r.posterior_mean);
  j["posterior_variance"] = reals_json(r.posterior_variance);
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

RunRecord parse_summary_json(std::string_view text) {
  const json j = json::parse(text);
  RunRecord r;
  r.benchmark = j.at("benchmark").get<std::string>();
  r.data_seed = j.at("data_seed").get<std::uint64_t>();
  r.model = j.at("model").get<std::string>();
  r.estimator = j.at("estimator").get<std::string>();
  r.replication = j.at("replication").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.log_evidence = json_real(j.at("log_evidence"));
  r.reference_log_evidence = json_real(j.at("reference_log_evidence"));
  r.reference_method = j.at("reference_method").get<std::string>();
  r.relative_error = json_real(j.at("relative_error"));
  if (!j.at("log_evidence_stderr").is_null()) r.log_evidence_stderr = json_real(j["log_evidence_stderr"]);
  r.total_evals = j.at("total_evals").get<std::uint64_t>();
  r.iterations = j.at("iterations").get<std::size_t>();
  r.termination_reason = j.at("termination_reason").get<std::string>();
  r.max_log_likelihood = json_real(j.at("max_log_likelihood"));
  r.posterior_mean = json_reals(j.at("posterior_mean"));
  r.posterior_variance = json_reals(j.at("posterior_variance"));
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::vector<TraceRow> trace_rows(const LevelTrace& t) {
  std::vector<TraceRow> rows(t.log_lambda.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = {i, t.log_lambda[i], t.chi[i], t.log_increments[i], t.n_evals[i]};
  }
  return rows;
}

std::string write_trace_csv(const std::vector<TraceRow>& rows) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.iteration) + ',' + format_real(r.log_lambda) + ',' + format_real(r.chi) +
           ',' + format_real(r.log_increment) + ',' + std::to_string(r.cumulative_evals) + '\n';
  }
  return out;
}

std::vector<TraceRow> parse_trace_csv(std::string_view text) {
  std::vector<TraceRow> rows;
  for (const auto& c : read_table(text, kTraceHeader)) {
    rows.push_back({parse_uint<std::size_t>(c[0]), parse_real(c[1]), parse_real(c[2]), parse_real(c[3]),
                    parse_uint<std::uint64_t>(c[4])});
  }
  return rows;
}

Aggregate aggregate(const std::vector<RunRecord>& runs) {
  if (runs.empty()) throw std::invalid_argument("no runs to aggregate");
  const double n = static_cast<double>(runs.size());
  Aggregate a;
  std::vector<double> ratios;
  for (const auto& r : runs) {
    a.mean_log_evidence += r.log_evidence / n;
    a.mean_reference += r.reference_log_evidence / n;
    a.error_pct += 100.0 * r.relative_error / n;
    a.mean_evals += static_cast<double>(r.total_evals) / n;
    ratios.push_back(r.reference_log_evidence == 0.0 ? r.log_evidence
                                                     : r.log_evidence / r.reference_log_evidence);
  }
  double mean = 0.0;
  for (double x : ratios) mean += x / n;
  double ss = 0.0;
  for (double x : ratios) ss += (x - mean) * (x - mean);
  const double sd = runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  a.cov_pct = 100.0 * sd / std::abs(mean);
  return a;
}

SummaryRow summary_row(const RunRecord& r) {
  return {r.model,
          std::to_string(r.replication),
          std::to_string(r.seed),
          r.log_evidence,
          r.reference_log_evidence,
          100.0 * r.relative_error,
          std::nullopt,
          static_cast<double>(r.total_evals),
          std::to_string(r.iterations),
          r.termination_reason};
}

SummaryRow aggregate_row(const std::string& model, const Aggregate& a) {
  return {model, "aggregate", "", a.mean_log_evidence, a.mean_reference, a.error_pct, a.cov_pct,
          a.mean_evals, "", ""};
}

std::string write_summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out(kSummaryHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.model + ',' + r.replication + ',' + r.seed + ',' + format_real(r.log_evidence) + ',' +
           format_real(r.reference_log_evidence) + ',' + format_real(r.error_pct) + ',' +
           (r.cov_pct ? format_real(*r.cov_pct) : "") + ',' + format_real(r.total_evals) + ',' +
           r.iterations + ',' + r.termination_reason + '\n';
  }
  return out;
}

std::vector<SummaryRow> parse_summary_csv(std::string_view text) {
  std::vector<SummaryRow> rows;
  for (const auto& c : read_table(text, kSummaryHeader)) {
    SummaryRow r{c[0], c[1], c[2], parse_real(c[3]), parse_real(c[4]), parse_real(c[5]),
                 std::nullopt, parse_real(c[7]), c[8], c[9]};
    if (!c[6].empty()) r.cov_pct = parse_real(c[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string write_convergence_csv(const std::vector<ConvergenceRow>& rows) {
  std::string out(kConvergenceHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.budget) + ',' + format_real(r.mean_abs_error_pct) + ',' +
           format_real(r.cov_pct) + ',' + format_real(r.mean_evals) + '\n';
  }
  return out;
}

std::vector<ConvergenceRow> parse_convergence_csv(std::string_view text) {
  std::vector<ConvergenceRow> rows;
  for (const auto& c : read_table(text, kConvergenceHeader)) {
    rows.push_back({parse_uint<std::uint64_t>(c[0]), parse_real(c[1]), parse_real(c[2]), parse_real(c[3])});
  }
  return rows;
}

}  // namespace lla::cli
