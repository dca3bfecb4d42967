#include "lla/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "lla/models.hpp"

namespace lla::cli {

ConfigError::ConfigError(const std::string& source, std::size_t line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Parser {
  std::string source;
  std::size_t line = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(source, line, msg); }

  template <typename T>
  T integer(std::string_view v) const {
    T out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
      fail("expected a nonnegative integer, got '" + std::string(v) + "'");
    }
    return out;
  }

  double real(std::string_view v) const {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
      fail("expected a finite number, got '" + std::string(v) + "'");
    }
    return out;
  }

  bool boolean(std::string_view v) const {
    if (v == "true") return true;
    if (v == "false") return false;
    fail("expected true or false, got '" + std::string(v) + "'");
  }

  std::vector<std::string_view> items(std::string_view v) const {
    std::vector<std::string_view> out;
    while (true) {
      const auto comma = v.find(',');
      const auto item = trim(v.substr(0, comma));
      if (item.empty()) fail("empty list entry");
      out.push_back(item);
      if (comma == std::string_view::npos) break;
      v.remove_prefix(comma + 1);
    }
    return out;
  }

  std::vector<double> reals(std::string_view v) const {
    std::vector<double> out;
    for (auto item : items(v)) out.push_back(real(item));
    return out;
  }

  template <typename T>
  std::vector<T> integers(std::string_view v) const {
    std::vector<T> out;
    for (auto item : items(v)) out.push_back(integer<T>(item));
    return out;
  }
};

using Handler = std::function<void(ExperimentConfig&, const Parser&, std::string_view)>;

// Level and stopping overrides are collected first and applied to the
// chosen estimator once the whole file is read.
struct Overrides {
  std::map<std::string, std::pair<std::string, std::size_t>> levels;
  std::map<std::string, std::pair<std::string, std::size_t>> stopping;
};

const std::map<std::string, std::map<std::string, Handler>>& handlers() {
  static const std::map<std::string, std::map<std::string, Handler>> table = {
      {"",
       {
           {"benchmark", [](auto& c, auto&, auto v) { c.benchmark = std::string(v); }},
           {"model", [](auto& c, auto&, auto v) { c.model = std::string(v); }},
           {"data_seed", [](auto& c, auto& p, auto v) { c.data_seed = p.template integer<std::uint64_t>(v); }},
           {"vary_data", [](auto& c, auto& p, auto v) { c.vary_data = p.boolean(v); }},
           {"estimator", [](auto& c, auto& p, auto v) {
              if (std::find(estimator_names().begin(), estimator_names().end(), v) ==
                  estimator_names().end()) {
                p.fail("unknown estimator '" + std::string(v) + "'");
              }
              c.estimator = std::string(v);
            }},
           {"seed", [](auto& c, auto& p, auto v) { c.seed = p.template integer<std::uint64_t>(v); }},
           {"replications", [](auto& c, auto& p, auto v) {
              c.replications = p.template integer<std::size_t>(v);
              if (c.replications < 1) p.fail("replications must be at least 1");
            }},
           {"workers", [](auto& c, auto& p, auto v) {
              c.workers = p.template integer<unsigned>(v);
              if (c.workers < 1) p.fail("workers must be at least 1");
            }},
           {"out_dir", [](auto& c, auto&, auto v) { c.out_dir = std::string(v); }},
           {"budgets", [](auto& c, auto& p, auto v) { c.budgets = p.template integers<std::uint64_t>(v); }},
       }},
      {"mc",
       {
           {"n_samples", [](auto& c, auto& p, auto v) { c.mc_samples = p.template integer<std::size_t>(v); }},
       }},
      {"nested",
       {
           {"n_live", [](auto& c, auto& p, auto v) { c.nested.n_live = p.template integer<std::size_t>(v); }},
           {"proposal_stddev", [](auto& c, auto& p, auto v) { c.nested.kernel.proposal_stddev = p.reals(v); }},
           {"steps_per_sample", [](auto& c, auto& p, auto v) {
              c.nested.kernel.steps_per_sample = p.template integer<std::size_t>(v);
            }},
           {"component_wise", [](auto& c, auto& p, auto v) { c.nested.kernel.component_wise = p.boolean(v); }},
       }},
      {"lla_is",
       {
           {"n_initial", [](auto& c, auto& p, auto v) { c.is.n_initial = p.template integer<std::size_t>(v); }},
           {"ess_threshold_fraction", [](auto& c, auto& p, auto v) { c.is.ess_threshold_fraction = p.real(v); }},
           {"stddev_multiplier", [](auto& c, auto& p, auto v) { c.is.stddev_multiplier = p.real(v); }},
           {"fixed_stddev", [](auto& c, auto& p, auto v) { c.is.fixed_stddev = p.reals(v); }},
       }},
      {"lla_ss",
       {
           {"per_dim_counts", [](auto& c, auto& p, auto v) {
              c.ss.per_dim_counts = p.template integers<std::size_t>(v);
            }},
           {"n_per_iteration", [](auto& c, auto& p, auto v) {
              c.ss.n_per_iteration = p.template integer<std::size_t>(v);
            }},
           {"max_strata", [](auto& c, auto& p, auto v) { c.ss.max_strata = p.template integer<std::size_t>(v); }},
       }},
      {"lla_mcmc",
       {
           {"n_samples", [](auto& c, auto& p, auto v) { c.mcmc.n_samples = p.template integer<std::size_t>(v); }},
           {"n_replace", [](auto& c, auto& p, auto v) { c.mcmc.n_replace = p.template integer<std::size_t>(v); }},
           {"use_fraction_schedule", [](auto& c, auto& p, auto v) {
              c.mcmc.use_fraction_schedule = p.boolean(v);
            }},
           {"proposal_stddev", [](auto& c, auto& p, auto v) { c.mcmc.kernel.proposal_stddev = p.reals(v); }},
           {"steps_per_sample", [](auto& c, auto& p, auto v) {
              c.mcmc.kernel.steps_per_sample = p.template integer<std::size_t>(v);
            }},
           {"component_wise", [](auto& c, auto& p, auto v) { c.mcmc.kernel.component_wise = p.boolean(v); }},
       }},
  };
  return table;
}

const std::set<std::string> kLevelKeys{"offset", "slope", "cap", "escalation_factor",
                                       "escalation_cap", "max_escalations"};
const std::set<std::string> kStoppingKeys{"delta_evidence_tol", "chi_tol", "max_iterations",
                                          "max_evals"};

LevelPolicy* level_policy_of(ExperimentConfig& c) {
  if (c.estimator == "lla_is") return &c.is.level_policy;
  if (c.estimator == "lla_ss") return &c.ss.level_policy;
  if (c.estimator == "lla_mcmc") return &c.mcmc.level_policy;
  return nullptr;
}

StoppingPolicy* stopping_of(ExperimentConfig& c) {
  if (c.estimator == "lla_is") return &c.is.stopping;
  if (c.estimator == "lla_ss") return &c.ss.stopping;
  if (c.estimator == "lla_mcmc") return &c.mcmc.stopping;
  if (c.estimator == "nested") return &c.nested.stopping;
  return nullptr;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
  ExperimentConfig cfg;
  Parser p{source, 0};
  std::string section;
  std::map<std::string, std::size_t> section_lines;
  std::set<std::pair<std::string, std::string>> seen;
  Overrides ov;
  bool have_seed = false;

  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++p.line;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') p.fail("unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!handlers().count(section) && section != "levels" && section != "stopping") {
        p.fail("unknown section [" + section + "]");
      }
      if (section_lines.count(section)) p.fail("duplicate section [" + section + "]");
      section_lines[section] = p.line;
      cfg.lines["[" + section + "]"] = p.line;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) p.fail("expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) p.fail("missing key before '='");
    if (value.empty()) p.fail("missing value for '" + key + "'");
    if (!seen.insert({section, key}).second) p.fail("duplicate key '" + key + "'");
    cfg.lines[section.empty() ? key : section + "." + key] = p.line;

    if (section == "levels" || section == "stopping") {
      const auto& keys = section == "levels" ? kLevelKeys : kStoppingKeys;
      if (!keys.count(key)) p.fail("unknown key '" + key + "' in [" + section + "]");
      (section == "levels" ? ov.levels : ov.stopping)[key] = {std::string(value), p.line};
      continue;
    }
    const auto& table = handlers().at(section);
    const auto h = table.find(key);
    if (h == table.end()) {
      p.fail("unknown key '" + key + "'" + (section.empty() ? "" : " in [" + section + "]"));
    }
    h->second(cfg, p, value);
    if (section.empty() && key == "seed") have_seed = true;
  }
  const std::size_t end_line = p.line + 1;

  auto require = [&](bool ok, const std::string& key) {
    if (!ok) throw ConfigError(source, end_line, "missing required key '" + key + "'");
  };
  require(!cfg.benchmark.empty(), "benchmark");
  require(!cfg.estimator.empty(), "estimator");
  require(have_seed, "seed");
  const auto& names = benchmark_names();
  if (std::find(names.begin(), names.end(), cfg.benchmark) == names.end()) {
    throw ConfigError(source, cfg.line_of("benchmark"), "unknown benchmark '" + cfg.benchmark + "'");
  }

  for (const auto& [name, at] : section_lines) {
    if (name == "levels" || name == "stopping" || name == cfg.estimator) continue;
    throw ConfigError(source, at,
                      "section [" + name + "] does not match estimator '" + cfg.estimator + "'");
  }

  if (!ov.levels.empty()) {
    LevelPolicy* lp = level_policy_of(cfg);
    if (!lp) {
      throw ConfigError(source, section_lines["levels"],
                        "estimator '" + cfg.estimator + "' has no level schedule");
    }
    for (const auto& [key, vl] : ov.levels) {
      p.line = vl.second;
      if (key == "offset") lp->offset = p.real(vl.first);
      if (key == "slope") lp->slope = p.real(vl.first);
      if (key == "cap") lp->cap = p.real(vl.first);
      if (key == "escalation_factor") lp->escalation_factor = p.real(vl.first);
      if (key == "escalation_cap") lp->escalation_cap = p.real(vl.first);
      if (key == "max_escalations") lp->max_escalations = p.integer<int>(vl.first);
    }
  }
  if (!ov.stopping.empty()) {
    StoppingPolicy* sp = stopping_of(cfg);
    if (!sp) {
      throw ConfigError(source, section_lines["stopping"],
                        "estimator '" + cfg.estimator + "' has no stopping policy");
    }
    for (const auto& [key, vl] : ov.stopping) {
      p.line = vl.second;
      if (key == "delta_evidence_tol") sp->delta_evidence_tol = p.real(vl.first);
      if (key == "chi_tol") sp->chi_tol = p.real(vl.first);
      if (key == "max_iterations") sp->max_iterations = p.integer<std::size_t>(vl.first);
      if (key == "max_evals") sp->max_evals = p.integer<std::uint64_t>(vl.first);
    }
  }
  return cfg;
}

std::size_t ExperimentConfig::line_of(const std::string& key) const {
  const auto it = lines.find(key);
  if (it != lines.end()) return it->second;
  const auto est = lines.find("estimator");
  return est != lines.end() ? est->second : 1;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

void validate_for_dimension(const ExperimentConfig& c, std::size_t dimension,
                            const std::string& source) {
  try {
    if (c.estimator == "mc" && c.mc_samples < 1) throw std::invalid_argument("mc n_samples must be positive");
    if (c.estimator == "nested") c.nested.validate(dimension);
    if (c.estimator == "lla_is") c.is.validate(dimension);
    if (c.estimator == "lla_ss") c.ss.validate(dimension);
    if (c.estimator == "lla_mcmc") c.mcmc.validate(dimension);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source, c.line_of("[" + c.estimator + "]"), e.what());
  }
}

}  // namespace lla::cli
