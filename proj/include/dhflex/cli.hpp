#pragma once

// Command-line front end: argument/config handling, the five subcommands
// (synth, validate, run, sweep, rank) and the report writers. Kept in a
// header so the test suite can drive the real argv entry point in-process.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dhflex/core.hpp"
#include "dhflex/errors.hpp"
#include "dhflex/ingest.hpp"
#include "dhflex/metrics.hpp"
#include "dhflex/selection.hpp"
#include "dhflex/strategies.hpp"
#include "dhflex/synthgen.hpp"

namespace dhflex::cli {

/// Bad flag values, bad config keys, bad scenario tokens. Exit code 1.
struct UsageError : Error {
  using Error::Error;
};

/// Input data failed validation. Exit code 2.
struct InputRejected : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Option state shared by all subcommands
// ---------------------------------------------------------------------------

struct ToolOptions {
  std::string command;

  std::string meter_csv;  // input CSV paths ...
  std::string meta_csv;
  bool use_synth = false;  // ... or generate the input on the fly
  std::uint64_t seed = 42;
  int days = 365;

  std::string out_dir = "out";
  std::string report_path;  // validate: optional JSON report

  double rho = 977.0;      // kg/m^3
  double cp = 0.001163;    // kWh/(kg K)
  double eta_pump = 0.7;
  double lambda = 1.84;    // measured pressure-loss exponent

  double alpha = 0.2;  // used by bare "ls" tokens
  double beta = 0.1;   // used by bare "fl" tokens

  std::optional<std::vector<int>> include;  // nullopt = every meter
  std::vector<std::string> scenarios;       // run; empty = default set
  std::vector<std::string> variants;        // rank; empty = default set
  std::string grid = "0:0.5:0.05";          // sweep parameter grid

  Constants constants() const {
    Constants c;
    c.rho = rho;
    c.cp = cp;
    c.eta_pump = eta_pump;
    c.pump_lambda_measured = lambda;
    return c;
  }

  std::vector<double> report_lambdas() const {
    if (lambda == 2.0) return {2.0};
    return {lambda, 2.0};
  }
};

inline const std::vector<std::string>& default_scenarios() {
  static const std::vector<std::string> v = {"original", "fl10", "fl20", "tl",
                                             "ls10",     "ls20", "tl+ls20"};
  return v;
}

inline const std::vector<std::string>& default_variants() {
  static const std::vector<std::string> v = {"ls10", "ls20", "fl10", "fl20", "tl"};
  return v;
}

// ---------------------------------------------------------------------------
// Small parsers
// ---------------------------------------------------------------------------

namespace detail_cli {

inline std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  return b == std::string_view::npos ? std::string{} : std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& v, const std::string& what) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw UsageError(what + ": expected a number, got '" + v + "'");
  }
}

inline long long to_int(const std::string& v, const std::string& what) {
  try {
    std::size_t pos = 0;
    long long n = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw UsageError(what + ": expected an integer, got '" + v + "'");
  }
}

inline bool to_bool(const std::string& v, const std::string& what) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw UsageError(what + ": expected a boolean, got '" + v + "'");
}

}  // namespace detail_cli

/// "3,7,12" -> {3, 7, 12}; "" -> {} (an explicitly empty set).
inline std::vector<int> parse_id_list(const std::string& text) {
  std::vector<int> ids;
  std::string cur;
  std::stringstream ss(text);
  while (std::getline(ss, cur, ',')) {
    cur = detail_cli::trim(cur);
    if (cur.empty()) continue;
    ids.push_back(static_cast<int>(detail_cli::to_int(cur, "meter id")));
  }
  return ids;
}

/// "lo:hi:step" -> inclusive range; a single number is a one-point grid.
inline std::vector<double> parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  std::stringstream ss(text);
  while (std::getline(ss, cur, ':')) parts.push_back(detail_cli::trim(cur));
  if (parts.size() == 1) return {detail_cli::to_double(parts[0], "grid")};
  if (parts.size() != 3) throw UsageError("grid: expected lo:hi:step, got '" + text + "'");
  double lo = detail_cli::to_double(parts[0], "grid lo");
  double hi = detail_cli::to_double(parts[1], "grid hi");
  double step = detail_cli::to_double(parts[2], "grid step");
  if (!(step > 0.0) || hi < lo) throw UsageError("grid: need step > 0 and hi >= lo");
  std::vector<double> values;
  for (int i = 0;; ++i) {
    double v = lo + step * i;
    if (v > hi + 1e-12) break;
    values.push_back(std::min(v, hi));
  }
  return values;
}

/// Scenario grammar: "original", or '+'-joined stage tokens applied left to
/// right. Tokens: "tl"; "ls<pct>" / "fl<pct>" with an integer percentage;
/// bare "ls" / "fl" take --alpha / --beta. Examples: "fl10", "tl+ls20".
inline std::vector<StageSpec> parse_scenario(const std::string& name,
                                             const std::vector<int>& included,
                                             const ToolOptions& o) {
  std::vector<std::string> tokens;
  std::string cur;
  std::stringstream ss(name);
  while (std::getline(ss, cur, '+')) tokens.push_back(detail_cli::trim(cur));
  if (tokens.empty()) throw UsageError("empty scenario name");

  std::vector<StageSpec> chain;
  for (const std::string& tok : tokens) {
    if (tok == "original") {
      if (tokens.size() > 1)
        throw UsageError("'original' cannot be combined with other stages");
      return {};
    }
    StageSpec stage;
    stage.included = included;
    std::string head = tok.substr(0, 2);
    std::string tail = tok.size() > 2 ? tok.substr(2) : "";
    auto pct = [&](double fallback) {
      if (tail.empty()) return fallback;
      long long p = detail_cli::to_int(tail, "scenario '" + tok + "'");
      if (p < 0 || p >= 100)
        throw UsageError("scenario '" + tok + "': percentage must be in [0, 99]");
      return static_cast<double>(p) / 100.0;
    };
    if (tok == "tl") {
      stage.kind = StrategyKind::ReturnTempLimit;
    } else if (head == "ls") {
      stage.kind = StrategyKind::LoadShift;
      stage.alpha = pct(o.alpha);
    } else if (head == "fl") {
      stage.kind = StrategyKind::FlowLimit;
      stage.beta = pct(o.beta);
    } else {
      throw UsageError("unknown scenario token '" + tok +
                       "' (expected original, tl, ls<pct> or fl<pct>)");
    }
    chain.push_back(std::move(stage));
  }
  return chain;
}

/// File-name-safe scenario label: '+' becomes '_'.
inline std::string scenario_filename(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (c == '+') c = '_';
  return out;
}

// ---------------------------------------------------------------------------
// Config file: flat "key = value" lines, '#' comments, keys are the long
// option names without the leading dashes. Command-line flags win; repeated
// keys (strategy, variant) build up a list.
// ---------------------------------------------------------------------------

inline std::vector<std::pair<std::string, std::string>> parse_config_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> kvs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string t = detail_cli::trim(line);
    if (t.empty()) continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError("config " + path + ":" + std::to_string(lineno) +
                       ": expected key = value");
    std::string key = detail_cli::trim(t.substr(0, eq));
    std::string value = detail_cli::trim(t.substr(eq + 1));
    if (key.empty())
      throw UsageError("config " + path + ":" + std::to_string(lineno) + ": empty key");
    kvs.emplace_back(std::move(key), std::move(value));
  }
  return kvs;
}

// ---------------------------------------------------------------------------
// File helpers and report writers
// ---------------------------------------------------------------------------

namespace detail_cli {

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace detail_cli

/// hour index + one descending-sorted aggregate-flow column per scenario.
inline std::string render_duration_curves_csv(
    const std::vector<std::string>& names,
    const std::vector<std::vector<double>>& curves) {
  std::string out = "hour";
  for (const auto& n : names) {
    out += ',';
    out += n;
  }
  out += '\n';
  std::size_t hours = curves.empty() ? 0 : curves[0].size();
  for (std::size_t t = 0; t < hours; ++t) {
    out += std::to_string(t);
    for (const auto& c : curves) {
      out += ',';
      detail::append_double(out, c[t]);
    }
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json stage_to_json(const StageDesc& d) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(d.kind);
  if (d.alpha) j["alpha"] = *d.alpha;
  if (d.beta) j["beta"] = *d.beta;
  return j;
}

inline nlohmann::ordered_json metrics_to_json(const std::string& name,
                                              const StrategyOutcome& outcome,
                                              const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["stages"] = nlohmann::ordered_json::array();
  for (const auto& d : outcome.chain) j["stages"].push_back(stage_to_json(d));
  j["included_meters"] = outcome.included;
  j["peak_original_m3h"] = m.peak_original;
  j["peak_m3h"] = m.peak_strategy;
  j["peak_reduction"] = m.peak_reduction;
  j["pumping_energy_ratio"] = nlohmann::ordered_json::array();
  for (auto [l, r] : m.pumping_ratio)
    j["pumping_energy_ratio"].push_back({{"lambda", l}, {"ratio", r}});
  j["weighted_return_temperature_c"] = m.weighted_return_temp;
  j["heat_deficit"] = m.heat_deficit;
  return j;
}

inline nlohmann::ordered_json validation_to_json(const ValidationReport& fill,
                                                 const ValidationReport& check) {
  nlohmann::ordered_json j;
  j["pass"] = check.pass;
  j["gaps_filled"] = fill.total_gaps();
  j["violations"] = check.total_violations();
  j["meters"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < check.meters.size(); ++i) {
    nlohmann::ordered_json m;
    m["meter_id"] = check.meters[i].meter_id;
    m["gaps_filled"] = i < fill.meters.size() ? fill.meters[i].gaps_filled : 0;
    m["violations"] = check.meters[i].violations;
    m["max_rel_error"] = check.meters[i].max_rel_error;
    j["meters"].push_back(std::move(m));
  }
  return j;
}

// ---------------------------------------------------------------------------
// Input loading shared by validate / run / sweep / rank
// ---------------------------------------------------------------------------

struct LoadedInput {
  Dataset dataset;
  ValidationReport fill;   // gap counts
  ValidationReport check;  // identity violations after filling
};

inline LoadedInput load_input(const ToolOptions& o) {
  Constants c = o.constants();
  LoadedInput in;
  if (o.use_synth) {
    GenSpec spec;
    spec.seed = o.seed;
    spec.days = o.days;
    in.dataset = generate_dataset(spec, c);
    in.fill.meters.resize(in.dataset.meters.size());
    in.check = validate(in.dataset, c);
  } else {
    if (o.meter_csv.empty() || o.meta_csv.empty())
      throw UsageError("provide --meter-csv and --meta-csv, or --synth");
    Dataset raw = parse_dataset(detail_cli::read_text_file(o.meter_csv),
                                detail_cli::read_text_file(o.meta_csv));
    auto [filled, fill_report] = fill_gaps(raw, c);
    in.dataset = std::move(filled);
    in.fill = std::move(fill_report);
    in.check = validate(in.dataset, c);
  }
  return in;
}

inline void require_valid(const LoadedInput& in) {
  if (!in.check.pass)
    throw InputRejected("input failed validation with " +
                        std::to_string(in.check.total_violations()) +
                        " violations; run the validate command for details");
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline int cmd_synth(const ToolOptions& o) {
  GenSpec spec;
  spec.seed = o.seed;
  spec.days = o.days;
  Dataset ds = generate_dataset(spec, o.constants());
  std::filesystem::path out(o.out_dir);
  std::filesystem::create_directories(out);
  detail_cli::write_text_file(out / "meters.csv", serialize_meter_csv(ds));
  detail_cli::write_text_file(out / "meta.csv", serialize_meta_csv(ds));
  std::cout << "synth: wrote " << ds.meters.size() << " meters x " << ds.hours
            << " hours to " << (out / "meters.csv").string() << " and "
            << (out / "meta.csv").string() << "\n";
  return 0;
}

inline int cmd_validate(const ToolOptions& o) {
  LoadedInput in = load_input(o);
  for (std::size_t i = 0; i < in.check.meters.size(); ++i) {
    const MeterCheck& m = in.check.meters[i];
    int gaps = i < in.fill.meters.size() ? in.fill.meters[i].gaps_filled : 0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "meter %4d: %5d gaps filled, %5d violations, max rel err %.4f",
                  m.meter_id, gaps, m.violations, m.max_rel_error);
    std::cout << buf << "\n";
  }
  std::cout << "validation: " << (in.check.pass ? "PASS" : "FAIL") << " ("
            << in.fill.total_gaps() << " gaps filled, " << in.check.total_violations()
            << " violations)\n";
  if (!o.report_path.empty())
    detail_cli::write_text_file(o.report_path,
                                validation_to_json(in.fill, in.check).dump(2) + "\n");
  return in.check.pass ? 0 : 2;
}

inline int cmd_run(const ToolOptions& o) {
  LoadedInput in = load_input(o);
  require_valid(in);
  const Dataset& ds = in.dataset;
  const Constants c = o.constants();
  std::vector<int> included = o.include ? *o.include : ds.meter_ids();

  std::vector<std::string> names = o.scenarios.empty() ? default_scenarios() : o.scenarios;
  std::vector<std::vector<StageSpec>> chains;
  for (const auto& n : names) chains.push_back(parse_scenario(n, included, o));

  std::filesystem::path out(o.out_dir);
  std::filesystem::create_directories(out);

  nlohmann::ordered_json root;
  root["hours"] = ds.hours;
  root["constants"] = {{"rho", c.rho},
                       {"cp", c.cp},
                       {"eta_pump", c.eta_pump},
                       {"pump_lambda", o.lambda}};
  root["scenarios"] = nlohmann::ordered_json::array();

  std::vector<std::vector<double>> curves;
  for (std::size_t i = 0; i < names.size(); ++i) {
    StrategyOutcome outcome = compose(ds, chains[i], c);
    MetricsReport m = compute_metrics(ds, outcome.dataset, o.report_lambdas());
    root["scenarios"].push_back(metrics_to_json(names[i], outcome, m));
    if (!chains[i].empty())
      detail_cli::write_text_file(
          out / ("altered_" + scenario_filename(names[i]) + ".csv"),
          serialize_meter_csv(outcome.dataset));
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "%-12s peak %9.3f m3/h  reduction %7.3f %%  heat deficit %7.4f %%",
                  names[i].c_str(), m.peak_strategy, 100.0 * m.peak_reduction,
                  100.0 * m.heat_deficit);
    std::cout << buf << "\n";
    curves.push_back(std::move(m.duration_curve));
  }

  detail_cli::write_text_file(out / "duration_curves.csv",
                              render_duration_curves_csv(names, curves));
  detail_cli::write_text_file(out / "metrics.json", root.dump(2) + "\n");
  return 0;
}

inline int cmd_sweep(const ToolOptions& o) {
  LoadedInput in = load_input(o);
  require_valid(in);
  const Dataset& ds = in.dataset;
  const Constants c = o.constants();
  std::vector<int> included = o.include ? *o.include : ds.meter_ids();
  std::vector<double> grid = parse_grid(o.grid);

  std::string csv = "strategy,parameter,peak_reduction,heat_deficit\n";
  std::vector<double> agg0 = aggregate_flow(ds);
  auto add_row = [&](const char* tag, double param, const Dataset& altered) {
    csv += tag;
    csv += ',';
    detail::append_double(csv, param);
    csv += ',';
    detail::append_double(csv, peak_reduction(agg0, aggregate_flow(altered)));
    csv += ',';
    detail::append_double(csv, heat_deficit(ds, altered));
    csv += '\n';
  };
  for (double a : grid)
    add_row("ls", a, apply_load_shifting(ds, a, included, c).dataset);
  for (double b : grid) add_row("fl", b, limit_flow_rate(ds, b, included, c).dataset);

  std::filesystem::path out(o.out_dir);
  std::filesystem::create_directories(out);
  detail_cli::write_text_file(out / "sweep.csv", csv);
  std::cout << "sweep: wrote " << 2 * grid.size() << " rows to "
            << (out / "sweep.csv").string() << "\n";
  return 0;
}

inline int cmd_rank(const ToolOptions& o) {
  LoadedInput in = load_input(o);
  require_valid(in);
  const Dataset& ds = in.dataset;
  const Constants c = o.constants();
  std::vector<std::string> names = o.variants.empty() ? default_variants() : o.variants;

  std::vector<GreedyCurve> curves;
  for (const auto& name : names) {
    std::vector<StageSpec> chain = parse_scenario(name, ds.meter_ids(), o);
    if (chain.size() != 1)
      throw UsageError("rank variant '" + name + "' must be a single strategy");
    StrategyConfig cfg;
    cfg.kind = chain[0].kind;
    cfg.alpha = chain[0].alpha;
    cfg.beta = chain[0].beta;
    curves.push_back(greedy_rank(ds, cfg, c));
  }

  std::size_t n = ds.meters.size();
  std::string inc_csv = "rank", ret_csv = "rank";
  for (const auto& name : names) {
    inc_csv += ',' + name + "_meter_id," + name + "_peak_reduction";
    ret_csv += ',' + name + "_meter_id," + name + "_weighted_return_c";
  }
  inc_csv += '\n';
  ret_csv += '\n';
  for (std::size_t k = 0; k < n; ++k) {
    inc_csv += std::to_string(k + 1);
    ret_csv += std::to_string(k + 1);
    for (const auto& curve : curves) {
      inc_csv += ',' + std::to_string(curve.order[k]) + ',';
      detail::append_double(inc_csv, curve.reduction[k]);
      ret_csv += ',' + std::to_string(curve.order[k]) + ',';
      detail::append_double(ret_csv, curve.weighted_return_temp[k]);
    }
    inc_csv += '\n';
    ret_csv += '\n';
  }

  std::filesystem::path out(o.out_dir);
  std::filesystem::create_directories(out);
  detail_cli::write_text_file(out / "included_meters.csv", inc_csv);
  detail_cli::write_text_file(out / "return_temperatures.csv", ret_csv);
  for (std::size_t v = 0; v < names.size(); ++v) {
    std::cout << names[v] << ": first picks";
    for (std::size_t k = 0; k < std::min<std::size_t>(3, n); ++k)
      std::cout << " " << curves[v].order[k];
    std::cout << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// argv entry point
// ---------------------------------------------------------------------------

namespace detail_cli {

/// Per-subcommand record of which config key maps to which option and how a
/// config value is applied. CLI wins: a key is skipped when its option was
/// given on the command line.
struct Binder {
  std::map<std::string, CLI::Option*> options;
  std::map<std::string, std::function<void(const std::string&)>> setters;

  void bind(CLI::Option* opt, const std::string& key,
            std::function<void(const std::string&)> set) {
    options[key] = opt;
    setters[key] = std::move(set);
  }
};

}  // namespace detail_cli

inline int main_impl(int argc, const char* const* argv) {
  ToolOptions o;
  std::string config_path;
  std::string include_str;
  bool include_from_config = false;

  CLI::App app{"District-heating peak-flow reduction toolkit"};
  app.require_subcommand(1);

  std::map<std::string, detail_cli::Binder> binders;
  std::set<std::string> all_keys;

  auto bind = [&](detail_cli::Binder& b, CLI::Option* opt, const std::string& key,
                  std::function<void(const std::string&)> set) {
    all_keys.insert(key);
    b.bind(opt, key, std::move(set));
  };

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path,
                    "key = value config file; command-line flags win");
  };
  auto add_out = [&](CLI::App* cmd, detail_cli::Binder& b) {
    bind(b, cmd->add_option("--out", o.out_dir, "output directory (default: out)"),
         "out", [&o](const std::string& v) { o.out_dir = v; });
  };
  auto add_constants = [&](CLI::App* cmd, detail_cli::Binder& b) {
    bind(b, cmd->add_option("--rho", o.rho, "water density, kg/m^3"), "rho",
         [&o](const std::string& v) { o.rho = detail_cli::to_double(v, "rho"); });
    bind(b, cmd->add_option("--cp", o.cp, "specific heat, kWh/(kg K)"), "cp",
         [&o](const std::string& v) { o.cp = detail_cli::to_double(v, "cp"); });
    bind(b, cmd->add_option("--eta-pump", o.eta_pump, "pump efficiency"), "eta-pump",
         [&o](const std::string& v) { o.eta_pump = detail_cli::to_double(v, "eta-pump"); });
    bind(b, cmd->add_option("--lambda", o.lambda, "pressure-loss exponent"), "lambda",
         [&o](const std::string& v) { o.lambda = detail_cli::to_double(v, "lambda"); });
  };
  auto add_synth_shape = [&](CLI::App* cmd, detail_cli::Binder& b) {
    bind(b, cmd->add_option("--seed", o.seed, "generator seed"), "seed",
         [&o](const std::string& v) {
           o.seed = static_cast<std::uint64_t>(detail_cli::to_int(v, "seed"));
         });
    bind(b, cmd->add_option("--days", o.days, "generated horizon in days"), "days",
         [&o](const std::string& v) {
           o.days = static_cast<int>(detail_cli::to_int(v, "days"));
         });
  };
  auto add_input = [&](CLI::App* cmd, detail_cli::Binder& b) {
    bind(b, cmd->add_option("--meter-csv", o.meter_csv, "hourly readings CSV"),
         "meter-csv", [&o](const std::string& v) { o.meter_csv = v; });
    bind(b, cmd->add_option("--meta-csv", o.meta_csv, "meter metadata CSV"), "meta-csv",
         [&o](const std::string& v) { o.meta_csv = v; });
    bind(b, cmd->add_flag("--synth", o.use_synth, "use the built-in synthetic dataset"),
         "synth",
         [&o](const std::string& v) { o.use_synth = detail_cli::to_bool(v, "synth"); });
    add_synth_shape(cmd, b);
  };
  auto add_include = [&](CLI::App* cmd, detail_cli::Binder& b) {
    bind(b,
         cmd->add_option("--include", include_str,
                         "comma-separated meter ids a strategy may alter; "
                         "empty string = none (default: all)"),
         "include", [&include_str, &include_from_config](const std::string& v) {
           include_str = v;
           include_from_config = true;
         });
  };
  auto add_shift_params = [&](CLI::App* cmd, detail_cli::Binder& b) {
    bind(b, cmd->add_option("--alpha", o.alpha, "shift bound for bare 'ls' tokens"),
         "alpha",
         [&o](const std::string& v) { o.alpha = detail_cli::to_double(v, "alpha"); });
    bind(b, cmd->add_option("--beta", o.beta, "flow cut for bare 'fl' tokens"), "beta",
         [&o](const std::string& v) { o.beta = detail_cli::to_double(v, "beta"); });
  };

  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic dataset");
  {
    detail_cli::Binder& b = binders["synth"];
    add_config(synth);
    add_out(synth, b);
    add_constants(synth, b);
    add_synth_shape(synth, b);
  }

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "gap-fill and check input data");
  {
    detail_cli::Binder& b = binders["validate"];
    add_config(validate_cmd);
    add_input(validate_cmd, b);
    add_constants(validate_cmd, b);
    bind(b, validate_cmd->add_option("--report", o.report_path, "JSON report path"),
         "report", [&o](const std::string& v) { o.report_path = v; });
  }

  CLI::App* run = app.add_subcommand("run", "apply strategy scenarios and report");
  {
    detail_cli::Binder& b = binders["run"];
    add_config(run);
    add_input(run, b);
    add_constants(run, b);
    add_out(run, b);
    add_include(run, b);
    add_shift_params(run, b);
    bind(b,
         run->add_option("--strategy", o.scenarios,
                         "scenario chain, repeatable (default: original fl10 fl20 "
                         "tl ls10 ls20 tl+ls20)"),
         "strategy", [&o](const std::string& v) { o.scenarios.push_back(v); });
  }

  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep for ls and fl");
  {
    detail_cli::Binder& b = binders["sweep"];
    add_config(sweep);
    add_input(sweep, b);
    add_constants(sweep, b);
    add_out(sweep, b);
    add_include(sweep, b);
    bind(b, sweep->add_option("--grid", o.grid, "parameter grid lo:hi:step"), "grid",
         [&o](const std::string& v) { o.grid = v; });
  }

  CLI::App* rank = app.add_subcommand("rank", "greedy consumer ranking per variant");
  {
    detail_cli::Binder& b = binders["rank"];
    add_config(rank);
    add_input(rank, b);
    add_constants(rank, b);
    add_out(rank, b);
    add_shift_params(rank, b);
    bind(b,
         rank->add_option("--variant", o.variants,
                          "single-strategy variant, repeatable (default: ls10 ls20 "
                          "fl10 fl20 tl)"),
         "variant", [&o](const std::string& v) { o.variants.push_back(v); });
  }

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    o.command = sub->get_name();
    detail_cli::Binder& binder = binders[o.command];

    if (!config_path.empty()) {
      for (const auto& [key, value] : parse_config_file(config_path)) {
        auto setter = binder.setters.find(key);
        if (setter == binder.setters.end()) {
          if (all_keys.count(key)) continue;  // belongs to another subcommand
          throw UsageError("config: unknown key '" + key + "'");
        }
        CLI::Option* opt = binder.options.at(key);
        if (opt->count() > 0) continue;  // command line wins
        setter->second(value);
      }
    }

    CLI::Option* inc_opt = binder.options.count("include") ? binder.options.at("include")
                                                           : nullptr;
    bool include_given = (inc_opt && inc_opt->count() > 0) || include_from_config;
    if (include_given) o.include = parse_id_list(include_str);

    if (o.command == "synth") return cmd_synth(o);
    if (o.command == "validate") return cmd_validate(o);
    if (o.command == "run") return cmd_run(o);
    if (o.command == "sweep") return cmd_sweep(o);
    if (o.command == "rank") return cmd_rank(o);
    throw UsageError("unknown command '" + o.command + "'");
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InputRejected& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    bool data_problem = dynamic_cast<const ParseError*>(&e) ||
                        dynamic_cast<const DuplicateRow*>(&e) ||
                        dynamic_cast<const BadHorizon*>(&e) ||
                        dynamic_cast<const MissingMeta*>(&e) ||
                        dynamic_cast<const UnfillableSeries*>(&e) ||
                        dynamic_cast<const BadSpec*>(&e) ||
                        dynamic_cast<const DegenerateInput*>(&e);
    std::cerr << "error: " << e.what() << "\n";
    return data_problem ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace dhflex::cli
