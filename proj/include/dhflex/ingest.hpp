#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dhflex/core.hpp"
#include "dhflex/errors.hpp"

namespace dhflex {

inline constexpr std::string_view kMeterCsvHeader =
    "meter_id,hour,flow_m3h,t_supply_c,t_return_c,heat_kw";
inline constexpr std::string_view kMetaCsvHeader =
    "meter_id,q_max_kw,q_mean_kw,t_rl_mean_c,t_rl_max_c,t_rl_limit_c,consumer_type";

/// Per-meter bookkeeping produced by gap filling and validation.
struct MeterCheck {
  int meter_id = 0;
  int gaps_filled = 0;
  int violations = 0;
  double max_rel_error = 0.0;
};

struct ValidationReport {
  std::vector<MeterCheck> meters;
  bool pass = true;

  int total_gaps() const {
    int n = 0;
    for (const auto& m : meters) n += m.gaps_filled;
    return n;
  }
  int total_violations() const {
    int n = 0;
    for (const auto& m : meters) n += m.violations;
    return n;
  }
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

/// Calls fn(line_number, line) for every line, tolerating CRLF endings and
/// skipping blank lines.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = nl == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, nl - pos);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) fn(lineno, line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

inline long long parse_int_field(std::string_view f, std::size_t line, const char* what) {
  long long v = 0;
  auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || p != f.data() + f.size())
    throw ParseError(line, std::string("bad integer in column ") + what);
  return v;
}

/// Empty field means gap (NaN); anything else must be a finite double.
inline double parse_value_field(std::string_view f, std::size_t line, const char* what) {
  if (f.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(v))
    throw ParseError(line, std::string("bad number in column ") + what);
  return v;
}

inline double parse_required_field(std::string_view f, std::size_t line, const char* what) {
  if (f.empty()) throw ParseError(line, std::string("empty column ") + what);
  return parse_value_field(f, line, what);
}

inline void append_double(std::string& out, double v) {
  if (std::isnan(v)) return;  // gap => empty cell
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, p);
}

}  // namespace detail

/// Parses the two CSV files into a Dataset. Missing value cells become NaN
/// gaps for fill_gaps to repair. Meters and metas come out sorted by id and
/// rows by hour, so serialization round-trips byte-identically.
///
/// Throws ParseError, DuplicateRow, BadHorizon, MissingMeta.
inline Dataset parse_dataset(std::string_view meter_csv, std::string_view meta_csv) {
  Dataset ds;

  // --- metadata ---
  {
    bool header_seen = false;
    detail::for_each_line(meta_csv, [&](std::size_t lineno, std::string_view line) {
      if (!header_seen) {
        if (line != kMetaCsvHeader)
          throw ParseError(lineno, "unexpected metadata header");
        header_seen = true;
        return;
      }
      auto f = detail::split_fields(line);
      if (f.size() != 7) throw ParseError(lineno, "expected 7 columns");
      MeterMeta meta;
      meta.meter_id = static_cast<int>(detail::parse_int_field(f[0], lineno, "meter_id"));
      meta.q_max = detail::parse_required_field(f[1], lineno, "q_max_kw");
      meta.q_mean = detail::parse_required_field(f[2], lineno, "q_mean_kw");
      meta.t_rl_mean = detail::parse_required_field(f[3], lineno, "t_rl_mean_c");
      meta.t_rl_max = detail::parse_required_field(f[4], lineno, "t_rl_max_c");
      meta.t_rl_limit = detail::parse_required_field(f[5], lineno, "t_rl_limit_c");
      auto type = consumer_type_from_string(f[6]);
      if (!type) throw ParseError(lineno, "unknown consumer_type");
      meta.consumer_type = *type;
      if (ds.find_meta(meta.meter_id))
        throw DuplicateRow("duplicate metadata for meter " + std::to_string(meta.meter_id));
      ds.metas.push_back(meta);
    });
    if (!header_seen) throw ParseError(1, "metadata file is empty");
  }

  // --- time series ---
  struct RawRow {
    int meter_id;
    long long hour;
    double v[4];
  };
  std::vector<RawRow> rows;
  long long max_hour = -1;
  {
    bool header_seen = false;
    detail::for_each_line(meter_csv, [&](std::size_t lineno, std::string_view line) {
      if (!header_seen) {
        if (line != kMeterCsvHeader)
          throw ParseError(lineno, "unexpected meter header");
        header_seen = true;
        return;
      }
      auto f = detail::split_fields(line);
      if (f.size() != 6) throw ParseError(lineno, "expected 6 columns");
      RawRow r;
      r.meter_id = static_cast<int>(detail::parse_int_field(f[0], lineno, "meter_id"));
      r.hour = detail::parse_int_field(f[1], lineno, "hour");
      if (r.hour < 0) throw ParseError(lineno, "negative hour");
      r.v[0] = detail::parse_value_field(f[2], lineno, "flow_m3h");
      r.v[1] = detail::parse_value_field(f[3], lineno, "t_supply_c");
      r.v[2] = detail::parse_value_field(f[4], lineno, "t_return_c");
      r.v[3] = detail::parse_value_field(f[5], lineno, "heat_kw");
      rows.push_back(r);
      max_hour = std::max(max_hour, r.hour);
    });
    if (!header_seen) throw ParseError(1, "meter file is empty");
  }

  std::size_t hours = static_cast<std::size_t>(max_hour + 1);
  if (hours == 0 || hours % 24 != 0)
    throw BadHorizon("series length " + std::to_string(hours) +
                     " is not a positive multiple of 24");
  ds.hours = hours;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::unordered_map<int, std::size_t> index;
  std::unordered_map<int, std::vector<char>> seen;
  for (const auto& r : rows) {
    auto it = index.find(r.meter_id);
    if (it == index.end()) {
      if (!ds.find_meta(r.meter_id))
        throw MissingMeta("meter " + std::to_string(r.meter_id) +
                          " has no metadata row");
      MeterSeries s;
      s.meter_id = r.meter_id;
      s.flow.assign(hours, nan);
      s.t_supply.assign(hours, nan);
      s.t_return.assign(hours, nan);
      s.heat.assign(hours, nan);
      index.emplace(r.meter_id, ds.meters.size());
      seen.emplace(r.meter_id, std::vector<char>(hours, 0));
      ds.meters.push_back(std::move(s));
      it = index.find(r.meter_id);
    }
    MeterSeries& s = ds.meters[it->second];
    std::size_t t = static_cast<std::size_t>(r.hour);
    std::vector<char>& seen_hours = seen[r.meter_id];
    if (seen_hours[t])
      throw DuplicateRow("meter " + std::to_string(r.meter_id) + " hour " +
                         std::to_string(r.hour) + " appears twice");
    seen_hours[t] = 1;
    s.flow[t] = r.v[0];
    s.t_supply[t] = r.v[1];
    s.t_return[t] = r.v[2];
    s.heat[t] = r.v[3];
  }

  std::sort(ds.meters.begin(), ds.meters.end(),
            [](const MeterSeries& a, const MeterSeries& b) { return a.meter_id < b.meter_id; });
  std::sort(ds.metas.begin(), ds.metas.end(),
            [](const MeterMeta& a, const MeterMeta& b) { return a.meter_id < b.meter_id; });
  return ds;
}

/// Note: a row with NaN in all four value cells marks an hour absent from
/// the file; such hours are serialized with four empty cells, which parses
/// back to the same state.
inline std::string serialize_meter_csv(const Dataset& ds) {
  std::string out(kMeterCsvHeader);
  out.push_back('\n');
  for (const auto& s : ds.meters) {
    for (std::size_t t = 0; t < s.size(); ++t) {
      out += std::to_string(s.meter_id);
      out.push_back(',');
      out += std::to_string(t);
      out.push_back(',');
      detail::append_double(out, s.flow[t]);
      out.push_back(',');
      detail::append_double(out, s.t_supply[t]);
      out.push_back(',');
      detail::append_double(out, s.t_return[t]);
      out.push_back(',');
      detail::append_double(out, s.heat[t]);
      out.push_back('\n');
    }
  }
  return out;
}

inline std::string serialize_meta_csv(const Dataset& ds) {
  std::string out(kMetaCsvHeader);
  out.push_back('\n');
  for (const auto& m : ds.metas) {
    out += std::to_string(m.meter_id);
    out.push_back(',');
    detail::append_double(out, m.q_max);
    out.push_back(',');
    detail::append_double(out, m.q_mean);
    out.push_back(',');
    detail::append_double(out, m.t_rl_mean);
    out.push_back(',');
    detail::append_double(out, m.t_rl_max);
    out.push_back(',');
    detail::append_double(out, m.t_rl_limit);
    out.push_back(',');
    out += to_string(m.consumer_type);
    out.push_back('\n');
  }
  return out;
}

namespace detail {

/// Linear interpolation between nearest non-gap neighbours; leading and
/// trailing gaps copy the nearest value. Returns the number of cells filled.
inline int fill_series(std::vector<double>& v, int meter_id, const char* what) {
  std::size_t n = v.size();
  int filled = 0;
  std::size_t first = n;
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isnan(v[i])) { first = i; break; }
  if (first == n)
    throw UnfillableSeries(meter_id, std::string(what) + " series has no values at all");
  for (std::size_t i = 0; i < first; ++i) { v[i] = v[first]; ++filled; }

  std::size_t prev = first;
  for (std::size_t i = first + 1; i < n; ++i) {
    if (std::isnan(v[i])) continue;
    if (i > prev + 1) {
      double lo = v[prev], hi = v[i];
      double span = static_cast<double>(i - prev);
      for (std::size_t k = prev + 1; k < i; ++k) {
        v[k] = lo + (hi - lo) * (static_cast<double>(k - prev) / span);
        ++filled;
      }
    }
    prev = i;
  }
  for (std::size_t i = prev + 1; i < n; ++i) { v[i] = v[prev]; ++filled; }
  return filled;
}

}  // namespace detail

/// Replaces every gap and returns the repaired dataset plus per-meter fill
/// counts. Where exactly one of {flow, dT, heat} was missing in an hour, the
/// heat cell is re-derived from Q = rho*cp*dT*V afterwards, so single-cell
/// repairs stay consistent with the identity. Idempotent on gap-free data.
inline std::pair<Dataset, ValidationReport> fill_gaps(const Dataset& input,
                                                      const Constants& constants = {}) {
  Dataset ds = input;
  ValidationReport report;
  for (auto& s : ds.meters) {
    MeterCheck check;
    check.meter_id = s.meter_id;

    std::size_t n = s.size();
    std::vector<char> flow_gap(n), ts_gap(n), tr_gap(n), heat_gap(n);
    for (std::size_t t = 0; t < n; ++t) {
      flow_gap[t] = std::isnan(s.flow[t]);
      ts_gap[t] = std::isnan(s.t_supply[t]);
      tr_gap[t] = std::isnan(s.t_return[t]);
      heat_gap[t] = std::isnan(s.heat[t]);
    }
    check.gaps_filled += detail::fill_series(s.flow, s.meter_id, "flow");
    check.gaps_filled += detail::fill_series(s.t_supply, s.meter_id, "t_supply");
    check.gaps_filled += detail::fill_series(s.t_return, s.meter_id, "t_return");
    check.gaps_filled += detail::fill_series(s.heat, s.meter_id, "heat");

    for (std::size_t t = 0; t < n; ++t) {
      int missing = (flow_gap[t] ? 1 : 0) + ((ts_gap[t] || tr_gap[t]) ? 1 : 0) +
                    (heat_gap[t] ? 1 : 0);
      if (missing == 1)
        s.heat[t] = heat_from_flow(s.flow[t], s.delta_t(t), constants);
    }
    report.meters.push_back(check);
  }
  return {std::move(ds), std::move(report)};
}

/// Checks Q = rho*cp*dT*V per hour within max(abs_tol, rel_tol*|Q|)
/// (inclusive), plus flow >= 0, plus the pathological pattern
/// flow > 0, dT <= 0, heat > 0, which is flagged rather than repaired.
/// pass means zero violations.
inline ValidationReport validate(const Dataset& ds, const Constants& constants = {},
                                 double rel_tol = 0.02, double abs_tol = 0.5) {
  ValidationReport report;
  for (const auto& s : ds.meters) {
    MeterCheck check;
    check.meter_id = s.meter_id;
    for (std::size_t t = 0; t < s.size(); ++t) {
      bool bad = false;
      if (std::isnan(s.flow[t]) || std::isnan(s.t_supply[t]) ||
          std::isnan(s.t_return[t]) || std::isnan(s.heat[t])) {
        bad = true;
      } else {
        double expected = heat_from_flow(s.flow[t], s.delta_t(t), constants);
        double err = std::fabs(s.heat[t] - expected);
        double rel = err / std::max(std::fabs(s.heat[t]), abs_tol);
        check.max_rel_error = std::max(check.max_rel_error, rel);
        if (err > std::max(abs_tol, rel_tol * std::fabs(s.heat[t]))) bad = true;
        if (s.flow[t] < 0.0) bad = true;
        if (s.flow[t] > 0.0 && s.delta_t(t) <= 0.0 && s.heat[t] > 0.0) bad = true;
      }
      if (bad) ++check.violations;
    }
    if (check.violations > 0) report.pass = false;
    report.meters.push_back(check);
  }
  return report;
}

}  // namespace dhflex
