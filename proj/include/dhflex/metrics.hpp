#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "dhflex/core.hpp"
#include "dhflex/errors.hpp"

namespace dhflex {

/// Sorted copy, largest first.
inline std::vector<double> duration_curve(std::vector<double> series) {
  std::sort(series.begin(), series.end(), std::greater<double>());
  return series;
}

/// 1 - peak(altered) / peak(original).
inline double peak_reduction(const std::vector<double>& original,
                             const std::vector<double>& altered) {
  double p0 = peak(original);
  if (p0 <= 0.0) throw DegenerateInput("peak_reduction: original peak is zero");
  return 1.0 - peak(altered) / p0;
}

/// sum V_alt^(1+lambda) / sum V_orig^(1+lambda): the relative pumping energy
/// under a pressure loss growing with V^lambda.
inline double pumping_energy_ratio(const std::vector<double>& original,
                                   const std::vector<double>& altered,
                                   double lambda) {
  double num = 0.0, den = 0.0;
  for (double v : altered) num += std::pow(v, 1.0 + lambda);
  for (double v : original) den += std::pow(v, 1.0 + lambda);
  if (den <= 0.0)
    throw DegenerateInput("pumping_energy_ratio: original flow is all zero");
  return num / den;
}

/// Pumping-energy saving under the theoretical cubic law (lambda = 2).
inline double cubic_improvement(const std::vector<double>& original,
                                const std::vector<double>& altered) {
  return 1.0 - pumping_energy_ratio(original, altered, 2.0);
}

/// Pressure-loss / pump parameters for power estimates.
struct PumpModel {
  double lambda = 1.84;         // dP grows with V^lambda
  double eta_pump = 0.7;
  double dp_coefficient = 1e-5;  // bar per (m^3/h)^lambda

  static PumpModel from(const Constants& c, double lambda) {
    return PumpModel{lambda, c.eta_pump, c.dp_coefficient};
  }
};

/// Electric pump power (kW) to move v_subgrid m^3/h against the pressure
/// loss the total CHP-plant flow v_chp causes: dP = coeff * v_chp^lambda
/// (bar), P = v/3600 * dP * 100 / eta (m^3/s * kPa = kW).
inline double pump_power_estimate(double v_chp, double v_subgrid,
                                  const PumpModel& pump = {}) {
  if (v_chp <= 0.0) return 0.0;
  double dp_bar = pump.dp_coefficient * std::pow(v_chp, pump.lambda);
  return v_subgrid / 3600.0 * dp_bar * 100.0 / pump.eta_pump;
}

/// Flow-weighted mean return temperature over the whole horizon.
inline double weighted_return_temperature(const Dataset& ds) {
  double num = 0.0, den = 0.0;
  for (const auto& s : ds.meters)
    for (std::size_t t = 0; t < s.size(); ++t) {
      num += s.flow[t] * s.t_return[t];
      den += s.flow[t];
    }
  if (den <= 0.0)
    throw DegenerateInput("weighted_return_temperature: total flow is zero");
  return num / den;
}

/// 1 - delivered / original total heat; positive when a strategy drops heat.
inline double heat_deficit(const Dataset& original, const Dataset& altered) {
  double orig = 0.0, alt = 0.0;
  for (const auto& s : original.meters)
    for (double q : s.heat) orig += q;
  for (const auto& s : altered.meters)
    for (double q : s.heat) alt += q;
  if (orig <= 0.0) throw DegenerateInput("heat_deficit: original heat is zero");
  return 1.0 - alt / orig;
}

struct AdditionalCapacity {
  double q_add_kw = 0.0;  // extra connectable heat load
  double q_rel = 0.0;     // relative to the original peak load
};

/// Heat capacity freed by a peak-flow reduction of delta_v m^3/h, assuming
/// new consumers cool from the maximum supply temperature down to the
/// reference return temperature.
inline AdditionalCapacity additional_heat_capacity(double delta_v, double t_sl_dh_max,
                                                   double q_max_orig,
                                                   const Constants& c = {}) {
  if (q_max_orig <= 0.0)
    throw DegenerateInput("additional_heat_capacity: original peak load is zero");
  AdditionalCapacity out;
  out.q_add_kw = delta_v * c.rho_cp() * (t_sl_dh_max - c.t_ref_return);
  out.q_rel = out.q_add_kw / q_max_orig;
  return out;
}

struct LoadSummaryRow {
  int meter_id = 0;
  double mean_kw = 0.0;
  double peak_kw = 0.0;
};

inline std::vector<LoadSummaryRow> load_summary(const Dataset& ds) {
  std::vector<LoadSummaryRow> rows;
  for (const auto& s : ds.meters) {
    LoadSummaryRow r;
    r.meter_id = s.meter_id;
    for (double q : s.heat) {
      r.mean_kw += q;
      r.peak_kw = std::max(r.peak_kw, q);
    }
    if (!s.heat.empty()) r.mean_kw /= static_cast<double>(s.heat.size());
    rows.push_back(r);
  }
  return rows;
}

struct DailyProfile {
  std::vector<int> meter_ids;
  std::vector<std::array<double, 24>> rows;  // rescaled to [0, 1]
  std::vector<char> degenerate;              // constant profile => all-zero row
};

/// Mean heat per hour of day, affinely rescaled into [0, 1] per meter.
inline DailyProfile normalized_daily_profile(const Dataset& ds) {
  DailyProfile profile;
  for (const auto& s : ds.meters) {
    std::array<double, 24> mean{};
    std::array<std::size_t, 24> count{};
    for (std::size_t t = 0; t < s.size(); ++t) {
      mean[t % 24] += s.heat[t];
      ++count[t % 24];
    }
    for (std::size_t h = 0; h < 24; ++h)
      if (count[h] > 0) mean[h] /= static_cast<double>(count[h]);
    double lo = *std::min_element(mean.begin(), mean.end());
    double hi = *std::max_element(mean.begin(), mean.end());
    bool flat = !(hi > lo);
    if (flat) {
      mean.fill(0.0);
    } else {
      for (double& v : mean) v = (v - lo) / (hi - lo);
    }
    profile.meter_ids.push_back(s.meter_id);
    profile.rows.push_back(mean);
    profile.degenerate.push_back(flat);
  }
  return profile;
}

/// Everything the report files need about one strategy outcome.
struct MetricsReport {
  double peak_original = 0.0;
  double peak_strategy = 0.0;
  double peak_reduction = 0.0;
  std::vector<std::pair<double, double>> pumping_ratio;  // (lambda, ratio)
  double weighted_return_temp = 0.0;
  double heat_deficit = 0.0;
  std::vector<double> duration_curve;  // altered aggregate, sorted descending
};

inline MetricsReport compute_metrics(const Dataset& original, const Dataset& altered,
                                     const std::vector<double>& lambdas) {
  std::vector<double> agg0 = aggregate_flow(original);
  std::vector<double> agg1 = aggregate_flow(altered);
  MetricsReport r;
  r.peak_original = peak(agg0);
  r.peak_strategy = peak(agg1);
  r.peak_reduction = peak_reduction(agg0, agg1);
  for (double l : lambdas)
    r.pumping_ratio.emplace_back(l, pumping_energy_ratio(agg0, agg1, l));
  r.weighted_return_temp = weighted_return_temperature(altered);
  r.heat_deficit = heat_deficit(original, altered);
  r.duration_curve = duration_curve(std::move(agg1));
  return r;
}

}  // namespace dhflex
