#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "dhflex/errors.hpp"

namespace dhflex {

/// Physical constants and pump-model parameters shared across the toolkit.
///
/// rho * cp is the volumetric heat capacity in kWh/(m^3 K); with the
/// defaults it is ~1.136, i.e. one m^3/h cooled by 1 K releases ~1.14 kW.
struct Constants {
  double rho = 977.0;               // water density near 70 C, kg/m^3
  double cp = 0.001163;             // specific heat capacity, kWh/(kg K)
  double pump_lambda_measured = 1.84;     // fitted pressure-loss exponent
  double pump_lambda_theoretical = 2.0;   // quadratic reference exponent
  double eta_pump = 0.7;            // pump efficiency
  double dp_coefficient = 1e-5;     // bar per (m^3/h)^lambda
  double delta_t_threshold = 1.0;   // K; below this, flow corrections are skipped
  double t_ref_return = 50.0;       // C; reference return temperature

  double rho_cp() const { return rho * cp; }
};

enum class ConsumerType { Residential, Commercial, Industrial };

inline const char* to_string(ConsumerType t) {
  switch (t) {
    case ConsumerType::Residential: return "residential";
    case ConsumerType::Commercial: return "commercial";
    case ConsumerType::Industrial: return "industrial";
  }
  return "residential";
}

inline std::optional<ConsumerType> consumer_type_from_string(std::string_view s) {
  if (s == "residential") return ConsumerType::Residential;
  if (s == "commercial") return ConsumerType::Commercial;
  if (s == "industrial") return ConsumerType::Industrial;
  return std::nullopt;
}

/// Static description of one substation, as found in the metadata CSV.
struct MeterMeta {
  int meter_id = 0;
  double q_max = 0.0;      // yearly peak heat load, kW
  double q_mean = 0.0;     // yearly mean heat load, kW
  double t_rl_mean = 0.0;  // mean return temperature, C
  double t_rl_max = 0.0;   // maximum observed return temperature, C
  double t_rl_limit = 0.0; // contractual return-temperature limit, C
  ConsumerType consumer_type = ConsumerType::Residential;
};

/// One meter's hourly time series. All four vectors share the same length.
/// NaN cells mark gaps between parsing and gap filling.
struct MeterSeries {
  int meter_id = 0;
  std::vector<double> flow;      // m^3/h
  std::vector<double> t_supply;  // C
  std::vector<double> t_return;  // C
  std::vector<double> heat;      // kW

  std::size_t size() const { return flow.size(); }
  double delta_t(std::size_t t) const { return t_supply[t] - t_return[t]; }
};

/// A set of meters on a common hourly axis plus their metadata.
struct Dataset {
  std::vector<MeterSeries> meters;
  std::vector<MeterMeta> metas;
  std::size_t hours = 0;

  const MeterSeries* find_meter(int id) const {
    for (const auto& m : meters)
      if (m.meter_id == id) return &m;
    return nullptr;
  }
  const MeterMeta* find_meta(int id) const {
    for (const auto& m : metas)
      if (m.meter_id == id) return &m;
    return nullptr;
  }
  std::vector<int> meter_ids() const {
    std::vector<int> ids;
    ids.reserve(meters.size());
    for (const auto& m : meters) ids.push_back(m.meter_id);
    return ids;
  }
};

enum class StrategyKind { LoadShift, ReturnTempLimit, FlowLimit, Composite };

inline const char* to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::LoadShift: return "load_shift";
    case StrategyKind::ReturnTempLimit: return "return_temp_limit";
    case StrategyKind::FlowLimit: return "flow_limit";
    case StrategyKind::Composite: return "composite";
  }
  return "composite";
}

/// One applied stage, kept as provenance on composite outcomes.
struct StageDesc {
  StrategyKind kind = StrategyKind::Composite;
  std::optional<double> alpha;  // load shifting
  std::optional<double> beta;   // flow limitation
};

/// Result of applying a strategy (or a chain of them) to a dataset.
struct StrategyOutcome {
  Dataset dataset;
  StrategyKind strategy = StrategyKind::Composite;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::vector<int> included;      // sorted, unique meter ids the stage acted on
  std::vector<StageDesc> chain;   // full stage list for composites
};

/// Q = rho * cp * dT * V; kW when V is m^3/h and dT is K.
inline double heat_from_flow(double flow_m3h, double delta_t_c, const Constants& c) {
  return c.rho_cp() * delta_t_c * flow_m3h;
}

/// Hourly network flow: the sum of all meters' flows.
inline std::vector<double> aggregate_flow(const Dataset& ds) {
  std::vector<double> agg(ds.hours, 0.0);
  for (const auto& m : ds.meters)
    for (std::size_t t = 0; t < agg.size() && t < m.flow.size(); ++t)
      agg[t] += m.flow[t];
  return agg;
}

inline double peak(const std::vector<double>& v) {
  double p = 0.0;
  for (double x : v) p = std::max(p, x);
  return p;
}

/// Normalizes an inclusion list: sorted, deduplicated, and verified to
/// reference existing meters.
inline std::vector<int> normalize_included(const Dataset& ds, std::vector<int> included) {
  std::sort(included.begin(), included.end());
  included.erase(std::unique(included.begin(), included.end()), included.end());
  for (int id : included)
    if (!ds.find_meter(id))
      throw Error("included meter " + std::to_string(id) + " not in dataset");
  return included;
}

}  // namespace dhflex
