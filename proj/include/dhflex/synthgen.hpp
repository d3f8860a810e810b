#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dhflex/core.hpp"
#include "dhflex/errors.hpp"

namespace dhflex {

namespace rng {

/// SplitMix64 finalizer; the sole mixing primitive of the generator.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// Counter-based stream: sample k is a pure function of (seed, stream, k),
/// so generation order never matters and any sample is O(1) addressable.
/// See docs/synthetic_generator.md for the exact construction.
struct Stream {
  std::uint64_t base;

  Stream(std::uint64_t seed, std::uint64_t stream)
      : base(mix64(seed ^ (kGolden * (stream + 1)))) {}

  std::uint64_t bits(std::uint64_t k) const { return mix64(base + kGolden * (k + 1)); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double u01(std::uint64_t k) const {
    return static_cast<double>(bits(k) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on samples (2k, 2k+1).
  double normal(std::uint64_t k) const {
    constexpr double two_pi = 6.283185307179586476925286766559;
    double u1 = std::max(u01(2 * k), 1e-300);
    double u2 = u01(2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }
};

}  // namespace rng

/// The 18 calibration substations: (peak kW, mean kW, mean / max / limit
/// return temperature C, consumer type), ids 1..18 by descending size.
inline std::vector<MeterMeta> reference_metas() {
  using C = ConsumerType;
  return {
      {1, 5356, 1276, 58.4, 66.9, 60, C::Industrial},
      {2, 4799, 953, 63.9, 74.6, 75, C::Industrial},
      {3, 2012, 890, 74.9, 94.0, 65, C::Commercial},
      {4, 1164, 210, 61.0, 67.0, 50, C::Commercial},
      {5, 590, 179, 59.5, 75.2, 65, C::Residential},
      {6, 188, 50, 52.4, 93.4, 50, C::Residential},
      {7, 174, 40, 53.0, 68.3, 50, C::Commercial},
      {8, 162, 51, 42.8, 64.3, 55, C::Residential},
      {9, 111, 30, 60.2, 78.6, 50, C::Commercial},
      {10, 83, 27, 47.2, 62.6, 65, C::Residential},
      {11, 60, 19, 47.2, 69.8, 65, C::Residential},
      {12, 55, 14, 48.2, 61.2, 50, C::Residential},
      {13, 45, 16, 70.6, 102.0, 50, C::Residential},
      {14, 44, 10, 46.1, 55.9, 65, C::Residential},
      {15, 38, 10, 53.7, 62.1, 50, C::Residential},
      {16, 27, 8, 53.9, 93.1, 50, C::Residential},
      {17, 19, 7, 46.5, 87.3, 50, C::Commercial},
      {18, 11, 2, 41.6, 87.0, 65, C::Commercial},
  };
}

/// Generator specification. Defaults produce the calibrated 18-meter year.
struct GenSpec {
  std::vector<MeterMeta> metas = reference_metas();
  int days = 365;
  std::uint64_t seed = 42;

  double supply_min = 75.0;   // C, summer network supply level
  double supply_max = 110.0;  // C, winter network supply level

  double morning_peak_min = 5.0;   // h; each meter draws its peak hour from
  double morning_peak_max = 10.0;  // this range
  bool residential_evening_peak = true;

  double excursion_prob = 0.1;  // per-day chance of a return-temp excursion
  double noise_sigma = 0.18;    // lognormal hour noise

  /// The two largest consumers' mean-load targets are raised by this
  /// fraction and everyone else's lowered, concentrating the yearly heat on
  /// the big meters like the reference network (stays inside the 5 %
  /// calibration tolerance). Zero disables the skew.
  double top2_mean_boost = 0.04;
};

namespace detail_synth {

inline double circ_gauss(double h, double p, double s) {
  double d = std::fabs(h - p);
  d = std::min(d, 24.0 - d);
  return std::exp(-0.5 * (d / s) * (d / s));
}

inline double daily_shape(ConsumerType type, double h, double pm, bool evening) {
  switch (type) {
    case ConsumerType::Residential:
      return 0.30 + 0.55 * circ_gauss(h, pm, 1.8) +
             (evening ? 0.45 * circ_gauss(h, 19.0, 2.2) : 0.0);
    case ConsumerType::Commercial:
      return 0.25 + 0.65 * circ_gauss(h, pm, 2.2) + 0.25 * circ_gauss(h, 13.5, 3.0);
    case ConsumerType::Industrial:
      return 0.30 + 0.70 * circ_gauss(h, pm, 2.6);
  }
  return 1.0;
}

/// Cosine season, 1.0 on the coldest day (Jan 16), floor in summer.
inline double seasonal(double day, double floor) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  return floor + (1.0 - floor) * 0.5 * (1.0 + std::cos(two_pi * (day - 15.0) / 365.0));
}

/// Finds gamma so that mean(q_max * (x/xmax)^gamma) == target_mean; the mean
/// is continuous and strictly decreasing in gamma, so bisection suffices.
inline double calibrate_gamma(const std::vector<double>& x, double xmax,
                              double target_ratio) {
  auto mean_ratio = [&](double g) {
    double s = 0.0;
    for (double v : x) s += std::pow(v / xmax, g);
    return s / static_cast<double>(x.size());
  };
  double lo = 1e-4, hi = 8.0;
  while (mean_ratio(hi) > target_ratio) {
    hi *= 2.0;
    if (hi > 1e6) throw BadSpec("mean target too small for this profile shape");
  }
  for (int it = 0; it < 200 && (hi - lo) > 1e-13 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mean_ratio(mid) > target_ratio) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail_synth

/// Deterministic synthetic smart-meter year. Heat profiles are a seasonal
/// sinusoid with a few winter cold snaps, a consumer-type daily shape and
/// lognormal hour noise, power-rescaled so each meter hits its (q_max,
/// q_mean) targets exactly. Return temperatures are AR(1) noise around
/// t_rl_mean with occasional excursions toward t_rl_max (never beyond it);
/// supply temperatures follow the season inside [supply_min, supply_max].
/// The flow series is derived from Q = rho*cp*dT*V, so the dataset
/// validates with zero violations. Identical spec => identical dataset.
inline Dataset generate_dataset(const GenSpec& spec, const Constants& constants = {}) {
  if (spec.days < 1) throw BadSpec("days must be >= 1");
  if (spec.metas.empty()) throw BadSpec("no meters specified");
  if (!(spec.supply_max > spec.supply_min)) throw BadSpec("empty supply band");
  if (!(spec.morning_peak_max >= spec.morning_peak_min))
    throw BadSpec("empty morning-peak range");
  if (spec.top2_mean_boost < 0.0 || spec.top2_mean_boost > 0.05)
    throw BadSpec("top2_mean_boost outside [0, 0.05]");
  for (const auto& m : spec.metas) {
    if (!(m.q_max > 0.0) || !(m.q_mean > 0.0))
      throw BadSpec("meter " + std::to_string(m.meter_id) + ": loads must be positive");
    if (m.q_mean > m.q_max)
      throw BadSpec("meter " + std::to_string(m.meter_id) + ": q_mean exceeds q_max");
    if (m.t_rl_mean > m.t_rl_max)
      throw BadSpec("meter " + std::to_string(m.meter_id) + ": t_rl_mean exceeds t_rl_max");
  }

  const std::size_t hours = static_cast<std::size_t>(spec.days) * 24;
  const double rho_cp = constants.rho_cp();

  // Stream ids: (meter_id << 8) | channel; global weather uses the id ~0.
  constexpr std::uint64_t kChHeatNoise = 0, kChMorningPeak = 1, kChReturnNoise = 2,
                          kChExcursionDay = 3, kChExcursionShape = 4, kChSupplyNoise = 5;
  rng::Stream snaps(spec.seed, (0xFFFFFFFFull << 8) | 0);

  // Three winter cold snaps shared by every meter (day-of-year centers).
  double snap_center[3], snap_amp[3], snap_width[3];
  for (int j = 0; j < 3; ++j) {
    double c = 15.0 + (snaps.u01(3 * j) - 0.5) * 90.0;
    snap_center[j] = c < 0.0 ? c + 365.0 : c;
    snap_amp[j] = 0.25 + 0.35 * snaps.u01(3 * j + 1);
    snap_width[j] = 1.5 + 2.5 * snaps.u01(3 * j + 2);
  }
  auto snap_factor = [&](double day_of_year) {
    double f = 1.0;
    for (int j = 0; j < 3; ++j) {
      double d = std::fabs(day_of_year - snap_center[j]);
      d = std::min(d, 365.0 - d);
      f += snap_amp[j] * std::exp(-0.5 * (d / snap_width[j]) * (d / snap_width[j]));
    }
    return f;
  };

  // Mean targets, with the concentration skew toward the two largest meters.
  std::vector<double> mean_target(spec.metas.size());
  {
    std::vector<std::size_t> by_mean(spec.metas.size());
    for (std::size_t i = 0; i < by_mean.size(); ++i) by_mean[i] = i;
    std::sort(by_mean.begin(), by_mean.end(), [&](std::size_t a, std::size_t b) {
      if (spec.metas[a].q_mean != spec.metas[b].q_mean)
        return spec.metas[a].q_mean > spec.metas[b].q_mean;
      return spec.metas[a].meter_id < spec.metas[b].meter_id;
    });
    for (std::size_t r = 0; r < by_mean.size(); ++r) {
      double factor = r < 2 && by_mean.size() > 2 ? 1.0 + spec.top2_mean_boost
                                                  : 1.0 - spec.top2_mean_boost;
      mean_target[by_mean[r]] = std::min(spec.metas[by_mean[r]].q_mean * factor,
                                         spec.metas[by_mean[r]].q_max);
    }
  }

  Dataset ds;
  ds.hours = hours;
  ds.metas = spec.metas;
  std::sort(ds.metas.begin(), ds.metas.end(),
            [](const MeterMeta& a, const MeterMeta& b) { return a.meter_id < b.meter_id; });

  for (std::size_t mi = 0; mi < spec.metas.size(); ++mi) {
    const MeterMeta& meta = spec.metas[mi];
    const std::uint64_t sid = static_cast<std::uint64_t>(meta.meter_id) << 8;
    rng::Stream heat_noise(spec.seed, sid | kChHeatNoise);
    rng::Stream peak_hour(spec.seed, sid | kChMorningPeak);
    rng::Stream return_noise(spec.seed, sid | kChReturnNoise);
    rng::Stream excursion_day(spec.seed, sid | kChExcursionDay);
    rng::Stream excursion_shape(spec.seed, sid | kChExcursionShape);
    rng::Stream supply_noise(spec.seed, sid | kChSupplyNoise);

    const double pm = spec.morning_peak_min +
                      peak_hour.u01(0) * (spec.morning_peak_max - spec.morning_peak_min);

    // --- raw heat profile, then power-rescale onto (q_max, mean target) ---
    std::vector<double> base(hours);
    double base_max = 0.0;
    const double sig = spec.noise_sigma;
    for (std::size_t t = 0; t < hours; ++t) {
      double day = static_cast<double>(t / 24);
      double doy = std::fmod(day, 365.0);
      double h = static_cast<double>(t % 24);
      double noise = std::exp(sig * heat_noise.normal(t) - 0.5 * sig * sig);
      base[t] = detail_synth::seasonal(doy, 0.12) * snap_factor(doy) *
                detail_synth::daily_shape(meta.consumer_type, h, pm,
                                          spec.residential_evening_peak) *
                noise;
      base_max = std::max(base_max, base[t]);
    }
    double gamma = detail_synth::calibrate_gamma(base, base_max,
                                                 mean_target[mi] / meta.q_max);

    MeterSeries s;
    s.meter_id = meta.meter_id;
    s.flow.resize(hours);
    s.t_supply.resize(hours);
    s.t_return.resize(hours);
    s.heat.resize(hours);

    // --- temperatures and the identity-derived flow ---
    double ar = 0.0;  // AR(1) state for the return temperature
    const double ar_phi = 0.9, ar_mix = std::sqrt(1.0 - ar_phi * ar_phi);
    const double spread = std::clamp(0.3 * (meta.t_rl_max - meta.t_rl_mean), 0.5, 5.0);
    double exc_start = 0.0, exc_until = -1.0, exc_level = 0.0;
    for (std::size_t t = 0; t < hours; ++t) {
      std::size_t day = t / 24;
      double doy = std::fmod(static_cast<double>(day), 365.0);
      std::size_t h = t % 24;

      if (h == 0 && excursion_day.u01(day) < spec.excursion_prob) {
        double start = std::floor(excursion_shape.u01(3 * day) * 18.0);
        double len = 3.0 + std::floor(excursion_shape.u01(3 * day + 1) * 6.0);
        exc_start = static_cast<double>(t) + start;
        exc_until = exc_start + len;
        exc_level = meta.t_rl_max -
                    0.15 * (meta.t_rl_max - meta.t_rl_mean) * excursion_shape.u01(3 * day + 2);
      }

      ar = ar_phi * ar + ar_mix * return_noise.normal(t);
      double trl = meta.t_rl_mean + spread * ar;
      if (static_cast<double>(t) >= exc_start && static_cast<double>(t) < exc_until)
        trl = std::max(trl, exc_level);

      double season_sl = 0.5 * (1.0 + std::cos(6.283185307179586 * (doy - 15.0) / 365.0));
      double tsl = spec.supply_min + (spec.supply_max - spec.supply_min) * season_sl +
                   1.2 * supply_noise.normal(t);
      tsl = std::clamp(tsl, spec.supply_min, spec.supply_max);

      trl = std::min(trl, meta.t_rl_max);
      trl = std::min(trl, tsl - 3.0);  // keep the spread workable
      trl = std::max(trl, 25.0);

      double q = meta.q_max * std::pow(base[t] / base_max, gamma);
      s.heat[t] = q;
      s.t_supply[t] = tsl;
      s.t_return[t] = trl;
      s.flow[t] = q / (rho_cp * (tsl - trl));
    }
    ds.meters.push_back(std::move(s));
  }

  std::sort(ds.meters.begin(), ds.meters.end(),
            [](const MeterSeries& a, const MeterSeries& b) { return a.meter_id < b.meter_id; });
  return ds;
}

}  // namespace dhflex
