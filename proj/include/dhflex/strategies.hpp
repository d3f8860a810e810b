#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "dhflex/core.hpp"
#include "dhflex/lp.hpp"
#include "dhflex/parallel.hpp"

namespace dhflex {

/// Per-day load-shifting result: one multiplier per consumer and hour.
struct ShiftSolution {
  std::vector<std::vector<double>> delta;  // [consumer][hour], 1.0 for excluded
  double peak_flow = 0.0;                  // minimized aggregate peak
  double total_shift = 0.0;                // sum |delta - 1| over included cells
};

/// Coordinated load shifting for one day slice.
///
/// Stage 1 minimizes the aggregate peak: an epigraph variable z bounds
/// sum_i delta_i(t) * V_i(t) (+ the fixed contribution of excluded
/// consumers) for every hour, subject to delta in [1-alpha, 1+alpha] and to
/// each included consumer's daily heat sum staying at its original value.
/// Stage 2 fixes the optimal peak V* as a constraint and minimizes
/// sum |delta - 1| via the split delta = 1 + p - q, p,q in [0, alpha],
/// which removes arbitrary drift the peak objective leaves open.
///
/// Hours with dT <= 0 contribute zero weight to the heat constraint (their
/// delta stays box-bounded and still scales the flow).
///
/// `flow` and `delta_t` are [consumer][hour] with one common slice length
/// (24 in normal use). `included[i]` false pins delta_i to 1.
inline ShiftSolution shift_loads_day(const std::vector<std::vector<double>>& flow,
                                     const std::vector<std::vector<double>>& delta_t,
                                     double alpha,
                                     const std::vector<char>& included,
                                     const lp::SolveOptions& opts = {}) {
  const std::size_t n = flow.size();
  if (delta_t.size() != n || included.size() != n)
    throw Error("shift_loads_day: inconsistent consumer counts");
  if (!(alpha >= 0.0) || alpha >= 1.0)
    throw Error("shift_loads_day: alpha must be in [0, 1)");
  const std::size_t H = n == 0 ? 0 : flow[0].size();
  for (std::size_t i = 0; i < n; ++i)
    if (flow[i].size() != H || delta_t[i].size() != H)
      throw Error("shift_loads_day: ragged hour axis");

  ShiftSolution out;
  out.delta.assign(n, std::vector<double>(H, 1.0));

  std::vector<std::size_t> inc;
  for (std::size_t i = 0; i < n; ++i)
    if (included[i]) inc.push_back(i);

  // Aggregate of all consumers and of the excluded remainder, per hour.
  std::vector<double> total(H, 0.0), fixed(H, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < H; ++t) {
      total[t] += flow[i][t];
      if (!included[i]) fixed[t] += flow[i][t];
    }

  if (inc.empty() || H == 0) {
    out.peak_flow = peak(total);
    return out;
  }

  const std::size_t k = inc.size();
  // Heat-constraint weights and row scale (rows are normalized to O(1) so
  // the solver's absolute feasibility tolerance means a relative one here).
  std::vector<std::vector<double>> w(k, std::vector<double>(H, 0.0));
  std::vector<double> heat_rhs(k, 0.0), heat_scale(k, 1.0);
  for (std::size_t a = 0; a < k; ++a) {
    const auto& fv = flow[inc[a]];
    const auto& dv = delta_t[inc[a]];
    for (std::size_t t = 0; t < H; ++t) {
      w[a][t] = dv[t] > 0.0 ? fv[t] * dv[t] : 0.0;
      heat_rhs[a] += w[a][t];
    }
    heat_scale[a] = 1.0 / std::max(1.0, std::fabs(heat_rhs[a]));
  }

  // ---- stage 1: minimize the peak -------------------------------------
  // Variables: [z, delta_{a,t} ...]
  const std::size_t nv1 = 1 + k * H;
  lp::LinearProgram s1;
  s1.objective.assign(nv1, 0.0);
  s1.objective[0] = 1.0;
  s1.lower.assign(nv1, 1.0 - alpha);
  s1.upper.assign(nv1, 1.0 + alpha);
  s1.lower[0] = 0.0;
  s1.upper[0] = std::numeric_limits<double>::infinity();
  auto var = [H](std::size_t a, std::size_t t) { return 1 + a * H + t; };
  for (std::size_t t = 0; t < H; ++t) {
    std::vector<double> row(nv1, 0.0);
    row[0] = -1.0;
    for (std::size_t a = 0; a < k; ++a) row[var(a, t)] = flow[inc[a]][t];
    s1.add_row(std::move(row), lp::Relation::LessEq, -fixed[t]);
  }
  for (std::size_t a = 0; a < k; ++a) {
    std::vector<double> row(nv1, 0.0);
    for (std::size_t t = 0; t < H; ++t) row[var(a, t)] = w[a][t] * heat_scale[a];
    s1.add_row(std::move(row), lp::Relation::Equal, heat_rhs[a] * heat_scale[a]);
  }
  lp::LpSolution r1 = lp::solve(s1, opts);
  if (r1.status != lp::SolveStatus::Optimal)
    throw Error("load-shift stage 1 did not solve to optimality");
  const double v_star = r1.objective_value;
  out.peak_flow = v_star;

  // ---- stage 2: minimize total shift at the optimal peak --------------
  // Variables: [p_{a,t} ... | q_{a,t} ...], delta = 1 + p - q.
  const std::size_t nv2 = 2 * k * H;
  lp::LinearProgram s2;
  s2.objective.assign(nv2, 1.0);
  s2.lower.assign(nv2, 0.0);
  s2.upper.assign(nv2, alpha);
  auto pvar = [H](std::size_t a, std::size_t t) { return a * H + t; };
  const std::size_t qoff = k * H;
  for (std::size_t t = 0; t < H; ++t) {
    std::vector<double> row(nv2, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
      double v = flow[inc[a]][t];
      row[pvar(a, t)] = v;
      row[qoff + pvar(a, t)] = -v;
    }
    s2.add_row(std::move(row), lp::Relation::LessEq, v_star - total[t]);
  }
  for (std::size_t a = 0; a < k; ++a) {
    std::vector<double> row(nv2, 0.0);
    for (std::size_t t = 0; t < H; ++t) {
      row[pvar(a, t)] = w[a][t] * heat_scale[a];
      row[qoff + pvar(a, t)] = -w[a][t] * heat_scale[a];
    }
    s2.add_row(std::move(row), lp::Relation::Equal, 0.0);
  }
  lp::LpSolution r2 = lp::solve(s2, opts);
  if (r2.status != lp::SolveStatus::Optimal)
    throw Error("load-shift stage 2 did not solve to optimality");

  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t t = 0; t < H; ++t) {
      double d = 1.0 + r2.x[pvar(a, t)] - r2.x[qoff + pvar(a, t)];
      d = std::clamp(d, 1.0 - alpha, 1.0 + alpha);
      out.delta[inc[a]][t] = d;
    }
  out.total_shift = r2.objective_value;
  return out;
}

/// Applies load shifting day by day across the whole horizon (hours must be
/// a multiple of 24; days are independent and solved in parallel). Altered
/// flows are delta * flow; heat is recomputed from the identity; the
/// temperature series stay untouched.
inline StrategyOutcome apply_load_shifting(const Dataset& input, double alpha,
                                           const std::vector<int>& included_ids,
                                           const Constants& constants = {},
                                           const lp::SolveOptions& opts = {}) {
  if (input.hours == 0 || input.hours % 24 != 0)
    throw BadHorizon("load shifting needs a horizon that is a multiple of 24 hours");
  std::vector<int> included = normalize_included(input, included_ids);

  StrategyOutcome outcome;
  outcome.dataset = input;
  outcome.strategy = StrategyKind::LoadShift;
  outcome.alpha = alpha;
  outcome.included = included;

  const std::size_t n = input.meters.size();
  std::vector<char> inc_flags(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    inc_flags[i] = std::binary_search(included.begin(), included.end(),
                                      input.meters[i].meter_id);

  const std::size_t days = input.hours / 24;
  detail::parallel_for(days, [&](std::size_t d) {
    const std::size_t t0 = d * 24;
    std::vector<std::vector<double>> fl(n, std::vector<double>(24));
    std::vector<std::vector<double>> dt(n, std::vector<double>(24));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < 24; ++t) {
        fl[i][t] = input.meters[i].flow[t0 + t];
        dt[i][t] = input.meters[i].delta_t(t0 + t);
      }
    ShiftSolution shift = shift_loads_day(fl, dt, alpha, inc_flags, opts);
    for (std::size_t i = 0; i < n; ++i) {
      if (!inc_flags[i]) continue;
      MeterSeries& s = outcome.dataset.meters[i];
      for (std::size_t t = 0; t < 24; ++t) {
        double f = fl[i][t] * shift.delta[i][t];
        s.flow[t0 + t] = f;
        s.heat[t0 + t] = heat_from_flow(f, dt[i][t], constants);
      }
    }
  });
  return outcome;
}

/// Caps each included meter's return temperature at its contractual limit.
/// Hours already at or below the limit stay bit-identical; altered hours
/// keep their heat and get the smaller flow the larger spread implies.
/// Hours where t_supply - limit <= delta_t_threshold are skipped.
inline StrategyOutcome limit_return_temperature(const Dataset& input,
                                                const std::vector<int>& included_ids,
                                                const Constants& constants = {}) {
  std::vector<int> included = normalize_included(input, included_ids);
  StrategyOutcome outcome;
  outcome.dataset = input;
  outcome.strategy = StrategyKind::ReturnTempLimit;
  outcome.included = included;

  for (auto& s : outcome.dataset.meters) {
    if (!std::binary_search(included.begin(), included.end(), s.meter_id)) continue;
    const MeterMeta* meta = outcome.dataset.find_meta(s.meter_id);
    if (!meta)
      throw MissingMeta("meter " + std::to_string(s.meter_id) + " has no metadata");
    const double limit = meta->t_rl_limit;
    for (std::size_t t = 0; t < s.size(); ++t) {
      if (!(s.t_return[t] > limit)) continue;
      double spread = s.t_supply[t] - limit;
      if (spread <= constants.delta_t_threshold) continue;
      s.t_return[t] = limit;
      s.flow[t] = s.heat[t] / (constants.rho_cp() * spread);
    }
  }
  return outcome;
}

/// Heat a flow cap withheld, waiting up to 24 hours to be delivered.
/// Slot h holds the deficit incurred h hours ago; aging discards slot 23.
struct DeficitLedger {
  std::array<double, 24> slot{};
  double discarded = 0.0;

  void age() {
    discarded += slot[23];
    for (std::size_t h = 23; h > 0; --h) slot[h] = slot[h - 1];
    slot[0] = 0.0;
  }
  double total() const {
    double s = 0.0;
    for (double v : slot) s += v;
    return s;
  }
  /// Removes `amount` oldest-first; returns what could not be removed.
  double drain(double amount) {
    for (std::size_t h = 24; h-- > 0;) {
      double take = std::min(amount, slot[h]);
      slot[h] -= take;
      amount -= take;
    }
    return amount;
  }
};

/// Heat bookkeeping for one meter's flow-limit run, all in kWh.
struct FlowLimitAccounting {
  double limit = 0.0;           // applied cap, m^3/h
  double original_heat = 0.0;   // identity-derived heat of the input series
  double delivered_heat = 0.0;  // identity-derived heat of the output series
  double discarded = 0.0;       // deficit that aged out of the 24 h window
  double ledger_remaining = 0.0;
};

/// Flow limitation for one series: hours above (1-beta) * max flow are
/// clipped and the withheld heat enters the ledger; hours with headroom
/// compensate as much ledger heat as the cap allows, skipped entirely when
/// dT < delta_t_threshold. Conservation: original = delivered + discarded +
/// remaining (up to roundoff).
inline std::pair<std::vector<double>, FlowLimitAccounting> limit_flow_series(
    const std::vector<double>& flow, const std::vector<double>& delta_t,
    double beta, const Constants& constants = {}) {
  if (!(beta >= 0.0) || beta >= 1.0)
    throw Error("limit_flow_series: beta must be in [0, 1)");
  if (delta_t.size() != flow.size())
    throw Error("limit_flow_series: series lengths differ");

  FlowLimitAccounting acc;
  acc.limit = (1.0 - beta) * peak(flow);
  std::vector<double> out(flow.size(), 0.0);
  DeficitLedger ledger;
  const double rho_cp = constants.rho_cp();

  for (std::size_t t = 0; t < flow.size(); ++t) {
    ledger.age();
    double v = flow[t];
    double dt = delta_t[t];
    if (v > acc.limit) {
      ledger.slot[0] = (v - acc.limit) * rho_cp * dt;
      out[t] = acc.limit;
    } else if (dt < constants.delta_t_threshold) {
      out[t] = v;  // no compensation at negligible spread
    } else {
      double v_comp = std::min(ledger.total() / (rho_cp * dt), acc.limit - v);
      out[t] = v + v_comp;
      ledger.drain(v_comp * rho_cp * dt);
    }
    acc.original_heat += rho_cp * dt * v;
    acc.delivered_heat += rho_cp * dt * out[t];
  }
  acc.discarded = ledger.discarded;
  acc.ledger_remaining = ledger.total();
  return {std::move(out), acc};
}

/// Dataset-level flow limitation plus the per-meter heat accounting,
/// ordered like the included list. Runs meters independently.
inline std::pair<StrategyOutcome, std::vector<FlowLimitAccounting>>
limit_flow_rate_detailed(const Dataset& input, double beta,
                         const std::vector<int>& included_ids,
                         const Constants& constants = {}) {
  std::vector<int> included = normalize_included(input, included_ids);
  StrategyOutcome outcome;
  outcome.dataset = input;
  outcome.strategy = StrategyKind::FlowLimit;
  outcome.beta = beta;
  outcome.included = included;
  std::vector<FlowLimitAccounting> accounting(included.size());

  detail::parallel_for(included.size(), [&](std::size_t idx) {
    int id = included[idx];
    for (auto& s : outcome.dataset.meters) {
      if (s.meter_id != id) continue;
      std::vector<double> dt(s.size());
      for (std::size_t t = 0; t < s.size(); ++t) dt[t] = s.delta_t(t);
      auto [limited, acc] = limit_flow_series(s.flow, dt, beta, constants);
      s.flow = std::move(limited);
      for (std::size_t t = 0; t < s.size(); ++t)
        s.heat[t] = heat_from_flow(s.flow[t], dt[t], constants);
      accounting[idx] = acc;
      break;
    }
  });
  return {std::move(outcome), std::move(accounting)};
}

inline StrategyOutcome limit_flow_rate(const Dataset& input, double beta,
                                       const std::vector<int>& included_ids,
                                       const Constants& constants = {}) {
  return limit_flow_rate_detailed(input, beta, included_ids, constants).first;
}

/// One stage of a strategy chain.
struct StageSpec {
  StrategyKind kind = StrategyKind::LoadShift;
  double alpha = 0.0;          // load shifting
  double beta = 0.0;           // flow limitation
  std::vector<int> included;   // explicit; empty means no meter is touched
};

/// Applies the stages left to right, each consuming the previous outcome's
/// dataset. An empty list is the identity. The outcome records the chain.
inline StrategyOutcome compose(const Dataset& input, const std::vector<StageSpec>& stages,
                               const Constants& constants = {},
                               const lp::SolveOptions& opts = {}) {
  StrategyOutcome outcome;
  outcome.dataset = input;
  outcome.strategy = StrategyKind::Composite;

  for (const auto& stage : stages) {
    StrategyOutcome step;
    StageDesc desc;
    desc.kind = stage.kind;
    switch (stage.kind) {
      case StrategyKind::LoadShift:
        step = apply_load_shifting(outcome.dataset, stage.alpha, stage.included,
                                   constants, opts);
        desc.alpha = stage.alpha;
        outcome.alpha = stage.alpha;
        break;
      case StrategyKind::FlowLimit:
        step = limit_flow_rate(outcome.dataset, stage.beta, stage.included, constants);
        desc.beta = stage.beta;
        outcome.beta = stage.beta;
        break;
      case StrategyKind::ReturnTempLimit:
        step = limit_return_temperature(outcome.dataset, stage.included, constants);
        break;
      case StrategyKind::Composite:
        throw Error("compose: a stage cannot itself be a composite");
    }
    outcome.dataset = std::move(step.dataset);
    outcome.chain.push_back(desc);
    for (int id : step.included)
      if (!std::binary_search(outcome.included.begin(), outcome.included.end(), id))
        outcome.included.insert(
            std::lower_bound(outcome.included.begin(), outcome.included.end(), id), id);
  }
  return outcome;
}

/// Dispatches a single (non-composite) strategy; shared by ranking and the CLI.
inline StrategyOutcome run_single_strategy(const Dataset& input, StrategyKind kind,
                                           double alpha, double beta,
                                           const std::vector<int>& included,
                                           const Constants& constants = {},
                                           const lp::SolveOptions& opts = {}) {
  switch (kind) {
    case StrategyKind::LoadShift:
      return apply_load_shifting(input, alpha, included, constants, opts);
    case StrategyKind::FlowLimit:
      return limit_flow_rate(input, beta, included, constants);
    case StrategyKind::ReturnTempLimit:
      return limit_return_temperature(input, included, constants);
    case StrategyKind::Composite:
      break;
  }
  throw Error("run_single_strategy: composite is not a single strategy");
}

}  // namespace dhflex
