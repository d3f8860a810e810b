#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "dhflex/core.hpp"
#include "dhflex/metrics.hpp"
#include "dhflex/parallel.hpp"
#include "dhflex/strategies.hpp"

namespace dhflex {

/// Which single strategy the greedy ranking evaluates.
struct StrategyConfig {
  StrategyKind kind = StrategyKind::FlowLimit;
  double alpha = 0.0;  // load shifting
  double beta = 0.0;   // flow limitation
};

/// Greedy inclusion curve: order[k-1] is the meter added at step k, and
/// reduction[k-1] / weighted_return_temp[k-1] describe the outcome with the
/// first k meters included.
struct GreedyCurve {
  double baseline_peak = 0.0;
  std::vector<int> order;
  std::vector<double> reduction;             // 1 - peak_k / baseline (may be < 0)
  std::vector<double> weighted_return_temp;  // of the k-prefix outcome
};

/// Ranks meters by iteratively including whichever meter yields the lowest
/// full-horizon aggregate peak when the strategy re-runs on the grown set
/// (ties break toward the lower meter id). Every candidate evaluation is a
/// complete strategy run, so the k-prefix entries reproduce exactly when the
/// strategy is applied directly to the first k meters of `order`.
inline GreedyCurve greedy_rank(const Dataset& input, const StrategyConfig& config,
                               const Constants& constants = {},
                               const lp::SolveOptions& opts = {}) {
  GreedyCurve curve;
  curve.baseline_peak = peak(aggregate_flow(input));
  if (curve.baseline_peak <= 0.0)
    throw DegenerateInput("greedy_rank: baseline peak is zero");

  std::vector<int> remaining = input.meter_ids();
  std::sort(remaining.begin(), remaining.end());
  std::vector<int> included;

  while (!remaining.empty()) {
    struct Candidate {
      double peak_flow = 0.0;
      double return_temp = 0.0;
    };
    std::vector<Candidate> results(remaining.size());
    detail::parallel_for(remaining.size(), [&](std::size_t c) {
      std::vector<int> trial = included;
      trial.push_back(remaining[c]);
      StrategyOutcome outcome = run_single_strategy(
          input, config.kind, config.alpha, config.beta, trial, constants, opts);
      results[c].peak_flow = peak(aggregate_flow(outcome.dataset));
      results[c].return_temp = weighted_return_temperature(outcome.dataset);
    });

    std::size_t best = 0;
    for (std::size_t c = 1; c < remaining.size(); ++c) {
      if (results[c].peak_flow < results[best].peak_flow) best = c;
      // equal peaks fall through: `remaining` is ascending, so the first
      // (lowest id) wins
    }
    included.push_back(remaining[best]);
    curve.order.push_back(remaining[best]);
    curve.reduction.push_back(1.0 - results[best].peak_flow / curve.baseline_peak);
    curve.weighted_return_temp.push_back(results[best].return_temp);
    remaining.erase(remaining.begin() + best);
  }
  return curve;
}

}  // namespace dhflex
