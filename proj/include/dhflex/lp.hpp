#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "dhflex/errors.hpp"

namespace dhflex::lp {

enum class Relation { LessEq, Equal, GreaterEq };
enum class SolveStatus { Optimal, Infeasible, Unbounded };

/// min objective . x  subject to  constraints and per-variable bounds.
/// Bounds default to [0, +inf). Free or flipped variables are allowed;
/// they are normalized internally.
struct LinearProgram {
  struct Row {
    std::vector<double> coeffs;
    Relation rel = Relation::LessEq;
    double rhs = 0.0;
  };

  std::vector<double> objective;
  std::vector<Row> constraints;
  std::vector<double> lower;  // empty => all zeros
  std::vector<double> upper;  // empty => all +inf

  std::size_t num_vars() const { return objective.size(); }

  void add_row(std::vector<double> coeffs, Relation rel, double rhs) {
    constraints.push_back(Row{std::move(coeffs), rel, rhs});
  }
  void set_bounds(std::size_t j, double lo, double hi) {
    double inf = std::numeric_limits<double>::infinity();
    if (lower.empty()) lower.assign(num_vars(), 0.0);
    if (upper.empty()) upper.assign(num_vars(), inf);
    lower[j] = lo;
    upper[j] = hi;
  }
};

struct SolveOptions {
  double tol = 1e-9;             // feasibility / optimality tolerance
  std::size_t max_iterations = 0;  // 0 => 50 * (vars + rows)
  int stall_limit = 100;         // degenerate steps before Bland's rule kicks in
};

struct LpSolution {
  SolveStatus status = SolveStatus::Optimal;
  std::vector<double> x;         // empty unless Optimal
  double objective_value = 0.0;  // meaningful only when Optimal
  std::size_t iterations = 0;
};

namespace detail {

inline bool finite(double v) { return std::isfinite(v); }

}  // namespace detail

/// Two-phase dense simplex with native handling of box bounds
/// (nonbasic variables may rest at either bound, so bounds never become
/// tableau rows). Pricing is Dantzig's largest-violation rule, switching
/// permanently to Bland's rule after `stall_limit` consecutive degenerate
/// steps. Equality rows and flipped inequalities get phase-1 artificials.
///
/// Throws BadProgram for structurally invalid input and NoConvergence when
/// the iteration budget runs out.
inline LpSolution solve(const LinearProgram& prog, const SolveOptions& opts = {}) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = prog.num_vars();
  std::size_t m = prog.constraints.size();  // shrinks if redundant rows drop

  // ---- validate -------------------------------------------------------
  for (double c : prog.objective)
    if (!detail::finite(c)) throw BadProgram("objective coefficient not finite");
  if (!prog.lower.empty() && prog.lower.size() != n)
    throw BadProgram("lower bound vector has wrong length");
  if (!prog.upper.empty() && prog.upper.size() != n)
    throw BadProgram("upper bound vector has wrong length");
  for (const auto& row : prog.constraints) {
    if (row.coeffs.size() != n) throw BadProgram("constraint row has wrong width");
    for (double a : row.coeffs)
      if (!detail::finite(a)) throw BadProgram("constraint coefficient not finite");
    if (!detail::finite(row.rhs)) throw BadProgram("constraint rhs not finite");
  }
  auto lower_of = [&](std::size_t j) { return prog.lower.empty() ? 0.0 : prog.lower[j]; };
  auto upper_of = [&](std::size_t j) { return prog.upper.empty() ? inf : prog.upper[j]; };
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isnan(lower_of(j)) || std::isnan(upper_of(j)))
      throw BadProgram("bound is NaN");
    if (lower_of(j) > upper_of(j)) throw BadProgram("lower bound exceeds upper bound");
  }

  // ---- normalize variables to y in [0, cap] ---------------------------
  // x[orig] = shift + sign * y, with free variables split into y+ - y-.
  struct Col {
    std::size_t orig;
    double sign;
    double shift;
  };
  std::vector<Col> cols;
  std::vector<double> cap;     // upper bound of each internal column
  std::vector<double> cost;    // phase-2 cost of each internal column
  for (std::size_t j = 0; j < n; ++j) {
    double lo = lower_of(j), hi = upper_of(j);
    double cj = prog.objective[j];
    if (lo == -inf && hi == inf) {
      cols.push_back({j, +1.0, 0.0});
      cap.push_back(inf);
      cost.push_back(cj);
      cols.push_back({j, -1.0, 0.0});
      cap.push_back(inf);
      cost.push_back(-cj);
    } else if (lo == -inf) {
      cols.push_back({j, -1.0, hi});  // x = hi - y
      cap.push_back(inf);
      cost.push_back(-cj);
    } else {
      cols.push_back({j, +1.0, lo});  // x = lo + y
      cap.push_back(hi == inf ? inf : hi - lo);
      cost.push_back(cj);
    }
  }
  const std::size_t ns = cols.size();  // structural internal columns

  // ---- rows in internal columns, rhs made nonnegative ------------------
  std::vector<std::vector<double>> rowcoef(m);
  std::vector<double> rhs(m);
  std::vector<Relation> rel(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& row = prog.constraints[i];
    std::vector<double> rc(ns, 0.0);
    double b = row.rhs;
    for (std::size_t k = 0; k < ns; ++k) {
      double a = row.coeffs[cols[k].orig];
      rc[k] = a * cols[k].sign;
      b -= a * cols[k].shift;
    }
    Relation r = row.rel;
    if (b < 0.0) {
      for (double& a : rc) a = -a;
      b = -b;
      if (r == Relation::LessEq) r = Relation::GreaterEq;
      else if (r == Relation::GreaterEq) r = Relation::LessEq;
    }
    rowcoef[i] = std::move(rc);
    rhs[i] = b;
    rel[i] = r;
  }

  // ---- slack / artificial columns --------------------------------------
  // Column layout: [structural | slacks & surpluses | artificials].
  std::size_t total = ns;
  std::vector<int> slack_col(m, -1), art_col(m, -1);
  for (std::size_t i = 0; i < m; ++i) {
    if (rel[i] != Relation::Equal) slack_col[i] = static_cast<int>(total++);
  }
  std::size_t first_art = total;
  for (std::size_t i = 0; i < m; ++i) {
    if (rel[i] != Relation::LessEq) art_col[i] = static_cast<int>(total++);
  }
  const std::size_t N = total;

  enum class VarState : unsigned char { AtLower, AtUpper, Basic };
  std::vector<double> capall(N, inf), cost2(N, 0.0);
  for (std::size_t k = 0; k < ns; ++k) {
    capall[k] = cap[k];
    cost2[k] = cost[k];
  }
  std::vector<char> artificial(N, 0), banned(N, 0);
  for (std::size_t i = 0; i < m; ++i)
    if (art_col[i] >= 0) artificial[art_col[i]] = 1;

  // Dense tableau T = B^-1 A, kept up to date by Gauss-Jordan pivots.
  std::vector<std::vector<double>> T(m, std::vector<double>(N, 0.0));
  std::vector<double> xb(m, 0.0);
  std::vector<int> basis(m, -1);
  std::vector<VarState> state(N, VarState::AtLower);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < ns; ++k) T[i][k] = rowcoef[i][k];
    if (slack_col[i] >= 0) T[i][slack_col[i]] = rel[i] == Relation::LessEq ? 1.0 : -1.0;
    if (art_col[i] >= 0) T[i][art_col[i]] = 1.0;
    int b0 = rel[i] == Relation::LessEq ? slack_col[i] : art_col[i];
    basis[i] = b0;
    state[b0] = VarState::Basic;
    xb[i] = rhs[i];
  }

  // Reduced-cost rows for both phases; both are maintained through phase 1
  // so phase 2 starts warm.
  std::vector<double> d1(N, 0.0), d2 = cost2;
  bool have_artificials = first_art < N;
  for (std::size_t i = 0; i < m; ++i) {
    if (art_col[i] < 0) continue;
    for (std::size_t j = 0; j < N; ++j) d1[j] -= T[i][j];
  }
  for (std::size_t i = 0; i < m; ++i)
    if (art_col[i] >= 0) d1[art_col[i]] = 0.0;

  const double tol = opts.tol;
  const double pivot_tol = 1e-10;
  const double step_eps = 1e-12;
  std::size_t max_iter =
      opts.max_iterations > 0 ? opts.max_iterations : 50 * (n + m + 1);
  std::size_t iterations = 0;
  int stall = 0;
  bool bland = false;

  auto pivot = [&](std::size_t r, std::size_t e) {
    double piv = T[r][e];
    double inv = 1.0 / piv;
    auto& prow = T[r];
    for (std::size_t j = 0; j < N; ++j) prow[j] *= inv;
    prow[e] = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == r) continue;
      double f = T[i][e];
      if (f == 0.0) continue;
      auto& row = T[i];
      for (std::size_t j = 0; j < N; ++j) row[j] -= f * prow[j];
      row[e] = 0.0;
    }
    double f1 = d1[e], f2 = d2[e];
    if (f1 != 0.0)
      for (std::size_t j = 0; j < N; ++j) d1[j] -= f1 * prow[j];
    if (f2 != 0.0)
      for (std::size_t j = 0; j < N; ++j) d2[j] -= f2 * prow[j];
    d1[e] = 0.0;
    d2[e] = 0.0;
  };

  auto run_phase = [&](int phase) -> SolveStatus {
    std::vector<double>& d = phase == 1 ? d1 : d2;
    for (;;) {
      // ---- pricing ----
      std::size_t enter = N;
      double best_viol = tol;
      for (std::size_t j = 0; j < N; ++j) {
        if (state[j] == VarState::Basic || banned[j]) continue;
        if (phase == 2 && artificial[j]) continue;
        if (capall[j] <= 0.0) continue;  // fixed variable
        double viol = 0.0;
        if (state[j] == VarState::AtLower) {
          if (d[j] < -tol) viol = -d[j];
        } else {
          if (d[j] > tol) viol = d[j];
        }
        if (viol == 0.0) continue;
        if (bland) { enter = j; break; }
        if (viol > best_viol) {
          best_viol = viol;
          enter = j;
        }
      }
      if (enter == N) return SolveStatus::Optimal;  // phase optimum

      double sigma = state[enter] == VarState::AtLower ? 1.0 : -1.0;

      // ---- ratio test ----
      double t_best = capall[enter];  // bound flip distance (may be inf)
      std::ptrdiff_t leave = -1;
      bool leave_at_upper = false;
      for (std::size_t i = 0; i < m; ++i) {
        double a = T[i][enter];
        if (std::fabs(a) <= pivot_tol) continue;
        double sa = sigma * a;
        double t;
        bool to_upper;
        if (sa > 0.0) {  // basic variable decreases toward 0
          t = std::max(xb[i], 0.0) / sa;
          to_upper = false;
        } else {  // basic variable increases toward its cap
          double cb = capall[basis[i]];
          if (cb == inf) continue;
          t = std::max(cb - xb[i], 0.0) / -sa;
          to_upper = true;
        }
        if (t < t_best - step_eps) {
          t_best = t;
          leave = static_cast<std::ptrdiff_t>(i);
          leave_at_upper = to_upper;
        } else if (leave >= 0 && t <= t_best + step_eps) {
          // tie break: Bland prefers the smallest basis index, Dantzig the
          // numerically largest pivot
          if (bland) {
            if (basis[i] < basis[leave]) {
              leave = static_cast<std::ptrdiff_t>(i);
              leave_at_upper = to_upper;
            }
          } else if (std::fabs(a) > std::fabs(T[leave][enter])) {
            leave = static_cast<std::ptrdiff_t>(i);
            leave_at_upper = to_upper;
          }
        }
      }
      if (t_best == inf) {
        if (phase == 1)
          throw NoConvergence("phase 1 reported an unbounded direction");
        return SolveStatus::Unbounded;
      }

      if (++iterations > max_iter)
        throw NoConvergence("simplex iteration limit exceeded (" +
                            std::to_string(max_iter) + ")");
      if (t_best <= step_eps) {
        if (++stall > opts.stall_limit) bland = true;
      } else {
        stall = 0;
      }

      if (leave < 0) {
        // Bound flip: the entering variable crosses to its other bound.
        for (std::size_t i = 0; i < m; ++i) {
          double a = T[i][enter];
          if (a != 0.0) xb[i] -= sigma * t_best * a;
        }
        state[enter] = state[enter] == VarState::AtLower ? VarState::AtUpper
                                                         : VarState::AtLower;
        continue;
      }

      std::size_t r = static_cast<std::size_t>(leave);
      double enter_val =
          (state[enter] == VarState::AtLower ? 0.0 : capall[enter]) + sigma * t_best;
      for (std::size_t i = 0; i < m; ++i) {
        if (i == r) continue;
        double a = T[i][enter];
        if (a != 0.0) xb[i] -= sigma * t_best * a;
      }
      int leaving = basis[r];
      state[leaving] = leave_at_upper ? VarState::AtUpper : VarState::AtLower;
      if (artificial[leaving]) banned[leaving] = 1;  // never re-enters
      pivot(r, enter);
      basis[r] = static_cast<int>(enter);
      state[enter] = VarState::Basic;
      xb[r] = enter_val;
    }
  };

  LpSolution sol;
  if (have_artificials) {
    run_phase(1);  // cannot return Unbounded
    double art_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (artificial[basis[i]]) art_sum += std::max(xb[i], 0.0);
    if (art_sum > tol) {
      sol.status = SolveStatus::Infeasible;
      sol.iterations = iterations;
      return sol;
    }
    // Drive leftover artificials (at value ~0) out of the basis; rows where
    // that is impossible are redundant and dropped.
    for (std::size_t i = m; i-- > 0;) {
      if (!artificial[basis[i]]) continue;
      std::size_t piv_col = N;
      for (std::size_t j = 0; j < N && piv_col == N; ++j) {
        if (artificial[j] || state[j] == VarState::Basic) continue;
        if (std::fabs(T[i][j]) > pivot_tol) piv_col = j;
      }
      if (piv_col != N) {
        int leaving = basis[i];
        double piv = T[i][piv_col];
        double residual = std::max(xb[i], 0.0);  // artificial's leftover value
        pivot(i, piv_col);
        // Degenerate swap: the entering variable keeps its bound value plus
        // the (tiny) residual the artificial was carrying.
        double off = state[piv_col] == VarState::AtUpper ? capall[piv_col] : 0.0;
        state[leaving] = VarState::AtLower;
        banned[leaving] = 1;
        basis[i] = static_cast<int>(piv_col);
        state[piv_col] = VarState::Basic;
        xb[i] = off + residual / piv;
      } else {
        T.erase(T.begin() + i);
        xb.erase(xb.begin() + i);
        basis.erase(basis.begin() + i);
      }
    }
    m = T.size();
    for (std::size_t j = first_art; j < N; ++j) banned[j] = 1;
  }

  sol.status = run_phase(2);
  sol.iterations = iterations;
  if (sol.status != SolveStatus::Optimal) return sol;

  // ---- extract the solution in original variables ----------------------
  std::vector<double> y(N, 0.0);
  for (std::size_t j = 0; j < N; ++j)
    if (state[j] == VarState::AtUpper) y[j] = capall[j];
  for (std::size_t i = 0; i < m; ++i) y[basis[i]] = xb[i];
  sol.x.assign(n, 0.0);
  for (std::size_t k = 0; k < ns; ++k) sol.x[cols[k].orig] += cols[k].sign * y[k];
  for (std::size_t j = 0; j < n; ++j) {
    double lo = lower_of(j), hi = upper_of(j);
    if (lo == -inf && hi == inf) continue;  // split variable, no shift
    if (lo == -inf) sol.x[j] += hi;         // x = hi - y
    else sol.x[j] += lo;                    // x = lo + y
    // clamp roundoff into the box
    if (sol.x[j] < lo) sol.x[j] = lo;
    if (hi != inf && sol.x[j] > hi) sol.x[j] = hi;
  }
  double obj = 0.0;
  for (std::size_t j = 0; j < n; ++j) obj += prog.objective[j] * sol.x[j];
  sol.objective_value = obj;
  return sol;
}

}  // namespace dhflex::lp
