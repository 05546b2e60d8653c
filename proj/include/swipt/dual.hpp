#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "swipt/errors.hpp"
#include "swipt/fading.hpp"
#include "swipt/link.hpp"
#include "swipt/numeric.hpp"

namespace swipt {

/// Multipliers of the energy constraint (lambda) and the average power
/// constraint (beta). Problems without power control leave beta at zero.
struct DualPoint {
  double lambda = 0.0;
  double beta = 0.0;
};

/// One pure per-state choice and its contributions to the objective, the
/// constrained energy quantity and the average transmit power.
struct Action {
  bool id = false;
  double power = 0.0;
  double objective = 0.0;
  double energy = 0.0;
  double cost = 0.0;

  double lagrangian(const DualPoint& d) const { return objective + d.lambda * energy - d.beta * cost; }
  bool same_as(const Action& o) const {
    return id == o.id && power == o.power && objective == o.objective && energy == o.energy && cost == o.cost;
  }
};

/// Up to three candidate actions per state. Order matters: on equal
/// Lagrangian values the earlier candidate wins.
class Candidates {
 public:
  void push(const Action& a) { items_[count_++] = a; }
  std::span<const Action> items() const { return {items_.data(), count_}; }
  std::size_t size() const { return count_; }

 private:
  std::array<Action, 3> items_{};
  std::size_t count_ = 0;
};

/// A per-state Lagrangian subproblem: lists the actions that can maximize
/// the per-state Lagrangian at a given dual point.
template <class S>
concept StateSubproblem = requires(const S& sub, const FadingState& s, const DualPoint& d) {
  { sub.candidates(s, d) } -> std::same_as<Candidates>;
};

/// Subproblems with transmit power control, solved over (lambda, beta).
template <class S>
concept PowerControlledSubproblem =
    StateSubproblem<S> && requires(const S& sub, const FadingEnsemble& e, const PowerBudget& b) {
      { sub.energy_capacity(e, b) } -> std::convertible_to<double>;
      { sub.capacity_policy(e, b) } -> std::same_as<ModePolicy>;
      { sub.dual_scale(b) } -> std::same_as<DualPoint>;
    };

struct StateDecision {
  Action best;
  std::array<Action, 2> others{};
  std::size_t other_count = 0;
  double value = 0.0;  // per-state Lagrangian at the argmax
  double gap = std::numeric_limits<double>::infinity();  // to the runner-up
  bool tie = false;

  double rho() const { return best.id ? 1.0 : 0.0; }
  double power() const { return best.power; }
};

/// Argmax of the per-state Lagrangian. A tie is reported when the runner-up
/// is within `tie_tol` (relative) of the best value.
template <StateSubproblem S>
StateDecision decide(const S& sub, const FadingState& s, const DualPoint& d, double tie_tol = 0.0) {
  const Candidates c = sub.candidates(s, d);
  const auto items = c.items();
  StateDecision out;
  std::size_t best = 0;
  double best_value = items[0].lagrangian(d);
  for (std::size_t k = 1; k < items.size(); ++k) {
    const double v = items[k].lagrangian(d);
    if (v > best_value) {
      best = k;
      best_value = v;
    }
  }
  out.best = items[best];
  out.value = best_value;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k == best) continue;
    out.others[out.other_count++] = items[k];
    out.gap = std::min(out.gap, best_value - items[k].lagrangian(d));
  }
  out.tie = out.other_count > 0 && out.gap <= tie_tol * std::max(1.0, std::abs(best_value));
  return out;
}

struct Totals {
  double objective = 0.0;
  double energy = 0.0;
  double cost = 0.0;
};

struct SolverOptions {
  double tol = 1e-12;     // bisection: relative constraint residual
  double gap_tol = 1e-4;  // ellipsoid: relative duality gap
  int max_iter = 500;     // ellipsoid iteration cap
};

struct DualSolution {
  double lambda = 0.0;
  std::optional<double> beta;
  ModePolicy policy;
  Metrics metrics;
  double objective = 0.0;  // primal objective of `policy`
  double energy = 0.0;     // constrained energy quantity achieved by `policy`
  double power = 0.0;      // average transmit power of `policy`
  double dual_value = 0.0;
  int iterations = 0;
};

namespace detail {

inline PolicyEntry entry_of(const Action& a) { return PolicyEntry{a.id ? 1.0 : 0.0, a.power, a.power}; }

/// Time share `t` of action `b` against `1 - t` of action `a`.
inline PolicyEntry mix(const Action& a, const Action& b, double t) {
  if (t <= 0.0) return entry_of(a);
  if (t >= 1.0) return entry_of(b);
  PolicyEntry e;
  e.rho = (a.id ? 1.0 - t : 0.0) + (b.id ? t : 0.0);
  if (a.id && b.id) {
    e.p_id = a.power == b.power ? a.power : (1.0 - t) * a.power + t * b.power;
    e.p_eh = e.p_id;
  } else if (a.id) {
    e.p_id = a.power;
    e.p_eh = b.power;
  } else if (b.id) {
    e.p_id = b.power;
    e.p_eh = a.power;
  } else {
    e.p_eh = a.power == b.power ? a.power : (1.0 - t) * a.power + t * b.power;
    e.p_id = e.p_eh;
  }
  return e;
}

template <StateSubproblem S>
std::vector<StateDecision> decide_all(const S& sub, const FadingEnsemble& ensemble, const DualPoint& d) {
  std::vector<StateDecision> out;
  out.reserve(ensemble.size());
  for (const auto& s : ensemble.states()) out.push_back(decide(sub, s, d));
  return out;
}

template <class Get>
Totals sum_actions(const FadingEnsemble& ensemble, Get&& get) {
  CompensatedSum obj, en, co;
  const auto states = ensemble.states();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Action& a = get(i);
    const double w = states[i].weight;
    obj += w * a.objective;
    en += w * a.energy;
    co += w * a.cost;
  }
  return {obj.value(), en.value(), co.value()};
}

struct BisectResult {
  double multiplier = 0.0;
  ModePolicy policy;
  Totals totals;
  std::vector<Totals> per_state;  // unweighted contributions of each entry
  int iterations = 0;
};

/// Shared 1-D dual search. `at(mu)` maps the multiplier to a dual point;
/// `constraint(action)` is the constrained per-state quantity, whose
/// ensemble average must be nondecreasing in mu and reach `target`.
/// Candidates must not depend on mu. The marginal states are time-shared
/// in order of their switching multiplier (higher index first on ties) so
/// the target is met with equality and at most one state is fractional.
template <StateSubproblem S, class At, class Constraint>
BisectResult bisect_multiplier(const FadingEnsemble& ensemble, const S& sub, At&& at, Constraint&& constraint,
                               double target, double tol) {
  const auto states = ensemble.states();
  const std::size_t n = states.size();
  auto constraint_total = [&](const std::vector<StateDecision>& dec) {
    CompensatedSum c;
    for (std::size_t i = 0; i < n; ++i) c += states[i].weight * constraint(dec[i].best);
    return c.value();
  };
  auto finish = [&](const std::vector<StateDecision>& dec, double mu, int iters) {
    BisectResult r;
    std::vector<PolicyEntry> entries(n);
    for (std::size_t i = 0; i < n; ++i) entries[i] = entry_of(dec[i].best);
    r.policy = ModePolicy(std::move(entries));
    r.totals = sum_actions(ensemble, [&](std::size_t i) -> const Action& { return dec[i].best; });
    r.per_state.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.per_state[i] = {dec[i].best.objective, dec[i].best.energy, dec[i].best.cost};
    r.multiplier = mu;
    r.iterations = iters;
    return r;
  };

  const double slack = 1e-12 * std::max(1.0, std::abs(target));
  auto lo_dec = decide_all(sub, ensemble, at(0.0));
  double c_lo = constraint_total(lo_dec);
  if (c_lo >= target - slack) return finish(lo_dec, 0.0, 0);

  CompensatedSum cap_sum;
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    const Candidates c = sub.candidates(states[i], at(0.0));
    for (const auto& a : c.items()) best = std::max(best, constraint(a));
    cap_sum += states[i].weight * best;
  }
  const double cap = cap_sum.value();
  if (target > cap + slack) {
    throw InfeasibleError("target " + format_real(target) + " exceeds achievable maximum " + format_real(cap), cap);
  }

  int iters = 0;
  double lo = 0.0;
  double hi = 1.0;
  auto hi_dec = decide_all(sub, ensemble, at(hi));
  double c_hi = constraint_total(hi_dec);
  while (c_hi < target - slack) {
    lo = hi;
    lo_dec = std::move(hi_dec);
    c_lo = c_hi;
    hi *= 2.0;
    if (++iters > 1100 || !std::isfinite(hi)) {
      throw ConvergenceError("no finite multiplier brackets the target", iters, target - c_hi);
    }
    hi_dec = decide_all(sub, ensemble, at(hi));
    c_hi = constraint_total(hi_dec);
  }
  while (hi - lo > 1e-12 * std::max(1.0, hi) && c_hi - target > tol * std::max(1.0, std::abs(target))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    auto mid_dec = decide_all(sub, ensemble, at(mid));
    const double c_mid = constraint_total(mid_dec);
    ++iters;
    if (c_mid >= target - slack) {
      hi = mid;
      hi_dec = std::move(mid_dec);
      c_hi = c_mid;
    } else {
      lo = mid;
      lo_dec = std::move(mid_dec);
      c_lo = c_mid;
    }
  }
  if (c_hi <= target + slack) return finish(hi_dec, hi, iters);

  // Time-share the states whose decision differs across the bracket.
  struct Switch {
    std::size_t index;
    double mu;
  };
  std::vector<Switch> switches;
  const DualPoint d_lo = at(lo), d_hi = at(hi);
  for (std::size_t i = 0; i < n; ++i) {
    const Action& a = lo_dec[i].best;
    const Action& b = hi_dec[i].best;
    if (a.same_as(b)) continue;
    const double f_lo = a.lagrangian(d_lo) - b.lagrangian(d_lo);
    const double f_hi = a.lagrangian(d_hi) - b.lagrangian(d_hi);
    double mu = hi;
    if (f_lo - f_hi > 0.0) mu = std::clamp(lo + f_lo / (f_lo - f_hi) * (hi - lo), lo, hi);
    switches.push_back({i, mu});
  }
  std::sort(switches.begin(), switches.end(), [](const Switch& x, const Switch& y) {
    return x.mu != y.mu ? x.mu < y.mu : x.index > y.index;
  });

  std::vector<double> share(n, 0.0);
  double c = c_lo;
  double mu_star = hi;
  bool reached = false;
  for (const auto& sw : switches) {
    const Action& a = lo_dec[sw.index].best;
    const Action& b = hi_dec[sw.index].best;
    const double step = states[sw.index].weight * (constraint(b) - constraint(a));
    if (step > 0.0 && c + step >= target) {
      share[sw.index] = std::clamp((target - c) / step, 0.0, 1.0);
      mu_star = sw.mu;
      reached = true;
      break;
    }
    share[sw.index] = 1.0;
    c += step;
  }
  if (!reached) return finish(hi_dec, hi, iters);

  BisectResult r;
  std::vector<PolicyEntry> entries(n);
  r.per_state.resize(n);
  CompensatedSum obj, en, co;
  for (std::size_t i = 0; i < n; ++i) {
    const Action& a = lo_dec[i].best;
    const Action& b = hi_dec[i].best;
    const double t = share[i];
    entries[i] = mix(a, b, t);
    const Totals m{(1.0 - t) * a.objective + t * b.objective, (1.0 - t) * a.energy + t * b.energy,
                   (1.0 - t) * a.cost + t * b.cost};
    r.per_state[i] = m;
    const double w = states[i].weight;
    obj += w * m.objective;
    en += w * m.energy;
    co += w * m.cost;
  }
  r.policy = ModePolicy(std::move(entries));
  r.multiplier = mu_star;
  r.iterations = iters;
  r.totals = {obj.value(), en.value(), co.value()};
  return r;
}

}  // namespace detail

/// Lagrange dual value sum_i w_i max L_i - lambda q_bar (+ beta p_avg).
template <StateSubproblem S>
double dual_function(const FadingEnsemble& ensemble, const S& sub, const DualPoint& d, double q_bar,
                     double p_avg = 0.0) {
  CompensatedSum g;
  for (const auto& s : ensemble.states()) g += s.weight * decide(sub, s, d).value;
  return g.value() - d.lambda * q_bar + d.beta * p_avg;
}

/// Maximizes the objective subject to E[energy] >= q_bar by bisection on the
/// energy multiplier. Throws InfeasibleError when q_bar exceeds the largest
/// achievable energy.
template <StateSubproblem S>
DualSolution bisect_lambda(const FadingEnsemble& ensemble, const S& sub, double q_bar, double tol = 1e-12) {
  if (!(tol > 0.0)) throw UsageError("bisection tolerance must be positive");
  auto r = detail::bisect_multiplier(
      ensemble, sub, [](double mu) { return DualPoint{mu, 0.0}; }, [](const Action& a) { return a.energy; },
      q_bar, tol);
  DualSolution sol;
  sol.lambda = r.multiplier;
  sol.policy = std::move(r.policy);
  sol.objective = r.totals.objective;
  sol.energy = r.totals.energy;
  sol.power = r.totals.cost;
  sol.iterations = r.iterations;
  sol.dual_value = dual_function(ensemble, sub, DualPoint{sol.lambda, 0.0}, q_bar);
  return sol;
}

/// Two-dimensional ellipsoid {z : (z - c)^T P^{-1} (z - c) <= 1}.
class Ellipsoid2 {
 public:
  Ellipsoid2(std::array<double, 2> center, std::array<double, 2> semi_axes)
      : c_(center), p_{semi_axes[0] * semi_axes[0], 0.0, 0.0, semi_axes[1] * semi_axes[1]} {}

  const std::array<double, 2>& center() const { return c_; }
  double volume() const { return std::numbers::pi * std::sqrt(std::max(0.0, det())); }
  double det() const { return p_[0] * p_[3] - p_[1] * p_[2]; }

  /// Keep {z : g.(z - c) + h <= 0}, h >= 0 (deep cut when h > 0).
  /// Returns false when the cut is degenerate or empties the ellipsoid.
  bool cut(std::array<double, 2> g, double h) {
    constexpr double n = 2.0;
    const double pg0 = p_[0] * g[0] + p_[1] * g[1];
    const double pg1 = p_[2] * g[0] + p_[3] * g[1];
    const double gpg = g[0] * pg0 + g[1] * pg1;
    if (!(gpg > 0.0) || !std::isfinite(gpg)) return false;
    const double norm = std::sqrt(gpg);
    const double alpha = std::max(0.0, h / norm);
    if (alpha >= 1.0) return false;
    const double b0 = pg0 / norm, b1 = pg1 / norm;
    const double step = (1.0 + n * alpha) / (n + 1.0);
    c_[0] -= step * b0;
    c_[1] -= step * b1;
    const double scale = n * n / (n * n - 1.0) * (1.0 - alpha * alpha);
    const double shrink = 2.0 * (1.0 + n * alpha) / ((n + 1.0) * (1.0 + alpha));
    p_[0] = scale * (p_[0] - shrink * b0 * b0);
    p_[1] = scale * (p_[1] - shrink * b0 * b1);
    p_[2] = scale * (p_[2] - shrink * b1 * b0);
    p_[3] = scale * (p_[3] - shrink * b1 * b1);
    return det() > 0.0;
  }

 private:
  std::array<double, 2> c_;
  std::array<double, 4> p_;
};

namespace detail {

struct Recovery {
  ModePolicy policy;
  Totals totals;
  bool feasible = false;
};

struct Move {
  std::size_t state;
  Action to;
  Totals delta;
};

/// Pure argmax policy plus time sharing on at most two marginal states,
/// chosen among the states with the smallest Lagrangian gaps, solving the
/// resulting two-variable LP by vertex enumeration.
inline Recovery recover_two_constraints(const FadingEnsemble& ensemble, const std::vector<StateDecision>& dec,
                                        double q_bar, double p_avg, std::size_t marginal_pool = 8) {
  const auto states = ensemble.states();
  const std::size_t n = states.size();
  const Totals base = sum_actions(ensemble, [&](std::size_t i) -> const Action& { return dec[i].best; });
  const double e_slack = 1e-12 * std::max(1.0, std::abs(q_bar));
  const double p_slack = 1e-12 * std::max(1.0, p_avg);
  auto feasible = [&](const Totals& t) { return t.energy >= q_bar - e_slack && t.cost <= p_avg + p_slack; };

  auto differs = [](const Action& a, const Action& b) {
    return a.objective != b.objective || a.energy != b.energy || a.cost != b.cost;
  };
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dec[i].other_count; ++k) {
      if (differs(dec[i].best, dec[i].others[k])) {
        order.push_back(i);
        break;
      }
    }
  }
  const std::size_t pool = std::min(marginal_pool, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(pool), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return dec[a].gap != dec[b].gap ? dec[a].gap < dec[b].gap : a < b;
                    });
  std::vector<Move> moves;
  for (std::size_t k = 0; k < pool; ++k) {
    const std::size_t i = order[k];
    const double w = states[i].weight;
    for (std::size_t j = 0; j < dec[i].other_count; ++j) {
      const Action& to = dec[i].others[j];
      const Action& from = dec[i].best;
      if (!differs(from, to)) continue;
      moves.push_back({i, to,
                       {w * (to.objective - from.objective), w * (to.energy - from.energy),
                        w * (to.cost - from.cost)}});
    }
  }

  double best_obj = -std::numeric_limits<double>::infinity();
  int best_a = -1, best_b = -1;
  double best_ta = 0.0, best_tb = 0.0;
  auto consider = [&](int ia, double ta, int ib, double tb) {
    if (ta < -1e-15 || ta > 1.0 + 1e-15 || tb < -1e-15 || tb > 1.0 + 1e-15) return;
    ta = std::clamp(ta, 0.0, 1.0);
    tb = std::clamp(tb, 0.0, 1.0);
    Totals t = base;
    if (ia >= 0) {
      t.objective += ta * moves[ia].delta.objective;
      t.energy += ta * moves[ia].delta.energy;
      t.cost += ta * moves[ia].delta.cost;
    }
    if (ib >= 0) {
      t.objective += tb * moves[ib].delta.objective;
      t.energy += tb * moves[ib].delta.energy;
      t.cost += tb * moves[ib].delta.cost;
    }
    if (!feasible(t)) return;
    if (t.objective > best_obj + 1e-15) {
      best_obj = t.objective;
      best_a = ia;
      best_b = ib;
      best_ta = ta;
      best_tb = tb;
    }
  };

  consider(-1, 0.0, -1, 0.0);
  const int m = static_cast<int>(moves.size());
  // Single move: endpoints and the points where either constraint is tight.
  for (int a = 0; a < m; ++a) {
    const auto& d = moves[a].delta;
    consider(a, 1.0, -1, 0.0);
    if (d.energy != 0.0) consider(a, (q_bar - base.energy) / d.energy, -1, 0.0);
    if (d.cost != 0.0) consider(a, (p_avg - base.cost) / d.cost, -1, 0.0);
  }
  // Two moves on distinct states: vertices of the box cut by two lines.
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      if (moves[a].state == moves[b].state) continue;
      const auto& da = moves[a].delta;
      const auto& db = moves[b].delta;
      const double re = q_bar - base.energy;
      const double rp = p_avg - base.cost;
      for (double ta : {0.0, 1.0}) {
        if (db.energy != 0.0) consider(a, ta, b, (re - ta * da.energy) / db.energy);
        if (db.cost != 0.0) consider(a, ta, b, (rp - ta * da.cost) / db.cost);
        consider(a, ta, b, 1.0);
      }
      for (double tb : {0.0, 1.0}) {
        if (da.energy != 0.0) consider(a, (re - tb * db.energy) / da.energy, b, tb);
        if (da.cost != 0.0) consider(a, (rp - tb * db.cost) / da.cost, b, tb);
      }
      const double det = da.energy * db.cost - db.energy * da.cost;
      if (det != 0.0) {
        const double ta = (re * db.cost - db.energy * rp) / det;
        const double tb = (da.energy * rp - re * da.cost) / det;
        consider(a, ta, b, tb);
      }
    }
  }

  Recovery r;
  std::vector<PolicyEntry> entries(n);
  for (std::size_t i = 0; i < n; ++i) entries[i] = entry_of(dec[i].best);
  r.totals = base;
  if (best_obj == -std::numeric_limits<double>::infinity()) {
    r.policy = ModePolicy(std::move(entries));
    r.feasible = false;
    return r;
  }
  auto apply = [&](int idx, double t) {
    if (idx < 0 || t <= 0.0) return;
    const auto& mv = moves[idx];
    entries[mv.state] = mix(dec[mv.state].best, mv.to, t);
    r.totals.objective += t * mv.delta.objective;
    r.totals.energy += t * mv.delta.energy;
    r.totals.cost += t * mv.delta.cost;
  };
  apply(best_a, best_ta);
  apply(best_b, best_tb);
  r.policy = ModePolicy(std::move(entries));
  r.feasible = true;
  return r;
}

}  // namespace detail

/// Primal policy from a dual point. Without a budget (single energy
/// constraint) the states tied within `tie_tol` start in their
/// lower-energy action and are moved to the other action from the highest
/// index down until q_bar is met, the last one fractionally; lower indices
/// therefore keep ID. With a budget, up to two marginal states are time
/// shared so that both constraints hold.
template <StateSubproblem S>
ModePolicy recover_primal(const FadingEnsemble& ensemble, const S& sub, const DualPoint& dual, double q_bar,
                          std::optional<PowerBudget> budget = std::nullopt, double tie_tol = 1e-12) {
  const auto states = ensemble.states();
  const std::size_t n = states.size();
  std::vector<StateDecision> dec;
  dec.reserve(n);
  for (const auto& s : states) dec.push_back(decide(sub, s, dual, tie_tol));
  if (budget) return detail::recover_two_constraints(ensemble, dec, q_bar, budget->p_avg).policy;

  std::vector<PolicyEntry> entries(n);
  std::vector<Action> low(n), high(n);
  CompensatedSum energy;
  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < n; ++i) {
    low[i] = high[i] = dec[i].best;
    if (dec[i].tie) {
      for (std::size_t k = 0; k < dec[i].other_count; ++k) {
        const Action& o = dec[i].others[k];
        if (dec[i].value - o.lagrangian(dual) > tie_tol * std::max(1.0, std::abs(dec[i].value))) continue;
        if (o.energy < low[i].energy) low[i] = o;
        if (o.energy > high[i].energy) high[i] = o;
      }
      tied.push_back(i);
    }
    entries[i] = detail::entry_of(low[i]);
    energy += states[i].weight * low[i].energy;
  }
  double e = energy.value();
  for (auto it = tied.rbegin(); it != tied.rend() && e < q_bar; ++it) {
    const std::size_t i = *it;
    const double step = states[i].weight * (high[i].energy - low[i].energy);
    if (step <= 0.0) continue;
    const double t = std::min(1.0, (q_bar - e) / step);
    entries[i] = detail::mix(low[i], high[i], t);
    e += t * step;
  }
  return ModePolicy(std::move(entries));
}

namespace detail {

/// Time share `t` of policy entry `a` against `1 - t` of `b`. Powers within
/// each mode are averaged over that mode's share, which keeps energy and
/// power exact and the rate no smaller.
inline PolicyEntry blend(const PolicyEntry& a, const PolicyEntry& b, double t) {
  PolicyEntry e;
  e.rho = t * a.rho + (1.0 - t) * b.rho;
  auto average = [](double wa, double pa, double wb, double pb) {
    if (wb <= 0.0 || pa == pb) return pa;
    if (wa <= 0.0) return pb;
    return (wa * pa + wb * pb) / (wa + wb);
  };
  e.p_id = average(t * a.rho, a.p_id, (1.0 - t) * b.rho, b.p_id);
  e.p_eh = average(t * (1.0 - a.rho), a.p_eh, (1.0 - t) * (1.0 - b.rho), b.p_eh);
  return e;
}

/// Moves the shares of the states in `frac` (share of `a` against `b`) to a
/// vertex of {energy and cost fixed, 0 <= share <= 1} without lowering the
/// objective, leaving at most two of them fractional.
inline void purify_shares(std::span<const FadingState> states, const std::vector<Totals>& a,
                          const std::vector<Totals>& b, std::vector<double>& share, std::vector<std::size_t> frac) {
  while (frac.size() > 2) {
    const std::size_t k[3] = {frac[frac.size() - 3], frac[frac.size() - 2], frac[frac.size() - 1]};
    std::array<double, 3> e{}, c{}, o{};
    for (int j = 0; j < 3; ++j) {
      const double w = states[k[j]].weight;
      e[j] = w * (a[k[j]].energy - b[k[j]].energy);
      c[j] = w * (a[k[j]].cost - b[k[j]].cost);
      o[j] = w * (a[k[j]].objective - b[k[j]].objective);
    }
    // null direction of the two constraint rows
    std::array<double, 3> d{e[1] * c[2] - e[2] * c[1], e[2] * c[0] - e[0] * c[2], e[0] * c[1] - e[1] * c[0]};
    const double en = std::hypot(e[0], e[1], e[2]), cn = std::hypot(c[0], c[1], c[2]);
    if (std::hypot(d[0], d[1], d[2]) <= 1e-12 * en * cn) {
      const auto& r = en >= cn ? e : c;
      if (r[0] != 0.0 || r[1] != 0.0) {
        d = {r[1], -r[0], 0.0};
      } else {
        d = {1.0, 0.0, 0.0};
      }
    }
    if (o[0] * d[0] + o[1] * d[1] + o[2] * d[2] < 0.0) d = {-d[0], -d[1], -d[2]};
    double step = std::numeric_limits<double>::infinity();
    int hit = -1;
    for (int j = 0; j < 3; ++j) {
      const double room = d[j] > 0.0 ? (1.0 - share[k[j]]) / d[j] : d[j] < 0.0 ? -share[k[j]] / d[j] : step;
      if (room < step) {
        step = room;
        hit = j;
      }
    }
    if (hit < 0) break;
    frac.resize(frac.size() - 3);
    for (int j = 0; j < 3; ++j) {
      double& s = share[k[j]];
      s = j == hit ? (d[j] > 0.0 ? 1.0 : 0.0) : std::clamp(s + step * d[j], 0.0, 1.0);
      if (s > 0.0 && s < 1.0) frac.push_back(k[j]);
    }
  }
}

struct Refined {
  DualPoint dual;
  ModePolicy policy;
  Totals totals;
  double dual_value = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

/// Exact primal-dual pair for the two-constraint problem: for fixed beta the
/// energy multiplier is found by bisection (energy met with equality); beta
/// is bisected on the average power, and the two policies bracketing p_avg
/// are time shared.
template <StateSubproblem S>
Refined refine_by_beta(const FadingEnsemble& ensemble, const S& sub, double q_bar, double p_avg, double beta_hint,
                       double tol, double gap_tol = 0.0, double dual_bound = std::numeric_limits<double>::infinity()) {
  int iters = 0;
  auto inner = [&](double beta) {
    auto r = bisect_multiplier(
        ensemble, sub, [beta](double mu) { return DualPoint{mu, beta}; }, [](const Action& a) { return a.energy; },
        q_bar, tol);
    iters += r.iterations + 1;
    return r;
  };
  auto dual_at = [&](double lambda, double beta) {
    CompensatedSum g;
    const DualPoint d{lambda, beta};
    for (const auto& s : ensemble.states()) g += s.weight * decide(sub, s, d).value;
    return g.value() - lambda * q_bar + beta * p_avg;
  };
  const double p_slack = 1e-12 * std::max(1.0, p_avg);

  Refined out;
  auto lo = inner(0.0);
  if (lo.totals.cost <= p_avg + p_slack) {
    out.dual = {lo.multiplier, 0.0};
    out.policy = std::move(lo.policy);
    out.totals = lo.totals;
    out.dual_value = dual_at(lo.multiplier, 0.0);
    out.iterations = iters;
    return out;
  }
  double b_lo = 0.0;
  double b_hi = beta_hint > 0.0 && std::isfinite(beta_hint) ? beta_hint : 1.0 / p_avg;
  auto hi = inner(b_hi);
  while (hi.totals.cost > p_avg + p_slack) {
    b_lo = b_hi;
    lo = std::move(hi);
    b_hi *= 2.0;
    if (!std::isfinite(b_hi)) throw ConvergenceError("no finite power multiplier meets p_avg", iters, 0.0);
    hi = inner(b_hi);
  }
  if (b_lo == 0.0 && b_hi > 0.0) {
    // shrink from the hint downwards before plain bisection
    for (double b = 0.5 * b_hi; b > 1e-300; b *= 0.5) {
      auto m = inner(b);
      if (m.totals.cost > p_avg + p_slack) {
        b_lo = b;
        lo = std::move(m);
        break;
      }
      b_hi = b;
      hi = std::move(m);
    }
  }
  auto share_of_lo = [&] {
    const double span = lo.totals.cost - hi.totals.cost;
    return span > 0.0 ? std::clamp((p_avg - hi.totals.cost) / span, 0.0, 1.0) : 0.0;
  };
  auto closed = [&] {
    if (!(gap_tol > 0.0)) return false;
    const double t = share_of_lo();
    const double primal = t * lo.totals.objective + (1.0 - t) * hi.totals.objective;
    const double bound = std::min({dual_bound, dual_at(lo.multiplier, b_lo), dual_at(hi.multiplier, b_hi)});
    return bound - primal <= gap_tol * std::abs(bound) + 1e-12;
  };
  for (int k = 0; k < 200 && b_hi - b_lo > 1e-15 * b_hi && !closed(); ++k) {
    const double mid = 0.5 * (b_lo + b_hi);
    if (mid <= b_lo || mid >= b_hi) break;
    auto m = inner(mid);
    if (m.totals.cost > p_avg + p_slack) {
      b_lo = mid;
      lo = std::move(m);
    } else {
      b_hi = mid;
      hi = std::move(m);
    }
  }

  const double t = share_of_lo();
  const std::size_t n = ensemble.size();
  const auto states = ensemble.states();
  std::vector<double> share(n, t);
  if (t > 0.0 && t < 1.0) {
    // only a differing mode share makes a state fractional; differing powers
    // in one mode are averaged instead
    std::vector<std::size_t> mixed;
    for (std::size_t i = 0; i < n; ++i) {
      if (lo.policy[i].rho != hi.policy[i].rho) mixed.push_back(i);
    }
    purify_shares(states, lo.per_state, hi.per_state, share, std::move(mixed));
  }
  std::vector<PolicyEntry> entries(n);
  CompensatedSum obj, en, co;
  for (std::size_t i = 0; i < n; ++i) {
    entries[i] = blend(lo.policy[i], hi.policy[i], share[i]);
    const double s = share[i], w = states[i].weight;
    const Totals& a = lo.per_state[i];
    const Totals& b = hi.per_state[i];
    obj += w * (s * a.objective + (1.0 - s) * b.objective);
    en += w * (s * a.energy + (1.0 - s) * b.energy);
    co += w * (s * a.cost + (1.0 - s) * b.cost);
  }
  out.policy = ModePolicy(std::move(entries));
  out.totals = {obj.value(), en.value(), co.value()};
  out.dual = {t * lo.multiplier + (1.0 - t) * hi.multiplier, b_hi};
  out.dual_value = std::min(dual_at(lo.multiplier, b_lo), dual_at(hi.multiplier, b_hi));
  out.iterations = iters;
  return out;
}

}  // namespace detail

struct EllipsoidTrace {
  std::vector<double> volumes;
};

/// Minimizes the dual over (lambda, beta) >= 0 with a deep-cut ellipsoid
/// method; the subgradient is (E[Q] - q_bar, p_avg - E[p]). After every
/// iteration a feasible primal policy is recovered from the current point;
/// iteration stops once the best dual value is within `gap_tol` (relative)
/// of the best recovered primal objective.
template <PowerControlledSubproblem S>
DualSolution ellipsoid_duals(const FadingEnsemble& ensemble, const S& sub, double q_bar, const PowerBudget& budget,
                             double gap_tol = 1e-4, int max_iter = 500, EllipsoidTrace* trace = nullptr) {
  budget.validate();
  const double cap = sub.energy_capacity(ensemble, budget);
  const double slack = 1e-12 * std::max(1.0, std::abs(cap));
  if (q_bar > cap + slack) {
    throw InfeasibleError("target " + format_real(q_bar) + " exceeds achievable maximum " + format_real(cap), cap);
  }
  const auto states = ensemble.states();

  if (q_bar >= cap - slack) {
    DualSolution sol;
    sol.policy = sub.capacity_policy(ensemble, budget);
    sol.lambda = std::numeric_limits<double>::infinity();
    sol.beta = 0.0;
    sol.objective = 0.0;
    sol.energy = cap;
    CompensatedSum p;
    for (std::size_t i = 0; i < states.size(); ++i) p += states[i].weight * sol.policy[i].average_power();
    sol.power = p.value();
    sol.dual_value = 0.0;
    return sol;
  }

  const DualPoint scale = sub.dual_scale(budget);
  const double r = 9.0 * std::sqrt(2.0);
  Ellipsoid2 ell({scale.lambda, scale.beta}, {r * scale.lambda, r * scale.beta});
  if (trace) trace->volumes.push_back(ell.volume());

  double best_dual = std::numeric_limits<double>::infinity();
  DualPoint best_point{};
  double best_primal = -std::numeric_limits<double>::infinity();
  detail::Recovery best_rec;
  int it = 0;
  for (; it < max_iter; ++it) {
    const auto c = ell.center();
    std::array<double, 2> g{};
    double h = 0.0;
    if (c[0] < 0.0) {
      g = {-1.0, 0.0};
      h = -c[0];
    } else if (c[1] < 0.0) {
      g = {0.0, -1.0};
      h = -c[1];
    } else {
      const DualPoint d{c[0], c[1]};
      const auto dec = detail::decide_all(sub, ensemble, d);
      CompensatedSum gv;
      for (std::size_t i = 0; i < states.size(); ++i) gv += states[i].weight * dec[i].value;
      const Totals t = detail::sum_actions(ensemble, [&](std::size_t i) -> const Action& { return dec[i].best; });
      const double value = gv.value() - d.lambda * q_bar + d.beta * budget.p_avg;
      if (value < best_dual) {
        best_dual = value;
        best_point = d;
      }
      auto rec = detail::recover_two_constraints(ensemble, dec, q_bar, budget.p_avg);
      if (rec.feasible && rec.totals.objective > best_primal) {
        best_primal = rec.totals.objective;
        best_rec = std::move(rec);
      }
      if (best_dual - best_primal <= gap_tol * std::abs(best_dual) + 1e-12) {
        ++it;
        break;
      }
      g = {t.energy - q_bar, budget.p_avg - t.cost};
      h = std::max(0.0, value - best_dual);
    }
    if (!ell.cut(g, h)) {
      ++it;
      break;
    }
    if (trace) trace->volumes.push_back(ell.volume());
  }

  const bool closed = best_dual - best_primal <= gap_tol * std::abs(best_dual) + 1e-12;
  DualPoint point = best_point;
  Totals totals = best_rec.totals;
  ModePolicy policy = std::move(best_rec.policy);
  if (!closed) {
    // The cuts locate the multipliers; an exact time-shared pair closes the gap.
    auto ref = detail::refine_by_beta(ensemble, sub, q_bar, budget.p_avg, best_point.beta, 1e-13,
                                            0.5 * gap_tol, best_dual);
    it += ref.iterations;
    best_dual = std::min(best_dual, ref.dual_value);
    if (ref.totals.objective > best_primal) {
      best_primal = ref.totals.objective;
      point = ref.dual;
      totals = ref.totals;
      policy = std::move(ref.policy);
    }
  }
  const double gap = best_dual - best_primal;
  if (!(gap <= gap_tol * std::abs(best_dual) + 1e-12)) {
    throw ConvergenceError("ellipsoid stopped after " + std::to_string(it) + " iterations with duality gap " +
                               format_real(gap) + " (dual " + format_real(best_dual) + ", primal " +
                               format_real(best_primal) + ")",
                           it, gap);
  }
  DualSolution sol;
  sol.lambda = point.lambda;
  sol.beta = point.beta;
  sol.policy = std::move(policy);
  sol.objective = totals.objective;
  sol.energy = totals.energy;
  sol.power = totals.cost;
  sol.dual_value = best_dual;
  sol.iterations = it;
  return sol;
}

}  // namespace swipt
