#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "swipt/dual.hpp"
#include "swipt/errors.hpp"
#include "swipt/fading.hpp"
#include "swipt/link.hpp"
#include "swipt/numeric.hpp"
#include "swipt/outage_energy.hpp"
#include "swipt/power_control.hpp"

namespace swipt {

/// Rate-energy per-state problem without CSIT. EH first: ties go to EH.
struct RateNoCsit {
  double power;
  LinkParams params;

  Candidates candidates(const FadingState& s, const DualPoint&) const {
    Candidates c;
    c.push({false, power, 0.0, energy_at(s, power, params.alpha), power});
    c.push({true, power, rate_at(s, power, params.sigma2), 0.0, power});
    return c;
  }
};

/// Rate-energy per-state problem with CSIT: ID at the water-filling level
/// for the current beta, EH at peak power or silent.
struct RateCsit {
  PowerBudget budget;
  LinkParams params;

  Candidates candidates(const FadingState& s, const DualPoint& d) const {
    Candidates c;
    if (s.h > 0.0) c.push({false, budget.p_peak, 0.0, energy_at(s, budget.p_peak, params.alpha), budget.p_peak});
    c.push({false, 0.0, 0.0, energy_at(s, 0.0, params.alpha), 0.0});
    const double p = waterfill_power(s, d.beta, budget, params);
    if (p > 0.0) c.push({true, p, rate_at(s, p, params.sigma2), 0.0, p});
    return c;
  }

  double energy_capacity(const FadingEnsemble& e, const PowerBudget& b) const {
    return csit_energy_capacity(e, b, params);
  }
  ModePolicy capacity_policy(const FadingEnsemble& e, const PowerBudget& b) const {
    ModePolicy p;
    csit_energy_capacity(e, b, params, &p);
    return p;
  }
  DualPoint dual_scale(const PowerBudget& b) const { return {1.0 / params.sigma2, 1.0 / b.p_avg}; }
};

inline StateDecision re_rule_no_csit(const FadingState& s, double lambda, double power, const LinkParams& params) {
  if (!(lambda >= 0.0)) throw UsageError("lambda must be nonnegative");
  return decide(RateNoCsit{power, params}, s, DualPoint{lambda, 0.0});
}

inline StateDecision re_rule_csit(const FadingState& s, double lambda, double beta, const PowerBudget& budget,
                                  const LinkParams& params) {
  if (!(lambda >= 0.0) || !(beta >= 0.0)) throw UsageError("dual variables must be nonnegative");
  return decide(RateCsit{budget, params}, s, DualPoint{lambda, beta});
}

inline DualSolution re_boundary_no_csit(const FadingEnsemble& ensemble, double power, const LinkParams& params,
                                        double q_bar, const SolverOptions& opt = {}) {
  params.validate();
  if (!(power > 0.0)) throw ConfigError("transmit power must be positive");
  auto sol = bisect_lambda(ensemble, RateNoCsit{power, params}, q_bar, opt.tol);
  return detail::with_metrics(std::move(sol), ensemble, PowerBudget{power, power}, params);
}

inline DualSolution re_boundary_csit(const FadingEnsemble& ensemble, const PowerBudget& budget,
                                     const LinkParams& params, double q_bar, const SolverOptions& opt = {},
                                     EllipsoidTrace* trace = nullptr) {
  params.validate();
  auto sol = ellipsoid_duals(ensemble, RateCsit{budget, params}, q_bar, budget, opt.gap_tol, opt.max_iter, trace);
  return detail::with_metrics(std::move(sol), ensemble, budget, params);
}

/// Largest h where ID (water-filling, I = 0) and peak-power EH are equally
/// good: root of log(h/(b s)) - 1 + b s/h - l a h P + b P. Returns beta sigma2
/// when the ID interval is empty.
inline double h4_threshold(double lambda, double beta, const PowerBudget& budget, const LinkParams& params) {
  if (!(lambda > 0.0)) throw UsageError("lambda must be positive");
  if (!(beta > 0.0) || 1.0 / beta > budget.p_peak) throw UsageError("h4 needs 1/beta <= p_peak");
  const double bs = beta * params.sigma2;
  const double la = lambda * params.alpha;
  auto f = [&](double h) { return std::log(h / bs) - 1.0 + bs / h - la * h * budget.p_peak + beta * budget.p_peak; };
  double lo = std::max(beta / la, bs);
  if (!(f(lo) > 0.0)) return bs;
  double hi = 2.0 * lo;
  while (f(hi) >= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw ConvergenceError("h4 bracket diverged", 0, 0.0);
  }
  for (int k = 0; k < 400 && hi - lo > 1e-15 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct REThresholds {
  double h_off = 0.0;  // beta sigma2
  double h4 = 0.0;
  // {off, ID, EH} on h holds when beta/(lambda alpha) >= beta sigma2.
  bool partition_applies = false;
};

inline REThresholds re_mode_thresholds(double lambda, double beta, const PowerBudget& budget,
                                       const LinkParams& params) {
  REThresholds t;
  t.h_off = beta * params.sigma2;
  t.h4 = h4_threshold(lambda, beta, budget, params);
  t.partition_applies = beta / (lambda * params.alpha) >= t.h_off;
  return t;
}

struct REVertices {
  double rate_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  double apc_beta = 0.0;  // CSIT water level multiplier
  ModePolicy rate_max_policy;
  ModePolicy q_max_policy;
};

namespace detail {

inline double waterfill_usage(const FadingEnsemble& ensemble, double beta, const PowerBudget& budget,
                              const LinkParams& params) {
  CompensatedSum p;
  for (const auto& s : ensemble.states()) p += s.weight * waterfill_power(s, beta, budget, params);
  return p.value();
}

/// APC multiplier of the pure water-filling policy (0 when the peak binds first).
inline double waterfill_level(const FadingEnsemble& ensemble, const PowerBudget& budget, const LinkParams& params) {
  if (waterfill_usage(ensemble, 0.0, budget, params) <= budget.p_avg) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (waterfill_usage(ensemble, hi, budget, params) > budget.p_avg) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw ConvergenceError("water level bracket diverged", 0, 0.0);
  }
  for (int k = 0; k < 300 && hi - lo > 1e-16 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (waterfill_usage(ensemble, mid, budget, params) > budget.p_avg) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

}  // namespace detail

/// Extreme points of the R-E region. Without CSIT the transmitter always
/// uses budget.p_avg.
inline REVertices re_vertices(const FadingEnsemble& ensemble, const PowerBudget& budget, const LinkParams& params,
                              bool csit) {
  budget.validate();
  const std::size_t n = ensemble.size();
  REVertices v;
  if (!csit) {
    const double p = budget.p_avg;
    CompensatedSum r, q;
    for (const auto& s : ensemble.states()) {
      r += s.weight * rate_at(s, p, params.sigma2);
      q += s.weight * energy_at(s, p, params.alpha);
    }
    v.rate_max = r.value();
    v.q_max = q.value();
    v.q_min = 0.0;
    v.rate_max_policy = ModePolicy::constant(n, 1.0, p);
    v.q_max_policy = ModePolicy::constant(n, 0.0, p);
    return v;
  }
  v.q_max = csit_energy_capacity(ensemble, budget, params, &v.q_max_policy);
  v.apc_beta = detail::waterfill_level(ensemble, budget, params);
  std::vector<PolicyEntry> entries(n);
  CompensatedSum r, q;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = ensemble[i];
    const double p = waterfill_power(s, v.apc_beta, budget, params);
    if (p > 0.0) {
      entries[i] = {1.0, p, p};
      r += s.weight * rate_at(s, p, params.sigma2);
    } else {
      // below the water line: silent, harvest interference
      entries[i] = {0.0, 0.0, 0.0};
      q += s.weight * energy_at(s, 0.0, params.alpha);
    }
  }
  v.rate_max = r.value();
  v.q_min = q.value();
  v.rate_max_policy = ModePolicy(std::move(entries));
  return v;
}

}  // namespace swipt
