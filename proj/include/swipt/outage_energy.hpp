#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "swipt/dual.hpp"
#include "swipt/errors.hpp"
#include "swipt/fading.hpp"
#include "swipt/link.hpp"
#include "swipt/numeric.hpp"
#include "swipt/power_control.hpp"

namespace swipt {

/// Outage-energy per-state problem without CSIT: constant power P, choose ID
/// (objective = non-outage indicator) or EH (energy alpha (hP + I)).
/// EH is listed first so that exact ties go to EH.
struct OutageNoCsit {
  double power;
  LinkParams params;

  Candidates candidates(const FadingState& s, const DualPoint&) const {
    Candidates c;
    c.push({false, power, 0.0, energy_at(s, power, params.alpha), power});
    c.push({true, power, static_cast<double>(outage_indicator(s, power, params.r0, params.sigma2)), 0.0, power});
    return c;
  }
};

/// Outage-energy per-state problem with CSIT. EH either at peak power or
/// silent; ID at the truncated-inversion power when it fits under the peak.
struct OutageCsit {
  PowerBudget budget;
  LinkParams params;

  Candidates candidates(const FadingState& s, const DualPoint&) const {
    Candidates c;
    if (s.h > 0.0) c.push({false, budget.p_peak, 0.0, energy_at(s, budget.p_peak, params.alpha), budget.p_peak});
    c.push({false, 0.0, 0.0, energy_at(s, 0.0, params.alpha), 0.0});
    const double pbar = inversion_power(s, params);
    if (pbar <= budget.p_peak) c.push({true, pbar, 1.0, 0.0, pbar});
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

struct OutageRuleNoCsit {
  double rho = 0.0;
  double sinr_margin = 0.0;    // h/(I + sigma2) - (e^{r0} - 1)/P
  double energy_margin = 0.0;  // 1 - lambda alpha (hP + I)
  bool tie = false;
};

inline OutageRuleNoCsit oe_rule_no_csit(const FadingState& s, double lambda, double power, const LinkParams& params) {
  if (!(lambda >= 0.0)) throw UsageError("lambda must be nonnegative");
  if (!(power > 0.0)) throw UsageError("transmit power must be positive");
  const auto d = decide(OutageNoCsit{power, params}, s, DualPoint{lambda, 0.0});
  OutageRuleNoCsit r;
  r.rho = d.rho();
  r.tie = d.gap == 0.0;
  r.sinr_margin = sinr(s, params.sigma2) - params.snr_target() / power;
  r.energy_margin = 1.0 - lambda * energy_at(s, power, params.alpha);
  return r;
}

inline StateDecision oe_rule_csit(const FadingState& s, double lambda, double beta, const PowerBudget& budget,
                                  const LinkParams& params) {
  if (!(lambda >= 0.0) || !(beta >= 0.0)) throw UsageError("dual variables must be nonnegative");
  return decide(OutageCsit{budget, params}, s, DualPoint{lambda, beta});
}

namespace detail {

inline DualSolution with_metrics(DualSolution sol, const FadingEnsemble& ensemble, const PowerBudget& budget,
                                 const LinkParams& params) {
  sol.metrics = evaluate(ensemble, sol.policy, budget, params);
  return sol;
}

}  // namespace detail

inline DualSolution oe_boundary_no_csit(const FadingEnsemble& ensemble, double power, const LinkParams& params,
                                        double q_bar, const SolverOptions& opt = {}) {
  params.validate();
  if (!(power > 0.0)) throw ConfigError("transmit power must be positive");
  auto sol = bisect_lambda(ensemble, OutageNoCsit{power, params}, q_bar, opt.tol);
  return detail::with_metrics(std::move(sol), ensemble, PowerBudget{power, power}, params);
}

inline DualSolution oe_boundary_csit(const FadingEnsemble& ensemble, const PowerBudget& budget,
                                     const LinkParams& params, double q_bar, const SolverOptions& opt = {},
                                     EllipsoidTrace* trace = nullptr) {
  params.validate();
  auto sol = ellipsoid_duals(ensemble, OutageCsit{budget, params}, q_bar, budget, opt.gap_tol, opt.max_iter, trace);
  return detail::with_metrics(std::move(sol), ensemble, budget, params);
}

struct OEThresholds {
  double h1 = 0.0;     // on h/(I + sigma2)
  double h2 = 0.0;     // on h
  double h3 = 0.0;     // on h, I = 0
  double h_off = 0.0;  // h1 sigma2: below it the state stays silent when I = 0
  // The {off, ID, EH} partition on h holds when h2 >= h_off.
  bool partition_applies = false;
};

/// Mode thresholds for interference-free states at dual point (lambda, beta).
inline OEThresholds oe_mode_thresholds(double lambda, double beta, const PowerBudget& budget,
                                       const LinkParams& params) {
  if (!(lambda > 0.0)) throw UsageError("lambda must be positive");
  if (!(beta >= 0.0)) throw UsageError("beta must be nonnegative");
  const double c = params.snr_target();
  const double la = lambda * params.alpha;
  OEThresholds t;
  t.h1 = std::max(beta * c, c / budget.p_peak);
  t.h2 = beta / la;
  t.h_off = t.h1 * params.sigma2;
  t.partition_applies = t.h2 >= t.h_off;

  // la P h^2 - (beta P + 1) h + beta c sigma2 = 0, larger root.
  const double a = la * budget.p_peak;
  const double b = beta * budget.p_peak + 1.0;
  const double k = beta * c * params.sigma2;
  const double disc = b * b - 4.0 * a * k;
  if (disc < 0.0) {
    throw DegenerateError("no real crossover between ID and EH (discriminant " + format_real(disc) + ")");
  }
  const double q = 0.5 * (b + std::sqrt(disc));
  t.h3 = q / a;
  return t;
}

struct OEVertices {
  double delta_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  // CSIT only
  double apc_beta = 0.0;  // APC multiplier of the outage-only optimum
  double h_peak = 0.0;    // smallest h at peak power in the Q_max policy
  double h_residual = std::numeric_limits<double>::infinity();  // same, for the residual fill at Q_min
  ModePolicy delta_max_policy;
  ModePolicy q_max_policy;
};

inline OEVertices oe_vertices_no_csit(const FadingEnsemble& ensemble, double power, const LinkParams& params) {
  if (!(power > 0.0)) throw UsageError("transmit power must be positive");
  CompensatedSum delta, qmin, qmax;
  for (const auto& s : ensemble.states()) {
    const double e = energy_at(s, power, params.alpha);
    qmax += s.weight * e;
    if (outage_indicator(s, power, params.r0, params.sigma2)) {
      delta += s.weight;
    } else {
      qmin += s.weight * e;
    }
  }
  OEVertices v;
  v.delta_max = delta.value();
  v.q_min = qmin.value();
  v.q_max = qmax.value();
  v.delta_max_policy = ModePolicy(std::vector<PolicyEntry>(ensemble.size(), PolicyEntry{1.0, power, power}));
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    if (!outage_indicator(ensemble[i], power, params.r0, params.sigma2)) v.delta_max_policy[i].rho = 0.0;
  }
  v.q_max_policy = ModePolicy::constant(ensemble.size(), 0.0, power);
  v.h_peak = 0.0;
  return v;
}

namespace detail {

/// Outage-only power control: ID at the inversion power or silent.
struct TruncatedInversion {
  PowerBudget budget;
  LinkParams params;

  Candidates candidates(const FadingState& s, const DualPoint&) const {
    Candidates c;
    c.push({false, 0.0, 0.0, 0.0, 0.0});
    const double pbar = inversion_power(s, params);
    if (pbar <= budget.p_peak) c.push({true, pbar, 1.0, 0.0, pbar});
    return c;
  }
};

struct InversionResult {
  double delta = 0.0;
  double power = 0.0;
  double beta = 0.0;
  ModePolicy policy;
};

/// Maximal non-outage probability under APC and PPC: bisection on the APC
/// multiplier, the cheapest states to invert served first.
inline InversionResult truncated_inversion(const FadingEnsemble& ensemble, const PowerBudget& budget,
                                           const LinkParams& params, double tol = 1e-12) {
  auto r = bisect_multiplier(
      ensemble, TruncatedInversion{budget, params}, [](double mu) { return DualPoint{0.0, mu}; },
      [](const Action& a) { return -a.cost; }, -budget.p_avg, tol);
  return {r.totals.objective, r.totals.cost, r.multiplier, std::move(r.policy)};
}

}  // namespace detail

inline OEVertices oe_vertices_csit(const FadingEnsemble& ensemble, const PowerBudget& budget,
                                   const LinkParams& params) {
  budget.validate();
  OEVertices v;
  v.q_max = csit_energy_capacity(ensemble, budget, params, &v.q_max_policy, &v.h_peak);

  auto inv = detail::truncated_inversion(ensemble, budget, params);
  v.delta_max = inv.delta;
  v.apc_beta = inv.beta;

  const std::size_t n = ensemble.size();
  std::vector<double> share(n);
  for (std::size_t i = 0; i < n; ++i) share[i] = ensemble[i].weight * (1.0 - inv.policy[i].rho);
  const double residual = std::max(0.0, budget.p_avg - inv.power);
  const PeakFill fill = peak_fill(ensemble, share, residual, budget.p_peak);
  v.h_residual = fill.h_threshold;

  std::vector<PolicyEntry> entries(n);
  CompensatedSum q;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = ensemble[i];
    const double rho = inv.policy[i].rho;
    entries[i] = {rho, rho > 0.0 ? inv.policy[i].p_id : 0.0, fill.power[i]};
    q += share[i] * energy_at(s, fill.power[i], params.alpha);
  }
  v.q_min = q.value();
  v.delta_max_policy = ModePolicy(std::move(entries));
  return v;
}

/// Q_min as a function of P for independent exponential h (rate lambda1)
/// and I (rate lambda2), no CSIT, alpha = 1.
inline double qmin_closed_form(double power, double lambda1, double lambda2, double r0, double sigma2) {
  if (!(power > 0.0) || !(lambda1 > 0.0) || !(lambda2 > 0.0) || !(r0 > 0.0) || !(sigma2 > 0.0)) {
    throw UsageError("closed-form Q_min needs positive P, rates, r0 and sigma2");
  }
  const double c = std::expm1(r0);
  const double d = lambda2 * power + lambda1 * c;
  const double head = lambda2 * std::exp(-lambda1 * c * sigma2 / power) * power / d;
  const double tail = std::exp(r0) * power / d + power / lambda1 + c * sigma2;
  return -head * tail + 1.0 / lambda2 + power / lambda1;
}

}  // namespace swipt
