#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "swipt/errors.hpp"
#include "swipt/fading.hpp"
#include "swipt/link.hpp"
#include "swipt/numeric.hpp"
#include "swipt/power_control.hpp"

namespace swipt {

enum class BaselineKind { periodic, interference, sinr };
enum class Objective { outage, rate };

inline std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::periodic: return "periodic";
    case BaselineKind::interference: return "interference";
    case BaselineKind::sinr: return "sinr";
  }
  return "?";
}

struct BaselineSpec {
  BaselineKind kind = BaselineKind::periodic;
  double calibrated_param = 0.0;  // theta, I_thr or Gamma_thr
};

struct BaselineResult {
  ModePolicy policy;
  BaselineSpec spec;
  Metrics metrics;
};

namespace detail {

/// EH order of the threshold rules: the first states in the list switch to
/// EH first as the threshold moves.
inline std::vector<std::size_t> eh_order(const FadingEnsemble& ensemble, BaselineKind kind, double sigma2) {
  std::vector<std::size_t> order(ensemble.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (kind == BaselineKind::interference) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ensemble[a].interference > ensemble[b].interference;
    });
  } else {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sinr(ensemble[a], sigma2) < sinr(ensemble[b], sigma2);
    });
  }
  return order;
}

inline double threshold_of(const FadingState& s, BaselineKind kind, double sigma2) {
  return kind == BaselineKind::interference ? s.interference : sinr(s, sigma2);
}

/// Mode shares for a continuous position `pos` in [0, n] along `order`:
/// the first floor(pos) states EH, the next one EH for the fractional rest.
inline std::vector<double> rho_at_position(std::span<const std::size_t> order, double pos) {
  std::vector<double> rho(order.size(), 1.0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double eh = std::clamp(pos - static_cast<double>(k), 0.0, 1.0);
    rho[order[k]] = 1.0 - eh;
  }
  return rho;
}

inline void check_target(double q_bar, double q_max) {
  if (!(q_bar >= 0.0)) throw UsageError("energy target must be nonnegative");
  if (q_bar > q_max * (1.0 + 1e-12)) {
    throw InfeasibleError("target " + format_real(q_bar) + " exceeds achievable maximum " + format_real(q_max), q_max);
  }
}

/// Calibrates a threshold rule at constant power: walks the EH order
/// accumulating energy and splits the marginal state.
inline BaselineResult threshold_no_csit(const FadingEnsemble& ensemble, double power, const LinkParams& params,
                                        double q_bar, BaselineKind kind) {
  const std::size_t n = ensemble.size();
  CompensatedSum qmax;
  for (const auto& s : ensemble.states()) qmax += s.weight * energy_at(s, power, params.alpha);
  check_target(q_bar, qmax.value());

  BaselineResult r;
  r.spec.kind = kind;
  r.spec.calibrated_param =
      kind == BaselineKind::interference ? std::numeric_limits<double>::infinity() : 0.0;
  std::vector<PolicyEntry> entries(n, PolicyEntry{1.0, power, power});
  const auto order = eh_order(ensemble, kind, params.sigma2);
  double q = 0.0;
  for (std::size_t i : order) {
    if (q >= q_bar) break;
    const double e = ensemble[i].weight * energy_at(ensemble[i], power, params.alpha);
    const double t = e > 0.0 ? std::min(1.0, (q_bar - q) / e) : 1.0;
    entries[i].rho = 1.0 - t;
    q += t * e;
    r.spec.calibrated_param = threshold_of(ensemble[i], kind, params.sigma2);
  }
  r.policy = ModePolicy(std::move(entries));
  r.metrics = evaluate(ensemble, r.policy, PowerBudget{power, power}, params);
  return r;
}

}  // namespace detail

/// Uniform time split: EH for a share theta = q_bar / Q_max of every block.
inline BaselineResult periodic_policy(const FadingEnsemble& ensemble, double power, const LinkParams& params,
                                      double q_bar) {
  CompensatedSum qmax;
  for (const auto& s : ensemble.states()) qmax += s.weight * energy_at(s, power, params.alpha);
  detail::check_target(q_bar, qmax.value());
  const double theta = qmax.value() > 0.0 ? std::min(1.0, q_bar / qmax.value()) : 0.0;
  BaselineResult r;
  r.spec = {BaselineKind::periodic, theta};
  r.policy = ModePolicy::constant(ensemble.size(), 1.0 - theta, power);
  r.metrics = evaluate(ensemble, r.policy, PowerBudget{power, power}, params);
  return r;
}

/// EH when I > I_thr. The reported threshold is the interference of the
/// marginal (possibly time-shared) state; infinity when q_bar = 0.
inline BaselineResult interference_policy(const FadingEnsemble& ensemble, double power, const LinkParams& params,
                                          double q_bar) {
  return detail::threshold_no_csit(ensemble, power, params, q_bar, BaselineKind::interference);
}

/// ID when h/(I + sigma2) > Gamma_thr.
inline BaselineResult sinr_policy(const FadingEnsemble& ensemble, double power, const LinkParams& params,
                                  double q_bar) {
  return detail::threshold_no_csit(ensemble, power, params, q_bar, BaselineKind::sinr);
}

/// Pure threshold policy at a given parameter, for calibration maps.
inline ModePolicy baseline_at(const FadingEnsemble& ensemble, double power, const LinkParams& params,
                              const BaselineSpec& spec) {
  const std::size_t n = ensemble.size();
  std::vector<PolicyEntry> entries(n, PolicyEntry{1.0, power, power});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = ensemble[i];
    switch (spec.kind) {
      case BaselineKind::periodic: entries[i].rho = 1.0 - spec.calibrated_param; break;
      case BaselineKind::interference: entries[i].rho = s.interference > spec.calibrated_param ? 0.0 : 1.0; break;
      case BaselineKind::sinr: entries[i].rho = sinr(s, params.sigma2) > spec.calibrated_param ? 1.0 : 0.0; break;
    }
  }
  return ModePolicy(std::move(entries));
}

namespace detail {

/// Powers for fixed mode shares under APC and PPC: ID first (greedy whole
/// state inversion for outage, water-filling for rate), the remaining
/// budget at peak power to EH shares with the largest h.
inline ModePolicy csit_powers(const FadingEnsemble& ensemble, std::span<const double> rho, const PowerBudget& budget,
                              const LinkParams& params, Objective objective) {
  const std::size_t n = ensemble.size();
  std::vector<PolicyEntry> entries(n);
  for (std::size_t i = 0; i < n; ++i) entries[i].rho = rho[i];
  double used = 0.0;
  if (objective == Objective::outage) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i) {
      if (rho[i] > 0.0 && inversion_power(ensemble[i], params) <= budget.p_peak) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return inversion_power(ensemble[a], params) < inversion_power(ensemble[b], params);
    });
    CompensatedSum u;
    for (std::size_t i : order) {
      const double p = inversion_power(ensemble[i], params);
      const double cost = ensemble[i].weight * rho[i] * p;
      if (u.value() + cost > budget.p_avg * (1.0 + 1e-12)) break;
      u += cost;
      entries[i].p_id = p;
    }
    used = u.value();
  } else {
    auto usage = [&](double beta) {
      CompensatedSum u;
      for (std::size_t i = 0; i < n; ++i) {
        if (rho[i] > 0.0) u += ensemble[i].weight * rho[i] * waterfill_power(ensemble[i], beta, budget, params);
      }
      return u.value();
    };
    double beta = 0.0;
    if (usage(0.0) > budget.p_avg) {
      double lo = 0.0, hi = 1.0;
      while (usage(hi) > budget.p_avg) {
        lo = hi;
        hi *= 2.0;
      }
      for (int k = 0; k < 300 && hi - lo > 1e-16 * hi; ++k) {
        const double mid = 0.5 * (lo + hi);
        (usage(mid) > budget.p_avg ? lo : hi) = mid;
      }
      beta = hi;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (rho[i] > 0.0) entries[i].p_id = waterfill_power(ensemble[i], beta, budget, params);
    }
    used = usage(beta);
  }
  std::vector<double> share(n);
  for (std::size_t i = 0; i < n; ++i) share[i] = ensemble[i].weight * (1.0 - rho[i]);
  const PeakFill fill = peak_fill(ensemble, share, budget.p_avg - used, budget.p_peak);
  for (std::size_t i = 0; i < n; ++i) entries[i].p_eh = fill.power[i];
  return ModePolicy(std::move(entries));
}

}  // namespace detail

/// A switching baseline with CSIT power control. The switching parameter is
/// recalibrated by bisection so that E[Q] >= q_bar; E[p] <= p_avg holds by
/// construction.
inline BaselineResult baseline_with_csit_power(const FadingEnsemble& ensemble, const PowerBudget& budget,
                                               const LinkParams& params, double q_bar, BaselineKind kind,
                                               Objective objective) {
  budget.validate();
  if (!(q_bar >= 0.0)) throw UsageError("energy target must be nonnegative");
  const std::size_t n = ensemble.size();
  std::vector<std::size_t> order;
  double top = 1.0;
  if (kind != BaselineKind::periodic) {
    order = detail::eh_order(ensemble, kind, params.sigma2);
    top = static_cast<double>(n);
  }
  auto rho_at = [&](double pos) {
    if (kind == BaselineKind::periodic) return std::vector<double>(n, 1.0 - pos);
    return detail::rho_at_position(order, pos);
  };
  auto at = [&](double pos) {
    BaselineResult r;
    r.policy = detail::csit_powers(ensemble, rho_at(pos), budget, params, objective);
    r.metrics = evaluate(ensemble, r.policy, budget, params);
    r.spec.kind = kind;
    if (kind == BaselineKind::periodic) {
      r.spec.calibrated_param = pos;
    } else if (pos <= 0.0) {
      r.spec.calibrated_param = kind == BaselineKind::interference ? std::numeric_limits<double>::infinity() : 0.0;
    } else {
      const std::size_t k = std::min(n - 1, static_cast<std::size_t>(std::ceil(pos)) - 1);
      r.spec.calibrated_param = detail::threshold_of(ensemble[order[k]], kind, params.sigma2);
    }
    return r;
  };

  auto lo = at(0.0);
  if (lo.metrics.q_avg >= q_bar) return lo;
  auto hi = at(top);
  if (hi.metrics.q_avg < q_bar * (1.0 - 1e-12)) {
    throw InfeasibleError(to_string(kind) + " switching reaches at most " + format_real(hi.metrics.q_avg) +
                              " harvested energy, target " + format_real(q_bar),
                          hi.metrics.q_avg, "energy");
  }
  double a = 0.0, b = top;
  for (int k = 0; k < 200 && b - a > 1e-15 * std::max(1.0, top); ++k) {
    const double mid = 0.5 * (a + b);
    auto m = at(mid);
    if (m.metrics.q_avg >= q_bar) {
      b = mid;
      hi = std::move(m);
    } else {
      a = mid;
    }
  }
  return hi;
}

}  // namespace swipt
