#pragma once

#include "swipt/dual.hpp"
#include "swipt/errors.hpp"
#include "swipt/link.hpp"
#include "swipt/outage_energy.hpp"

namespace swipt {

/// P1 with receiver consumption: an ID block costs p_i of net energy.
struct NetOutageNoCsit {
  double power;
  LinkParams params;

  Candidates candidates(const FadingState& s, const DualPoint&) const {
    Candidates c;
    c.push({false, power, 0.0, energy_at(s, power, params.alpha), power});
    c.push({true, power, static_cast<double>(outage_indicator(s, power, params.r0, params.sigma2)), -params.p_i,
            power});
    return c;
  }
};

inline StateDecision oe_rule_net(const FadingState& s, double lambda_hat, double power, const LinkParams& params) {
  if (!(lambda_hat >= 0.0)) throw UsageError("lambda must be nonnegative");
  return decide(NetOutageNoCsit{power, params}, s, DualPoint{lambda_hat, 0.0});
}

/// Maximal non-outage probability with E[Q] - p_i E[rho] >= q_bar + q0.
inline DualSolution oe_boundary_net(const FadingEnsemble& ensemble, double power, const LinkParams& params,
                                    double q_bar, const SolverOptions& opt = {}) {
  params.validate();
  if (!(power > 0.0)) throw ConfigError("transmit power must be positive");
  DualSolution sol;
  try {
    sol = bisect_lambda(ensemble, NetOutageNoCsit{power, params}, q_bar + params.q0, opt.tol);
  } catch (const InfeasibleError& e) {
    const double reach = e.achievable() - params.q0;
    throw InfeasibleError("net energy target " + format_real(q_bar) + " exceeds achievable maximum " +
                              format_real(reach),
                          reach);
  }
  return detail::with_metrics(std::move(sol), ensemble, PowerBudget{power, power}, params);
}

}  // namespace swipt
