#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "swipt/errors.hpp"
#include "swipt/fading.hpp"
#include "swipt/numeric.hpp"

namespace swipt {

struct PowerBudget {
  double p_avg = 5.0;
  double p_peak = 20.0;

  void validate() const {
    if (!(p_avg > 0.0) || !(p_peak > 0.0)) throw ConfigError("transmit powers must be positive");
    if (p_avg > p_peak) throw ConfigError("p_avg must not exceed p_peak");
  }
};

struct LinkParams {
  double sigma2 = 0.5;
  double r0 = 0.3;     // nats/s/Hz
  double alpha = 1.0;  // energy conversion efficiency
  double p_i = 0.0;    // receiver power drawn in ID mode
  double q0 = 0.0;     // per-block sensing energy

  void validate() const {
    if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
    if (!(r0 > 0.0)) throw ConfigError("r0 must be positive");
    if (!(alpha > 0.0) || alpha > 1.0) throw ConfigError("alpha must lie in (0, 1]");
    if (!(p_i >= 0.0)) throw ConfigError("p_i must be nonnegative");
    if (!(q0 >= 0.0)) throw ConfigError("q0 must be nonnegative");
  }

  /// SINR-times-power needed for rate r0: e^{r0} - 1.
  double snr_target() const { return std::expm1(r0); }
};

/// Receiver mode and transmit power for one fading state. `rho` is the share
/// of the block spent in ID mode; `p_id` and `p_eh` are the transmit powers
/// used during the ID and EH shares. Pure policies have rho in {0, 1}.
struct PolicyEntry {
  double rho = 1.0;
  double p_id = 0.0;
  double p_eh = 0.0;

  double average_power() const { return rho * p_id + (1.0 - rho) * p_eh; }
};

class ModePolicy {
 public:
  ModePolicy() = default;
  explicit ModePolicy(std::vector<PolicyEntry> entries) : entries_(std::move(entries)) {}

  /// Same mode share and the same power in both modes for every state.
  static ModePolicy constant(std::size_t n, double rho, double p) {
    return ModePolicy(std::vector<PolicyEntry>(n, PolicyEntry{rho, p, p}));
  }

  std::size_t size() const noexcept { return entries_.size(); }
  PolicyEntry& operator[](std::size_t i) { return entries_[i]; }
  const PolicyEntry& operator[](std::size_t i) const { return entries_[i]; }
  std::span<const PolicyEntry> entries() const noexcept { return entries_; }

  /// Number of states with rho strictly inside (0, 1).
  std::size_t fractional_count(double eps = 1e-12) const {
    std::size_t k = 0;
    for (const auto& e : entries_) k += (e.rho > eps && e.rho < 1.0 - eps) ? 1 : 0;
    return k;
  }

 private:
  std::vector<PolicyEntry> entries_;
};

struct Metrics {
  double delta = 0.0;   // non-outage probability
  double rate = 0.0;    // ergodic rate, nats/s/Hz
  double q_avg = 0.0;   // average harvested energy
  double p_used = 0.0;  // average transmit power
  double q_net = 0.0;   // q_avg - p_i * E[rho] - q0
  double id_share = 0.0;
};

inline double sinr(const FadingState& s, double sigma2) { return s.h / (s.interference + sigma2); }

/// Instantaneous mutual information in nats at power p.
inline double rate_at(const FadingState& s, double p, double sigma2) {
  return std::log1p(s.h * p / (s.interference + sigma2));
}

/// Harvestable power alpha (h p + I); noise is not harvested.
inline double energy_at(const FadingState& s, double p, double alpha) {
  return alpha * (s.h * p + s.interference);
}

/// 1 iff log(1 + h p / (I + sigma2)) >= r0. Compared in the SNR domain so the
/// boundary is inclusive without log round-off.
inline int outage_indicator(const FadingState& s, double p, double r0, double sigma2) {
  if (!(p > 0.0) || !(s.h > 0.0)) return 0;
  return s.h * p / (s.interference + sigma2) >= std::expm1(r0) ? 1 : 0;
}

/// Pure accounting of a policy over the ensemble; no constraint checks.
inline Metrics evaluate(const FadingEnsemble& ensemble, const ModePolicy& policy, const PowerBudget& budget,
                        const LinkParams& params) {
  (void)budget;
  if (policy.size() != ensemble.size()) {
    throw UsageError("policy has " + std::to_string(policy.size()) + " entries, ensemble has " +
                     std::to_string(ensemble.size()));
  }
  CompensatedSum delta, rate, q, p, rho;
  const auto states = ensemble.states();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& s = states[i];
    const auto& e = policy[i];
    const double w = s.weight;
    if (e.rho > 0.0) {
      delta += w * e.rho * outage_indicator(s, e.p_id, params.r0, params.sigma2);
      rate += w * e.rho * rate_at(s, e.p_id, params.sigma2);
    }
    if (e.rho < 1.0) q += w * (1.0 - e.rho) * energy_at(s, e.p_eh, params.alpha);
    p += w * e.average_power();
    rho += w * e.rho;
  }
  Metrics m;
  m.delta = delta.value();
  m.rate = rate.value();
  m.q_avg = q.value();
  m.p_used = p.value();
  m.id_share = rho.value();
  m.q_net = m.q_avg - params.p_i * m.id_share - params.q0;
  return m;
}

}  // namespace swipt
