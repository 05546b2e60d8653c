#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "swipt/fading.hpp"
#include "swipt/link.hpp"
#include "swipt/numeric.hpp"

namespace swipt {

struct PeakFill {
  std::vector<double> power;  // per state, in [0, p_peak]
  double used = 0.0;          // sum of share * weight * power
  double h_threshold = std::numeric_limits<double>::infinity();  // smallest h that received power
};

/// Spend `budget` of average power at p_peak on the states with the largest
/// h, in order, restricted to each state's probability `share` (weight
/// times the fraction of the block available). The last state funded may
/// get a fraction of p_peak. Ties in h go to the lower index first.
inline PeakFill peak_fill(const FadingEnsemble& ensemble, std::span<const double> share, double budget,
                          double p_peak) {
  const auto states = ensemble.states();
  PeakFill out;
  out.power.assign(states.size(), 0.0);
  if (!(budget > 0.0)) return out;
  std::vector<std::size_t> order(states.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return states[a].h > states[b].h; });
  double left = budget;
  for (std::size_t i : order) {
    if (states[i].h <= 0.0 || share[i] <= 0.0) continue;
    const double need = share[i] * p_peak;
    const double give = std::min(need, left);
    out.power[i] = p_peak * (give / need);
    out.used += give;
    out.h_threshold = states[i].h;
    left -= give;
    if (left <= 0.0) break;
  }
  return out;
}

/// Largest average harvested energy under the average and peak power
/// constraints: all states in EH mode, peak power on the largest h until
/// the average budget binds.
inline double csit_energy_capacity(const FadingEnsemble& ensemble, const PowerBudget& budget,
                                   const LinkParams& params, ModePolicy* policy = nullptr,
                                   double* h_waterline = nullptr) {
  std::vector<double> share(ensemble.size());
  for (std::size_t i = 0; i < ensemble.size(); ++i) share[i] = ensemble[i].weight;
  const PeakFill fill = peak_fill(ensemble, share, budget.p_avg, budget.p_peak);
  CompensatedSum q;
  for (std::size_t i = 0; i < ensemble.size(); ++i) q += ensemble[i].weight * energy_at(ensemble[i], fill.power[i], params.alpha);
  if (policy) {
    std::vector<PolicyEntry> entries(ensemble.size());
    for (std::size_t i = 0; i < ensemble.size(); ++i) entries[i] = {0.0, fill.power[i], fill.power[i]};
    *policy = ModePolicy(std::move(entries));
  }
  if (h_waterline) *h_waterline = fill.h_threshold;
  return q.value();
}

/// Minimum power reaching rate r0: (e^{r0} - 1)(I + sigma2) / h, nudged up
/// by an ulp or two when round-off would leave the state in outage.
inline double inversion_power(const FadingState& s, const LinkParams& params) {
  if (!(s.h > 0.0)) return std::numeric_limits<double>::infinity();
  const double target = params.snr_target();
  double p = target * (s.interference + params.sigma2) / s.h;
  while (s.h * p / (s.interference + params.sigma2) < target) p = std::nextafter(p, std::numeric_limits<double>::infinity());
  return p;
}

/// Water-filling level [1/beta - (I + sigma2)/h] clipped to [0, p_peak].
/// beta = 0 means an unconstrained budget: full peak power.
inline double waterfill_power(const FadingState& s, double beta, const PowerBudget& budget,
                              const LinkParams& params) {
  if (!(s.h > 0.0)) return 0.0;
  if (!(beta > 0.0)) return budget.p_peak;
  return std::clamp(1.0 / beta - (s.interference + params.sigma2) / s.h, 0.0, budget.p_peak);
}

}  // namespace swipt
