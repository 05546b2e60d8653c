#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "swipt/errors.hpp"
#include "swipt/numeric.hpp"

namespace swipt {

/// One joint fading realization: channel power gain and interference power.
struct FadingState {
  double h = 0.0;
  double interference = 0.0;
  double weight = 1.0;
};

/// Marginal distribution of h or I.
class DistributionSpec {
 public:
  enum class Family { exponential, point_masses };

  static DistributionSpec exponential(double mean) {
    if (!(mean > 0.0) || !std::isfinite(mean)) {
      throw ConfigError("exponential mean must be positive, got " + format_real(mean));
    }
    DistributionSpec spec;
    spec.family_ = Family::exponential;
    spec.mean_ = mean;
    return spec;
  }

  /// (value, weight) atoms; weights must be positive and sum to one.
  static DistributionSpec point_masses(std::vector<std::pair<double, double>> atoms) {
    if (atoms.empty()) throw ConfigError("point_masses needs at least one atom");
    CompensatedSum total;
    for (const auto& [value, weight] : atoms) {
      if (!(value >= 0.0) || !std::isfinite(value)) {
        throw ConfigError("point mass value must be nonnegative, got " + format_real(value));
      }
      if (!(weight > 0.0)) {
        throw ConfigError("point mass weight must be positive, got " + format_real(weight));
      }
      total += weight;
    }
    if (std::abs(total.value() - 1.0) > 1e-12) {
      throw ConfigError("point mass weights sum to " + format_real(total.value()) + ", not 1");
    }
    DistributionSpec spec;
    spec.family_ = Family::point_masses;
    spec.atoms_ = std::move(atoms);
    return spec;
  }

  Family family() const noexcept { return family_; }
  double mean() const {
    if (family_ == Family::exponential) return mean_;
    CompensatedSum m;
    for (const auto& [v, w] : atoms_) m += v * w;
    return m.value();
  }
  const std::vector<std::pair<double, double>>& atoms() const noexcept { return atoms_; }

  /// Inverse CDF at u in [0, 1).
  double quantile(double u) const {
    if (family_ == Family::exponential) return -mean_ * std::log1p(-u);
    double cumulative = 0.0;
    for (const auto& [v, w] : atoms_) {
      cumulative += w;
      if (u < cumulative) return v;
    }
    return atoms_.back().first;
  }

  std::string describe() const {
    if (family_ == Family::exponential) return "exponential(" + format_real(mean_) + ")";
    std::string out = "point_masses(";
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (i) out += ", ";
      out += format_real(atoms_[i].first) + ":" + format_real(atoms_[i].second);
    }
    return out + ")";
  }

 private:
  DistributionSpec() = default;
  Family family_ = Family::exponential;
  double mean_ = 1.0;
  std::vector<std::pair<double, double>> atoms_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based uniform in [0, 1): draw `index` of stream `stream` under `seed`.
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  const std::uint64_t key = splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  const std::uint64_t bits = splitmix64(key + splitmix64(index));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Finite weighted set of fading states standing in for the joint fading law.
/// Immutable once built.
class FadingEnsemble {
 public:
  FadingEnsemble() = default;

  static FadingEnsemble from_states(std::vector<FadingState> states, std::string provenance = "explicit",
                                    std::uint64_t seed = 0) {
    if (states.empty()) throw ConfigError("ensemble needs at least one state");
    CompensatedSum total;
    for (const auto& s : states) {
      if (!(s.h >= 0.0) || !(s.interference >= 0.0) || !std::isfinite(s.h) || !std::isfinite(s.interference)) {
        throw ConfigError("fading states need finite nonnegative h and I");
      }
      if (!(s.weight > 0.0)) throw ConfigError("fading state weights must be positive");
      total += s.weight;
    }
    if (std::abs(total.value() - 1.0) > 1e-9) {
      throw ConfigError("ensemble weights sum to " + format_real(total.value()) + ", not 1");
    }
    FadingEnsemble e;
    e.states_ = std::move(states);
    e.provenance_ = std::move(provenance);
    e.seed_ = seed;
    return e;
  }

  /// Equal weights 1/n.
  static FadingEnsemble uniform(const std::vector<std::pair<double, double>>& h_and_i) {
    std::vector<FadingState> states;
    states.reserve(h_and_i.size());
    const double w = 1.0 / static_cast<double>(h_and_i.size());
    for (const auto& [h, i] : h_and_i) states.push_back({h, i, w});
    return from_states(std::move(states));
  }

  std::span<const FadingState> states() const noexcept { return states_; }
  std::size_t size() const noexcept { return states_.size(); }
  const FadingState& operator[](std::size_t i) const { return states_[i]; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::string& provenance() const noexcept { return provenance_; }

  /// Concatenate two ensembles, each carrying half the probability mass.
  static FadingEnsemble mixture(const FadingEnsemble& a, const FadingEnsemble& b) {
    std::vector<FadingState> states;
    states.reserve(a.size() + b.size());
    for (auto s : a.states_) {
      s.weight *= 0.5;
      states.push_back(s);
    }
    for (auto s : b.states_) {
      s.weight *= 0.5;
      states.push_back(s);
    }
    return from_states(std::move(states), "mixture");
  }

 private:
  std::vector<FadingState> states_;
  std::string provenance_ = "explicit";
  std::uint64_t seed_ = 0;
};

/// Draw n independent (h, I) states, each of weight 1/n. h uses stream 0 and
/// I stream 1 of a counter-based generator, so the result depends only on
/// (specs, n, seed).
inline FadingEnsemble sample_ensemble(const DistributionSpec& spec_h, const DistributionSpec& spec_i,
                                      std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("n_samples must be at least 1");
  std::vector<FadingState> states(n);
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    states[k].h = spec_h.quantile(detail::counter_uniform(seed, 0, k));
    states[k].interference = spec_i.quantile(detail::counter_uniform(seed, 1, k));
    states[k].weight = w;
  }
  return FadingEnsemble::from_states(std::move(states), "h~" + spec_h.describe() + "; I~" + spec_i.describe(),
                                     seed);
}

/// Weighted sum of f over the ensemble.
template <class F>
double expectation(const FadingEnsemble& ensemble, F&& f) {
  CompensatedSum acc;
  for (const auto& s : ensemble.states()) acc += s.weight * f(s);
  return acc.value();
}

}  // namespace swipt
