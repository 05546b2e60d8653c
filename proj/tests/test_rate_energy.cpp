#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "swipt/rate_energy.hpp"

using namespace swipt;

namespace {

LinkParams link() {
  LinkParams lp;
  lp.r0 = 0.3;
  lp.sigma2 = 0.5;
  return lp;
}

FadingEnsemble fig3(std::size_t n, std::uint64_t seed = 42) {
  return sample_ensemble(DistributionSpec::exponential(1.0), DistributionSpec::exponential(3.0), n, seed);
}

}  // namespace

TEST(WaterfillPower, HandValues) {
  const PowerBudget b{5.0, 20.0};
  EXPECT_NEAR(waterfill_power({1.0, 0.0, 1.0}, 0.5, b, link()), 1.5, 1e-15);
  EXPECT_EQ(waterfill_power({0.1, 3.0, 1.0}, 0.5, b, link()), 0.0);
  EXPECT_EQ(waterfill_power({100.0, 0.0, 1.0}, 0.01, b, link()), 20.0);
  EXPECT_EQ(waterfill_power({0.0, 1.0, 1.0}, 0.5, b, link()), 0.0);
}

TEST(RateRuleNoCsit, HandExamples) {
  const FadingState s{1.0, 3.0, 1.0};
  EXPECT_EQ(re_rule_no_csit(s, 0.1, 5.0, link()).rho(), 1.0);
  EXPECT_EQ(re_rule_no_csit(s, 0.2, 5.0, link()).rho(), 0.0);
  std::mt19937_64 rng(1);
  const auto e = oracle::random_ensemble(rng, 300);
  for (const auto& st : e.states()) {
    EXPECT_EQ(re_rule_no_csit(st, 0.0, 5.0, link()).rho(), st.h > 0.0 ? 1.0 : 0.0);
    EXPECT_EQ(re_rule_no_csit(st, 1.0 / 0.5, 5.0, link()).rho(), 0.0);
  }
}

TEST(RateRuleNoCsit, IdSetIsAnInterval) {
  for (double I : {0.5, 2.0, 6.0}) {
    for (double lam : {0.02, 0.08, 0.2}) {
      int switches = 0;
      double prev = -1.0;
      for (double h = 0.0; h < 20.0; h += 0.01) {
        const double rho = re_rule_no_csit({h, I, 1.0}, lam, 5.0, link()).rho();
        if (prev >= 0.0 && rho != prev) ++switches;
        prev = rho;
      }
      EXPECT_LE(switches, 2) << I << ' ' << lam;
    }
  }
}

TEST(RateRuleCsit, HandExamples) {
  const PowerBudget b{5.0, 20.0};
  auto d = re_rule_csit({0.0, 2.0, 1.0}, 0.4, 0.5, b, link());
  EXPECT_EQ(d.rho(), 0.0);
  EXPECT_EQ(d.power(), 0.0);
  EXPECT_NEAR(d.value, 0.8, 1e-15);

  // h = beta sigma2: ID gets zero power
  const double beta = 0.5, h = beta * 0.5;
  d = re_rule_csit({h, 0.0, 1.0}, 4.0, beta, b, link());  // lambda h = 1 >= beta
  EXPECT_EQ(d.rho(), 0.0);
  EXPECT_EQ(d.power(), 20.0);
  d = re_rule_csit({h, 0.0, 1.0}, 1.0, beta, b, link());  // lambda h < beta
  EXPECT_EQ(d.rho(), 0.0);
  EXPECT_EQ(d.power(), 0.0);

  d = re_rule_csit({1e6, 0.0, 1.0}, 0.05, 0.5, b, link());
  EXPECT_EQ(d.rho(), 0.0);
  EXPECT_EQ(d.power(), 20.0);
}

TEST(H4Threshold, MatchesScan) {
  const PowerBudget b{5.0, 20.0};
  const double h4 = h4_threshold(0.05, 0.5, b, link());
  auto g = [](double h) { return std::log(4.0 * h) - 1.0 + 0.25 / h - h + 10.0; };
  const double ref = oracle::last_root(g, 0.25, 100.0, 0.01);
  EXPECT_NEAR(h4, ref, 1e-8);
  EXPECT_GT(h4, 0.5 / 0.05);
}

TEST(H4Threshold, CollapsesForLargeLambda) {
  const PowerBudget b{5.0, 20.0};
  EXPECT_EQ(h4_threshold(1e6, 0.5, b, link()), 0.25);
  double prev = std::numeric_limits<double>::infinity();
  for (double lam : {0.01, 0.1, 1.0, 10.0}) {
    const double h4 = h4_threshold(lam, 0.5, b, link());
    EXPECT_LE(h4, prev);
    prev = h4;
  }
  EXPECT_THROW(h4_threshold(0.1, 0.01, b, link()), UsageError);
}

TEST(REVertices, NoCsit) {
  const auto e = fig3(20000);
  const auto v = re_vertices(e, PowerBudget{5.0, 20.0}, link(), false);
  EXPECT_EQ(v.q_min, 0.0);
  const double r = expectation(e, [](const FadingState& s) { return std::log1p(5.0 * s.h / (s.interference + 0.5)); });
  EXPECT_NEAR(v.rate_max, r, 1e-12);
  EXPECT_NEAR(re_boundary_no_csit(e, 5.0, link(), 0.0).metrics.rate, r, 1e-12);
  EXPECT_NEAR(re_boundary_no_csit(e, 5.0, link(), v.q_max).metrics.rate, 0.0, 1e-12);
}

TEST(REVertices, Csit) {
  std::mt19937_64 rng(2);
  const auto e = oracle::random_ensemble(rng, 300);
  const PowerBudget b{2.0, 20.0};
  const auto v = re_vertices(e, b, link(), true);
  std::vector<double> p;
  EXPECT_NEAR(v.rate_max, oracle::csit_rate_max(e, b, link(), &p), 1e-9);
  double q = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (p[i] <= 0.0) q += e[i].weight * e[i].interference;
  }
  EXPECT_NEAR(v.q_min, q, 1e-12);

  const auto z = oracle::random_ensemble(rng, 300, 1.0, 0.0, true);
  EXPECT_EQ(re_vertices(z, b, link(), true).q_min, 0.0);
}

TEST(REVertices, RateGrowsWithBudget) {
  std::mt19937_64 rng(3);
  const auto e = oracle::random_ensemble(rng, 200);
  double prev = 0.0;
  for (double pa : {0.5, 1.0, 2.0, 5.0, 10.0, 20.0}) {
    const double r = re_vertices(e, PowerBudget{pa, 20.0}, link(), true).rate_max;
    EXPECT_GE(r, prev);
    prev = r;
  }
}

TEST(REBoundaryNoCsit, FifteenStatesMatchKnapsack) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto e = oracle::random_ensemble(rng, 15);
    std::vector<double> w, v, en;
    double qmax = 0.0;
    for (const auto& s : e.states()) {
      w.push_back(s.weight);
      v.push_back(rate_at(s, 3.0, 0.5));
      en.push_back(energy_at(s, 3.0, 1.0));
      qmax += s.weight * en.back();
    }
    for (double frac : {0.15, 0.5, 0.85}) {
      const auto sol = re_boundary_no_csit(e, 3.0, link(), frac * qmax);
      EXPECT_NEAR(sol.objective, oracle::knapsack(w, v, en, frac * qmax), 1e-9) << trial;
    }
  }
}

TEST(REBoundaryNoCsit, NoImprovingPairSwap) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto e = oracle::random_ensemble(rng, 20);
    const auto v = re_vertices(e, PowerBudget{5.0, 20.0}, link(), false);
    const auto sol = re_boundary_no_csit(e, 5.0, link(), 0.5 * v.q_max);
    const RateNoCsit sub{5.0, link()};
    const DualPoint d{sol.lambda, 0.0};
    auto lag = [&](std::size_t i, bool id) {
      const auto c = sub.candidates(e[i], d);
      return e[i].weight * c.items()[id ? 1 : 0].lagrangian(d);
    };
    for (std::size_t i = 0; i < e.size(); ++i) {
      for (std::size_t j = 0; j < e.size(); ++j) {
        if (sol.policy[i].rho != 1.0 || sol.policy[j].rho != 0.0) continue;
        const double before = lag(i, true) + lag(j, false);
        const double after = lag(i, false) + lag(j, true);
        EXPECT_LE(after, before + 1e-12) << i << ' ' << j;
      }
    }
  }
}

TEST(REBoundaryNoCsit, NonincreasingAndConcave) {
  const auto e = fig3(4000, 6);
  const auto v = re_vertices(e, PowerBudget{5.0, 20.0}, link(), false);
  std::vector<double> r;
  for (int k = 0; k <= 40; ++k) r.push_back(re_boundary_no_csit(e, 5.0, link(), v.q_max * k / 40.0).metrics.rate);
  for (std::size_t k = 1; k < r.size(); ++k) EXPECT_LE(r[k], r[k - 1] + 1e-12);
  for (std::size_t k = 1; k + 1 < r.size(); ++k) EXPECT_GE(r[k], 0.5 * (r[k - 1] + r[k + 1]) - 1e-6);
}

TEST(REBoundaryCsit, ZeroTargetIsWaterfilling) {
  std::mt19937_64 rng(7);
  const auto e = oracle::random_ensemble(rng, 60);
  const PowerBudget b{2.0, 20.0};
  std::vector<double> p;
  const double rmax = oracle::csit_rate_max(e, b, link(), &p);
  SolverOptions opt;
  opt.gap_tol = 1e-10;
  const auto sol = re_boundary_csit(e, b, link(), 0.0, opt);
  EXPECT_NEAR(sol.metrics.rate, rmax, 1e-8);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto& en = sol.policy[i];
    const double used = en.rho * en.p_id + (1.0 - en.rho) * en.p_eh;
    EXPECT_NEAR(used, p[i], 1e-6) << i;
  }
}

TEST(REBoundaryCsit, InterferenceFreePartition) {
  std::mt19937_64 rng(8);
  const auto e = oracle::random_ensemble(rng, 300, 1.0, 0.0, true);
  const PowerBudget b{2.0, 10.0};
  const auto v = re_vertices(e, b, link(), true);
  int checked = 0;
  for (double frac : {0.3, 0.5, 0.7}) {
    const auto sol = re_boundary_csit(e, b, link(), v.q_min + frac * (v.q_max - v.q_min));
    const double lam = sol.lambda, beta = sol.beta.value_or(0.0);
    if (!(beta > 0.0) || 1.0 / beta > b.p_peak) continue;
    const auto t = re_mode_thresholds(lam, beta, b, link());
    ++checked;
    for (const auto& s : e.states()) {
      const auto d = re_rule_csit(s, lam, beta, b, link());
      if (d.gap <= 1e-12 * std::max(1.0, std::abs(d.value))) continue;
      if (s.h < t.h_off) {
        EXPECT_EQ(d.rho(), 0.0) << s.h;
      } else if (s.h <= t.h4) {
        EXPECT_EQ(d.rho(), 1.0) << s.h;
      } else {
        EXPECT_EQ(d.rho(), 0.0) << s.h;
        EXPECT_EQ(d.power(), b.p_peak) << s.h;
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(REBoundaryCsit, DominatesNoCsit) {
  const auto e = fig3(3000, 9);
  const PowerBudget b{5.0, 20.0};
  const auto v = re_vertices(e, b, link(), false);
  for (double frac : {0.1, 0.4, 0.8}) {
    const double q = frac * v.q_max;
    EXPECT_GE(re_boundary_csit(e, b, link(), q).metrics.rate, re_boundary_no_csit(e, 5.0, link(), q).metrics.rate - 1e-9);
  }
}
