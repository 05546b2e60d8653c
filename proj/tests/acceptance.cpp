// Runs every acceptance criterion once and prints one PASS/FAIL line each.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "support/oracles.hpp"
#include "swipt/swipt.hpp"

using namespace swipt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

LinkParams fig3_link(double r0 = 0.3) {
  LinkParams lp;
  lp.sigma2 = 0.5;
  lp.r0 = r0;
  return lp;
}

FadingEnsemble fig3_ensemble(std::size_t n) {
  return sample_ensemble(DistributionSpec::exponential(1.0), DistributionSpec::exponential(3.0), n, 42);
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-12, std::abs(b)); }

// ---- 1
Outcome closed_form_anchor() {
  Outcome o;
  const double f1 = qmin_closed_form(db_to_linear(1.0), 1.0, 1.0 / 3.0, 0.2, 0.5);
  o.require(std::abs(f1 - 1.9998) <= 1e-3, "f(1 dB) = " + num(f1));
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 25; ++k) {
    const double f = qmin_closed_form(db_to_linear(12.0 * k / 24.0), 1.0, 1.0 / 3.0, 0.2, 0.5);
    o.require(f < prev, "not strictly decreasing at grid point " + std::to_string(k));
    prev = f;
  }
  o.detail = o.pass ? "f(1 dB) = " + num(f1) : o.detail;
  return o;
}

// ---- 2
Outcome vertices_fig3() {
  Outcome o;
  const auto e = fig3_ensemble(100000);
  const auto v = oe_vertices_no_csit(e, 5.0, fig3_link());
  const double delta_ref = oracle::delta_integral(5.0, 1.0, 1.0 / 3.0, 0.3, 0.5);
  const double f = qmin_closed_form(5.0, 1.0, 1.0 / 3.0, 0.3, 0.5);
  o.require(rel(v.q_max, 8.0) <= 0.02, "Q_max = " + num(v.q_max));
  o.require(rel(v.delta_max, delta_ref) <= 0.01, "delta_max = " + num(v.delta_max) + " vs " + num(delta_ref));
  o.require(rel(v.q_min, f) <= 0.015, "Q_min = " + num(v.q_min) + " vs f(P) = " + num(f));
  if (o.pass) {
    o.detail = "Q_max " + num(v.q_max) + ", delta_max " + num(v.delta_max) + " (integral " + num(delta_ref) +
               "), Q_min " + num(v.q_min) + " (f " + num(f) + ")";
  }
  return o;
}

// ---- 3
Outcome knapsack_equivalence() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(2, 20);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto e = oracle::random_ensemble(rng, static_cast<std::size_t>(size(rng)));
    const double P = 1.0 + 9.0 * u(rng);
    const double frac = u(rng);
    std::vector<double> w, v1, v3, en;
    double qmax = 0.0;
    for (const auto& s : e.states()) {
      w.push_back(s.weight);
      v1.push_back(outage_indicator(s, P, 0.3, 0.5));
      v3.push_back(rate_at(s, P, 0.5));
      en.push_back(energy_at(s, P, 1.0));
      qmax += s.weight * en.back();
    }
    const double q = frac * qmax;
    const double o1 = oracle::knapsack(w, v1, en, q), o3 = oracle::knapsack(w, v3, en, q);
    const double s1 = oe_boundary_no_csit(e, P, fig3_link(), q).objective;
    const double s3 = re_boundary_no_csit(e, P, fig3_link(), q).objective;
    const double r1 = std::abs(s1 - o1) / std::max(1.0, std::abs(o1));
    const double r3 = std::abs(s3 - o3) / std::max(1.0, std::abs(o3));
    worst = std::max({worst, r1, r3});
    o.require(r1 <= 1e-9 && r3 <= 1e-9, "trial " + std::to_string(trial) + ": P1 " + num(s1) + " vs " + num(o1) +
                                             ", P3 " + num(s3) + " vs " + num(o3));
  }
  if (o.pass) o.detail = "worst relative error " + num(worst);
  return o;
}

// ---- 4
Outcome csit_grid_equivalence() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto e = oracle::random_ensemble(rng, 8);
    const PowerBudget b{3.0, 10.0};
    const double q = u(rng) * oracle::csit_qmax(e, b, 1.0);
    for (bool outage : {true, false}) {
      const double ref = oracle::csit_grid_lp(e, b, fig3_link(), q, outage, 21);
      const double got = outage ? oe_boundary_csit(e, b, fig3_link(), q).metrics.delta
                                : re_boundary_csit(e, b, fig3_link(), q).metrics.rate;
      const double r = std::abs(got - ref) / std::max(1e-12, std::abs(ref));
      worst = std::max(worst, r);
      o.require(r <= 1e-3, std::string(outage ? "P2" : "P4") + " trial " + std::to_string(trial) + ": " + num(got) +
                               " vs grid " + num(ref));
    }
  }
  if (o.pass) o.detail = "worst relative difference " + num(worst);
  return o;
}

// ---- 5
Outcome threshold_partitions() {
  Outcome o;
  std::mt19937_64 rng(5);
  const auto e = oracle::random_ensemble(rng, 400, 1.0, 0.0, true);
  const PowerBudget b{2.0, 10.0};
  const LinkParams lp = fig3_link();
  int oe_cases = 0, re_cases = 0, states = 0;
  const auto ov = oe_vertices_csit(e, b, lp);
  const auto rv = re_vertices(e, b, lp, true);
  for (double frac : {0.2, 0.4, 0.6, 0.8}) {
    const auto os = oe_boundary_csit(e, b, lp, ov.q_min + frac * (ov.q_max - ov.q_min));
    const double lam = os.lambda, beta = os.beta.value_or(0.0);
    try {
      const auto t = oe_mode_thresholds(lam, beta, b, lp);
      if (t.partition_applies) {
        ++oe_cases;
        for (const auto& s : e.states()) {
          const auto d = oe_rule_csit(s, lam, beta, b, lp);
          if (d.gap <= 1e-12 * std::max(1.0, std::abs(d.value))) continue;
          ++states;
          const int want = s.h < t.h_off ? 0 : (s.h <= t.h3 ? 1 : 2);
          const int got = d.rho() == 1.0 ? 1 : (d.power() > 0.0 ? 2 : 0);
          o.require(want == got, "O-E state h=" + num(s.h) + " mode " + std::to_string(got) + " vs partition " +
                                     std::to_string(want));
        }
      }
    } catch (const DegenerateError&) {
    }
    const auto rs = re_boundary_csit(e, b, lp, rv.q_min + frac * (rv.q_max - rv.q_min));
    const double rl = rs.lambda, rb = rs.beta.value_or(0.0);
    if (rb > 0.0 && 1.0 / rb <= b.p_peak) {
      ++re_cases;
      const auto t = re_mode_thresholds(rl, rb, b, lp);
      for (const auto& s : e.states()) {
        const auto d = re_rule_csit(s, rl, rb, b, lp);
        if (d.gap <= 1e-12 * std::max(1.0, std::abs(d.value))) continue;
        ++states;
        const int want = s.h < t.h_off ? 0 : (s.h <= t.h4 ? 1 : 2);
        const int got = d.rho() == 1.0 ? 1 : (d.power() > 0.0 ? 2 : 0);
        o.require(want == got, "R-E state h=" + num(s.h) + " mode " + std::to_string(got) + " vs partition " +
                                   std::to_string(want));
      }
    }
  }
  o.require(oe_cases > 0 && re_cases > 0, "no dual point fell in the analyzed case");
  if (o.pass) {
    o.detail = std::to_string(oe_cases) + " O-E and " + std::to_string(re_cases) + " R-E dual points, " +
               std::to_string(states) + " state decisions";
  }
  return o;
}

// ---- 6
Outcome structural_invariants() {
  Outcome o;
  const auto e = fig3_ensemble(2000);
  const PowerBudget b{5.0, 20.0};
  const LinkParams lp = fig3_link();
  SolverOptions tight;
  tight.gap_tol = 1e-9;
  tight.max_iter = 2000;
  const double qmax = oe_vertices_no_csit(e, 5.0, lp).q_max;
  const int n = 16;
  std::vector<double> q(n + 1);
  for (int k = 0; k <= n; ++k) q[k] = qmax * k / n;

  auto curve = [&](const std::function<double(double)>& f) {
    std::vector<double> y;
    for (double x : q) y.push_back(f(x));
    return y;
  };
  const auto o1 = curve([&](double x) { return oe_boundary_no_csit(e, 5.0, lp, x).metrics.delta; });
  const auto o2 = curve([&](double x) { return oe_boundary_csit(e, b, lp, x, tight).metrics.delta; });
  const auto r3 = curve([&](double x) { return re_boundary_no_csit(e, 5.0, lp, x).metrics.rate; });
  const auto r4 = curve([&](double x) { return re_boundary_csit(e, b, lp, x, tight).metrics.rate; });
  const std::pair<const char*, const std::vector<double>*> curves[] = {
      {"oe_no_csit", &o1}, {"oe_csit", &o2}, {"re_no_csit", &r3}, {"re_csit", &r4}};
  for (const auto& [name, y] : curves) {
    for (int k = 1; k <= n; ++k) {
      o.require((*y)[k] <= (*y)[k - 1] + 1e-6, std::string(name) + " increases at " + num(q[k]));
    }
    for (int k = 1; k < n; ++k) {
      o.require((*y)[k] >= 0.5 * ((*y)[k - 1] + (*y)[k + 1]) - 1e-6, std::string(name) + " not concave at " + num(q[k]));
    }
  }
  for (int k = 0; k <= n; ++k) {
    o.require(o2[k] >= o1[k] - 1e-9, "CSIT outage below no-CSIT at " + num(q[k]));
    o.require(r4[k] >= r3[k] - 1e-9, "CSIT rate below no-CSIT at " + num(q[k]));
  }

  // EH ordering of the P1 optimum
  for (int k = 1; k < n; ++k) {
    const auto sol = oe_boundary_no_csit(e, 5.0, lp, q[k]);
    double min_eh = std::numeric_limits<double>::infinity(), max_id = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (!outage_indicator(e[i], 5.0, lp.r0, lp.sigma2)) continue;
      const double en = energy_at(e[i], 5.0, lp.alpha);
      if (sol.policy[i].rho < 1.0) min_eh = std::min(min_eh, en);
      if (sol.policy[i].rho > 0.0) max_id = std::max(max_id, en);
    }
    o.require(min_eh >= max_id - 1e-9, "EH ordering violated at " + num(q[k]));
  }

  // weak duality on random feasible policies
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int tested = 0;
  for (int inst = 0; inst < 3; ++inst) {
    const auto small = oracle::random_ensemble(rng, 15);
    const double cap = oe_vertices_no_csit(small, 5.0, lp).q_max;
    const double qb = (0.2 + 0.25 * inst) * cap;
    const auto s1 = oe_boundary_no_csit(small, 5.0, lp, qb);
    const auto s3 = re_boundary_no_csit(small, 5.0, lp, qb);
    const double g1 = dual_function(small, OutageNoCsit{5.0, lp}, DualPoint{s1.lambda, 0.0}, qb);
    const double g3 = dual_function(small, RateNoCsit{5.0, lp}, DualPoint{s3.lambda, 0.0}, qb);
    int count = 0;
    while (count < 100) {
      std::vector<PolicyEntry> entries;
      for (std::size_t i = 0; i < small.size(); ++i) entries.push_back({u(rng), 5.0, 5.0});
      const auto m = evaluate(small, ModePolicy(entries), PowerBudget{5, 5}, lp);
      if (m.q_avg < qb) continue;
      ++count;
      o.require(g1 >= m.delta - 1e-12 && g3 >= m.rate - 1e-12, "weak duality violated");
    }
    tested += count;
  }
  if (o.pass) o.detail = "4 curves x " + std::to_string(n + 1) + " points, " + std::to_string(tested) + " random policies";
  return o;
}

// ---- 7
Outcome fig8_claims() {
  Outcome o;
  const auto cfg = preset("fig8");
  const auto rows = compare_schemes(cfg);
  auto find = [&](double db, const std::string& scheme) {
    for (const auto& r : rows) {
      if (r.power_db == db && r.scheme == scheme) return r;
    }
    return CompareRow{};
  };
  int coincide = 0;
  bool sinr_beats_periodic = false;
  for (double db : cfg.compare.power_db) {
    const auto opt = find(db, "optimal");
    o.require(opt.feasible, "optimal infeasible at " + num(db) + " dB");
    for (const auto* s : {"periodic", "interference", "sinr"}) {
      const auto r = find(db, s);
      o.require(r.feasible && r.objective >= opt.objective - 1e-9,
                std::string(s) + " beats optimal at " + num(db) + " dB");
    }
    const double f = qmin_closed_form(db_to_linear(db), 1.0, 1.0 / 3.0, cfg.link.r0, cfg.link.sigma2);
    if (f >= cfg.compare.q_bar) {
      ++coincide;
      o.require(std::abs(find(db, "sinr").objective - opt.objective) <= 1e-9,
                "SINR-based differs from optimal at " + num(db) + " dB");
    }
    if (db > 8.0 && find(db, "sinr").objective > find(db, "periodic").objective) sinr_beats_periodic = true;
  }
  o.require(coincide > 0, "no grid power with f(P) >= q_bar");
  o.require(sinr_beats_periodic, "SINR-based never worse than periodic above 8 dB");
  if (o.pass) o.detail = "SINR-based = optimal at " + std::to_string(coincide) + " low powers";
  return o;
}

// ---- 8
Outcome fig12_claims() {
  Outcome o;
  const auto cfg = preset("fig12");
  const auto curves = sweep_region(cfg);
  o.require(curves.size() == 3, "expected three curves");
  if (!o.pass) return o;
  const double qm = curves[0].points.back().q_bar;
  for (const auto& c : curves) {
    o.require(c.vertices.q_max == curves[0].vertices.q_max, "Q_max differs for " + c.label());
    o.require(c.points.back().q_bar == qm && c.points.back().feasible, "last point differs for " + c.label());
    o.require(c.points.front().q_bar == 0.0 && c.points.front().feasible, "no q_bar = 0 point for " + c.label());
  }
  const double d0 = curves[0].points.front().objective;
  const double d1 = curves[1].points.front().objective;
  const double d4 = curves[2].points.front().objective;
  o.require(d1 == d0, "delta(0) differs for P_I = 1: " + num(d1) + " vs " + num(d0));
  o.require(d4 < d0, "delta(0) for P_I = 4 not smaller: " + num(d4));
  if (o.pass) o.detail = "delta(0): " + num(d0) + ", " + num(d1) + ", " + num(d4) + "; Q_max " + num(curves[0].vertices.q_max);
  return o;
}

// ---- 9
Outcome determinism() {
  Outcome o;
  auto cfg = preset("fig3");
  const fs::path root = fs::temp_directory_path() / "swipt_acceptance";
  fs::remove_all(root);
  cfg.output_dir = (root / "a").string();
  const auto ra = run_experiment(cfg);
  cfg.output_dir = (root / "b").string();
  run_experiment(cfg);
  int compared = 0;
  for (const auto& f : ra.files) {
    if (f.extension() != ".csv") continue;
    auto read = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::ostringstream s;
      s << in.rdbuf();
      return s.str();
    };
    const auto a = read(f), b = read(root / "b" / f.filename());
    o.require(!a.empty() && a == b, f.filename().string() + " differs");
    ++compared;
  }
  o.require(compared == 8, "expected 8 CSVs, got " + std::to_string(compared));
  fs::remove_all(root);
  if (o.pass) o.detail = std::to_string(compared) + " CSVs byte-identical";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
    double budget_s;  // 0: none
  };
  const Criterion all[] = {
      {"1 closed-form Q_min anchor", closed_form_anchor, 1.0},
      {"2 Fig. 3 vertices", vertices_fig3, 10.0},
      {"3 knapsack equivalence (P1, P3)", knapsack_equivalence, 5.0},
      {"4 power-grid equivalence (P2, P4)", csit_grid_equivalence, 60.0},
      {"5 threshold partitions", threshold_partitions, 0.0},
      {"6 structural invariants", structural_invariants, 0.0},
      {"7 Fig. 8 ordering claims", fig8_claims, 0.0},
      {"8 Fig. 12 claims", fig12_claims, 60.0},
      {"9 determinism", determinism, 0.0},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      if (o.pass) o.detail = "over time budget " + num(c.budget_s) + " s";
      o.pass = false;
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
