#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "swipt/baselines.hpp"
#include "swipt/config.hpp"
#include "swipt/dual.hpp"
#include "swipt/fading.hpp"
#include "swipt/link.hpp"
#include "swipt/numeric.hpp"
#include "swipt/outage_energy.hpp"
#include "swipt/rate_energy.hpp"
#include "swipt/rx_energy.hpp"

namespace swipt {

inline constexpr const char* kVersion = "1.0.0";

struct CurvePoint {
  double q_bar = 0.0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> beta;
  int iterations = 0;
  bool feasible = false;
  double dual_value = std::numeric_limits<double>::quiet_NaN();
  Metrics metrics;
  std::size_t fractional_states = 0;
  std::string note;
};

struct RegionVertices {
  double objective_max = 0.0;  // delta_max or R_max
  double q_min = 0.0;
  double q_max = 0.0;
};

struct TradeoffCurve {
  Problem problem = Problem::oe_no_csit;
  double p_i = 0.0;
  RegionVertices vertices;
  std::vector<CurvePoint> points;

  std::string label() const {
    if (problem != Problem::oe_net) return to_string(problem);
    return to_string(problem) + "_pi" + format_real(p_i);
  }
};

inline FadingEnsemble build_ensemble(const ExperimentConfig& cfg) {
  return sample_ensemble(cfg.h, cfg.interference, cfg.n_samples, cfg.seed);
}

inline bool has_csit(Problem p) { return p == Problem::oe_csit || p == Problem::re_csit; }

/// Solves one boundary point. Infeasible and non-converged points come back
/// with feasible = false and the reason in `note`.
inline CurvePoint solve_point(const FadingEnsemble& ensemble, const ExperimentConfig& cfg, Problem problem,
                              const LinkParams& link, double q_bar) {
  CurvePoint pt;
  pt.q_bar = q_bar;
  const double P = cfg.budget.p_avg;
  try {
    DualSolution sol;
    switch (problem) {
      case Problem::oe_no_csit: sol = oe_boundary_no_csit(ensemble, P, link, q_bar, cfg.solver); break;
      case Problem::oe_csit: sol = oe_boundary_csit(ensemble, cfg.budget, link, q_bar, cfg.solver); break;
      case Problem::re_no_csit: sol = re_boundary_no_csit(ensemble, P, link, q_bar, cfg.solver); break;
      case Problem::re_csit: sol = re_boundary_csit(ensemble, cfg.budget, link, q_bar, cfg.solver); break;
      case Problem::oe_net: sol = oe_boundary_net(ensemble, P, link, q_bar, cfg.solver); break;
    }
    const bool outage = problem != Problem::re_no_csit && problem != Problem::re_csit;
    pt.objective = outage ? sol.metrics.delta : sol.metrics.rate;
    pt.lambda = sol.lambda;
    pt.beta = sol.beta;
    pt.iterations = sol.iterations;
    pt.dual_value = sol.dual_value;
    pt.metrics = sol.metrics;
    pt.fractional_states = sol.policy.fractional_count();
    pt.feasible = true;
  } catch (const InfeasibleError& e) {
    pt.note = e.what();
  } catch (const ConvergenceError& e) {
    pt.note = e.what();
  }
  return pt;
}

inline RegionVertices region_vertices(const FadingEnsemble& ensemble, const ExperimentConfig& cfg, Problem problem,
                                      const LinkParams& link) {
  RegionVertices v;
  switch (problem) {
    case Problem::oe_no_csit:
    case Problem::oe_net: {
      const auto o = oe_vertices_no_csit(ensemble, cfg.budget.p_avg, link);
      v = {o.delta_max, o.q_min, o.q_max};
      if (problem == Problem::oe_net) {
        // net energy of the delta_max policy; its maximal value is reported by the solver
        v.q_min = std::max(0.0, o.q_min - link.p_i * o.delta_max - link.q0);
        v.q_max = o.q_max - link.q0;
      }
      break;
    }
    case Problem::oe_csit: {
      const auto o = oe_vertices_csit(ensemble, cfg.budget, link);
      v = {o.delta_max, o.q_min, o.q_max};
      break;
    }
    case Problem::re_no_csit:
    case Problem::re_csit: {
      const auto r = re_vertices(ensemble, cfg.budget, link, problem == Problem::re_csit);
      v = {r.rate_max, r.q_min, r.q_max};
      break;
    }
  }
  return v;
}

namespace detail {

/// Runs `jobs` on a few worker threads; results keep the job order.
template <class T>
std::vector<T> run_ordered(std::size_t count, const std::function<T(std::size_t)>& job) {
  std::vector<T> out(count);
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
  std::vector<std::future<void>> futures;
  futures.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < count; i += workers) out[i] = job(i);
    }));
  }
  for (auto& f : futures) f.get();
  return out;
}

inline std::vector<double> sweep_grid(const ExperimentConfig& cfg, const RegionVertices& v) {
  std::vector<double> grid = cfg.sweep.q_bar;
  if (!grid.empty()) {
    std::sort(grid.begin(), grid.end());
    return grid;
  }
  const int n = cfg.sweep.n_points;
  if (v.q_min > 0.0) grid.push_back(0.0);
  for (int k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n - 1);
    grid.push_back(k == n - 1 ? v.q_max : v.q_min + t * (v.q_max - v.q_min));
  }
  return grid;
}

}  // namespace detail

/// Boundary of one region: vertices first, then the grid from Q_min to
/// Q_max (with a leading q_bar = 0 point for the flat segment).
inline TradeoffCurve sweep_region(const FadingEnsemble& ensemble, const ExperimentConfig& cfg, Problem problem,
                                  double p_i = 0.0) {
  LinkParams link = cfg.link;
  link.p_i = problem == Problem::oe_net ? p_i : 0.0;
  TradeoffCurve curve;
  curve.problem = problem;
  curve.p_i = link.p_i;
  curve.vertices = region_vertices(ensemble, cfg, problem, link);
  const auto grid = detail::sweep_grid(cfg, curve.vertices);
  curve.points = detail::run_ordered<CurvePoint>(
      grid.size(), [&](std::size_t i) { return solve_point(ensemble, cfg, problem, link, grid[i]); });
  if (problem == Problem::oe_net && !curve.points.empty() && curve.points.front().feasible) {
    curve.vertices.objective_max = curve.points.front().objective;
  }
  return curve;
}

/// All curves of a sweep configuration, in problem order (and p_i order
/// for oe_net).
inline std::vector<TradeoffCurve> sweep_region(const ExperimentConfig& cfg) {
  const auto ensemble = build_ensemble(cfg);
  std::vector<TradeoffCurve> out;
  for (Problem p : cfg.problems) {
    if (p == Problem::oe_net) {
      for (double pi : cfg.p_i_list) out.push_back(sweep_region(ensemble, cfg, p, pi));
    } else {
      out.push_back(sweep_region(ensemble, cfg, p));
    }
  }
  return out;
}

struct CompareRow {
  double power_db = 0.0;
  std::string scheme;
  double objective = std::numeric_limits<double>::quiet_NaN();  // outage probability or rate
  double param = std::numeric_limits<double>::quiet_NaN();      // lambda for optimal, else the threshold
  bool feasible = false;
};

inline std::vector<CompareRow> compare_at(const FadingEnsemble& ensemble, const ExperimentConfig& cfg, double power_db,
                                          double q_bar) {
  const double P = db_to_linear(power_db);
  const auto& cmp = cfg.compare;
  const bool outage = cmp.objective == Objective::outage;
  auto score = [&](const Metrics& m) { return outage ? 1.0 - m.delta : m.rate; };
  std::vector<CompareRow> rows;

  CompareRow opt{power_db, "optimal"};
  try {
    DualSolution sol;
    if (cmp.csit) {
      const PowerBudget b{P, cfg.budget.p_peak};
      sol = outage ? oe_boundary_csit(ensemble, b, cfg.link, q_bar, cfg.solver)
                   : re_boundary_csit(ensemble, b, cfg.link, q_bar, cfg.solver);
    } else {
      sol = outage ? oe_boundary_no_csit(ensemble, P, cfg.link, q_bar, cfg.solver)
                   : re_boundary_no_csit(ensemble, P, cfg.link, q_bar, cfg.solver);
    }
    opt.objective = score(sol.metrics);
    opt.param = sol.lambda;
    opt.feasible = true;
  } catch (const InfeasibleError&) {
  } catch (const ConvergenceError&) {
  }
  rows.push_back(opt);

  for (BaselineKind kind : cmp.baselines) {
    CompareRow row{power_db, to_string(kind)};
    try {
      BaselineResult r;
      if (cmp.csit) {
        r = baseline_with_csit_power(ensemble, PowerBudget{P, cfg.budget.p_peak}, cfg.link, q_bar, kind, cmp.objective);
      } else if (kind == BaselineKind::periodic) {
        r = periodic_policy(ensemble, P, cfg.link, q_bar);
      } else if (kind == BaselineKind::interference) {
        r = interference_policy(ensemble, P, cfg.link, q_bar);
      } else {
        r = sinr_policy(ensemble, P, cfg.link, q_bar);
      }
      row.objective = score(r.metrics);
      row.param = r.spec.calibrated_param;
      row.feasible = true;
    } catch (const InfeasibleError&) {
    }
    rows.push_back(row);
  }
  return rows;
}

/// Optimal scheme and baselines at a fixed energy target over the power grid.
inline std::vector<CompareRow> compare_schemes(const ExperimentConfig& cfg, double q_bar) {
  const auto ensemble = build_ensemble(cfg);
  const auto& grid = cfg.compare.power_db;
  auto per_power = detail::run_ordered<std::vector<CompareRow>>(
      grid.size(), [&](std::size_t i) { return compare_at(ensemble, cfg, grid[i], q_bar); });
  std::vector<CompareRow> rows;
  for (auto& v : per_power) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

inline std::vector<CompareRow> compare_schemes(const ExperimentConfig& cfg) { return compare_schemes(cfg, cfg.compare.q_bar); }

// ---- output

inline void write_curve_csv(std::ostream& o, const TradeoffCurve& c) {
  o << "q_bar,objective,lambda,beta,iterations,feasible\n";
  for (const auto& p : c.points) {
    o << format_real(p.q_bar) << ',' << format_real(p.objective) << ',' << format_real(p.lambda) << ','
      << (p.beta ? format_real(*p.beta) : std::string()) << ',' << p.iterations << ',' << (p.feasible ? 1 : 0) << '\n';
  }
}

inline void write_diagnostics_csv(std::ostream& o, const TradeoffCurve& c) {
  o << "q_bar,dual_value,delta,rate,q_avg,q_net,p_used,fractional_states,note\n";
  for (const auto& p : c.points) {
    std::string note = p.note;
    std::replace(note.begin(), note.end(), ',', ';');
    o << format_real(p.q_bar) << ',' << format_real(p.dual_value) << ',' << format_real(p.metrics.delta) << ','
      << format_real(p.metrics.rate) << ',' << format_real(p.metrics.q_avg) << ',' << format_real(p.metrics.q_net)
      << ',' << format_real(p.metrics.p_used) << ',' << p.fractional_states << ',' << note << '\n';
  }
}

inline void write_compare_csv(std::ostream& o, const std::vector<CompareRow>& rows) {
  o << "power_db,scheme,objective,param\n";
  for (const auto& r : rows) {
    o << format_real(r.power_db) << ',' << r.scheme << ',' << format_real(r.objective) << ','
      << format_real(r.param) << '\n';
  }
}

inline void write_vertices_csv(std::ostream& o, const std::vector<TradeoffCurve>& curves) {
  o << "region,objective_max,q_min,q_max\n";
  for (const auto& c : curves) {
    o << c.label() << ',' << format_real(c.vertices.objective_max) << ',' << format_real(c.vertices.q_min) << ','
      << format_real(c.vertices.q_max) << '\n';
  }
}

struct RunResult {
  int exit_code = 0;  // 0 success, 2 some points infeasible
  std::vector<std::filesystem::path> files;
};

namespace detail {

inline std::filesystem::path write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw std::runtime_error("cannot write '" + path.string() + "'");
  body(o);
  if (!o) throw std::runtime_error("write failed for '" + path.string() + "'");
  return path;
}

}  // namespace detail

/// Vertices of every region of the configuration, without sweeping.
inline std::vector<TradeoffCurve> region_vertices(const ExperimentConfig& cfg) {
  const auto ensemble = build_ensemble(cfg);
  std::vector<TradeoffCurve> out;
  for (Problem p : cfg.problems) {
    const std::vector<double> pis = p == Problem::oe_net ? cfg.p_i_list : std::vector<double>{0.0};
    for (double pi : pis) {
      TradeoffCurve c;
      c.problem = p;
      LinkParams link = cfg.link;
      link.p_i = pi;
      c.p_i = pi;
      c.vertices = region_vertices(ensemble, cfg, p, link);
      out.push_back(std::move(c));
    }
  }
  return out;
}

/// Runs the configured sweep or comparison and writes CSVs plus a manifest
/// into cfg.output_dir.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  RunResult res;
  if (cfg.mode == Mode::sweep) {
    for (const auto& c : sweep_region(cfg)) {
      res.files.push_back(detail::write_file(dir / (c.label() + ".csv"), [&](std::ostream& o) { write_curve_csv(o, c); }));
      res.files.push_back(detail::write_file(dir / (c.label() + "_diagnostics.csv"),
                                             [&](std::ostream& o) { write_diagnostics_csv(o, c); }));
      for (const auto& p : c.points) {
        if (!p.feasible) res.exit_code = 2;
      }
    }
  } else {
    const auto rows = compare_schemes(cfg);
    res.files.push_back(detail::write_file(dir / "compare.csv", [&](std::ostream& o) { write_compare_csv(o, rows); }));
    for (const auto& r : rows) {
      if (!r.feasible) res.exit_code = 2;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.files.push_back(detail::write_file(dir / "manifest.ini", [&](std::ostream& o) {
    o << write_config(cfg) << "\n[run]\n";
    o << "version = " << kVersion << "\n";
#ifdef __VERSION__
    o << "compiler = " << __VERSION__ << "\n";
#endif
    o << "seed = " << cfg.seed << "\n";
    o << "wall_time_s = " << format_real(secs) << "\n";
    o << "exit_code = " << res.exit_code << "\n";
  }));
  return res;
}

inline RunResult run_experiment(const std::string& config_path) { return run_experiment(load_config(config_path)); }

}  // namespace swipt
