#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "swipt/baselines.hpp"
#include "swipt/dual.hpp"
#include "swipt/errors.hpp"
#include "swipt/fading.hpp"
#include "swipt/link.hpp"
#include "swipt/numeric.hpp"

namespace swipt {

enum class Problem { oe_no_csit, oe_csit, re_no_csit, re_csit, oe_net };
enum class Mode { sweep, compare };

inline std::string to_string(Problem p) {
  switch (p) {
    case Problem::oe_no_csit: return "oe_no_csit";
    case Problem::oe_csit: return "oe_csit";
    case Problem::re_no_csit: return "re_no_csit";
    case Problem::re_csit: return "re_csit";
    case Problem::oe_net: return "oe_net";
  }
  return "?";
}

inline std::string to_string(Objective o) { return o == Objective::outage ? "outage" : "rate"; }

struct SweepSpec {
  int n_points = 25;
  std::vector<double> q_bar;  // explicit grid; overrides n_points
};

struct CompareSpec {
  double q_bar = 2.0;
  std::vector<double> power_db;
  std::vector<BaselineKind> baselines{BaselineKind::periodic, BaselineKind::interference, BaselineKind::sinr};
  Objective objective = Objective::outage;
  bool csit = false;
};

struct ExperimentConfig {
  std::string name = "experiment";
  Mode mode = Mode::sweep;
  std::vector<Problem> problems{Problem::oe_no_csit};
  DistributionSpec h = DistributionSpec::exponential(1.0);
  DistributionSpec interference = DistributionSpec::exponential(3.0);
  std::size_t n_samples = 10000;
  std::uint64_t seed = 42;
  PowerBudget budget;  // without CSIT the transmitter sends p_avg
  LinkParams link;
  std::vector<double> p_i_list{0.0};  // oe_net: one curve per entry
  SweepSpec sweep;
  CompareSpec compare;
  SolverOptions solver;
  std::string output_dir = "out";

  void validate() const {
    if (problems.empty()) throw ConfigError("no problem selected");
    if (n_samples == 0) throw ConfigError("n_samples must be at least 1");
    budget.validate();
    link.validate();
    for (double p : p_i_list) {
      if (!(p >= 0.0)) throw ConfigError("p_i must be nonnegative");
    }
    if (sweep.n_points < 2 && sweep.q_bar.empty()) throw ConfigError("sweep needs at least two points");
    for (double q : sweep.q_bar) {
      if (!(q >= 0.0)) throw ConfigError("q_bar values must be nonnegative");
    }
    if (mode == Mode::compare && compare.power_db.empty()) throw ConfigError("compare needs a power_db grid");
    if (!(solver.tol > 0.0) || !(solver.gap_tol > 0.0) || solver.max_iter < 1) {
      throw ConfigError("solver tolerances must be positive");
    }
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto k = s.find(sep, start);
    out.push_back(trim(s.substr(start, k == std::string_view::npos ? std::string_view::npos : k - start)));
    if (k == std::string_view::npos) break;
    start = k + 1;
  }
  return out;
}

inline double parse_real(std::string_view s, int line) {
  s = trim(s);
  if (s == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("expected a number, got '" + std::string(s) + "'", line);
  return v;
}

inline std::uint64_t parse_uint(std::string_view s, int line) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw ConfigError("expected a nonnegative integer, got '" + std::string(s) + "'", line);
  }
  return v;
}

inline bool parse_bool(std::string_view s, int line) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("expected true or false, got '" + std::string(s) + "'", line);
}

/// "a, b, c" or "start:step:stop" (stop included when on the grid).
inline std::vector<double> parse_reals(std::string_view s, int line) {
  std::vector<double> out;
  s = trim(s);
  if (s.find(':') != std::string_view::npos) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) throw ConfigError("range must read start:step:stop", line);
    const double a = parse_real(parts[0], line), step = parse_real(parts[1], line), b = parse_real(parts[2], line);
    if (!(step > 0.0) || b < a) throw ConfigError("range needs a positive step and stop >= start", line);
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long k = 0; k <= count; ++k) out.push_back(a + static_cast<double>(k) * step);
    return out;
  }
  for (auto part : split(s, ',')) out.push_back(parse_real(part, line));
  return out;
}

/// "exponential(mean)" or "points(v:w, v:w, ...)".
inline DistributionSpec parse_distribution(std::string_view s, int line) {
  s = trim(s);
  const auto open = s.find('(');
  if (open == std::string_view::npos || s.back() != ')') {
    throw ConfigError("distribution must read exponential(mean) or points(v:w, ...)", line);
  }
  const auto family = trim(s.substr(0, open));
  const auto args = s.substr(open + 1, s.size() - open - 2);
  try {
    if (family == "exponential") return DistributionSpec::exponential(parse_real(args, line));
    if (family == "points") {
      std::vector<std::pair<double, double>> atoms;
      for (auto atom : split(args, ',')) {
        const auto vw = split(atom, ':');
        if (vw.size() != 2) throw ConfigError("point mass must read value:weight", line);
        atoms.emplace_back(parse_real(vw[0], line), parse_real(vw[1], line));
      }
      return DistributionSpec::point_masses(std::move(atoms));
    }
  } catch (const ConfigError& e) {
    if (e.line() != 0) throw;
    throw ConfigError(e.what(), line);
  }
  throw ConfigError("unknown distribution family '" + std::string(family) + "'", line);
}

inline Problem parse_problem(std::string_view s, int line) {
  s = trim(s);
  for (Problem p : {Problem::oe_no_csit, Problem::oe_csit, Problem::re_no_csit, Problem::re_csit, Problem::oe_net}) {
    if (s == to_string(p)) return p;
  }
  throw ConfigError("unknown problem '" + std::string(s) + "'", line);
}

inline BaselineKind parse_baseline(std::string_view s, int line) {
  s = trim(s);
  for (BaselineKind k : {BaselineKind::periodic, BaselineKind::interference, BaselineKind::sinr}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown baseline '" + std::string(s) + "'", line);
}

inline std::string join_reals(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_real(v[i]);
  return out;
}

inline std::string describe_distribution(const DistributionSpec& d) {
  if (d.family() == DistributionSpec::Family::exponential) return "exponential(" + format_real(d.mean()) + ")";
  std::string out = "points(";
  for (std::size_t i = 0; i < d.atoms().size(); ++i) {
    out += (i ? ", " : "") + format_real(d.atoms()[i].first) + ":" + format_real(d.atoms()[i].second);
  }
  return out + ")";
}

}  // namespace detail

/// Parses the sectioned key = value format. '#' and ';' start comments.
/// Unknown sections or keys are errors; the [run] section written into
/// manifests is ignored.
inline ExperimentConfig parse_config(std::istream& in, ExperimentConfig cfg = {}) {
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (const auto c = s.find_first_of("#;"); c != std::string_view::npos) s = s.substr(0, c);
    s = detail::trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("unterminated section header", line);
      section = std::string(detail::trim(s.substr(1, s.size() - 2)));
      static const char* known[] = {"experiment", "fading", "link", "power", "sweep", "compare", "solver", "output", "run"};
      bool ok = false;
      for (const char* k : known) ok = ok || section == k;
      if (!ok) throw ConfigError("unknown section [" + section + "]", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value", line);
    const std::string key(detail::trim(s.substr(0, eq)));
    const std::string_view val = detail::trim(s.substr(eq + 1));
    if (section.empty()) throw ConfigError("key '" + key + "' outside any section", line);
    if (section == "run") continue;
    if (val.empty()) throw ConfigError("empty value for '" + key + "'", line);
    auto bad = [&] { return ConfigError("unknown key '" + key + "' in [" + section + "]", line); };

    if (section == "experiment") {
      if (key == "name") {
        cfg.name = std::string(val);
      } else if (key == "mode") {
        if (val == "sweep") cfg.mode = Mode::sweep;
        else if (val == "compare") cfg.mode = Mode::compare;
        else throw ConfigError("mode must be sweep or compare", line);
      } else if (key == "problem") {
        cfg.problems.clear();
        for (auto p : detail::split(val, ',')) cfg.problems.push_back(detail::parse_problem(p, line));
      } else {
        throw bad();
      }
    } else if (section == "fading") {
      if (key == "h") cfg.h = detail::parse_distribution(val, line);
      else if (key == "interference") cfg.interference = detail::parse_distribution(val, line);
      else if (key == "n_samples") cfg.n_samples = detail::parse_uint(val, line);
      else if (key == "seed") cfg.seed = detail::parse_uint(val, line);
      else throw bad();
    } else if (section == "link") {
      if (key == "sigma2") cfg.link.sigma2 = detail::parse_real(val, line);
      else if (key == "r0") cfg.link.r0 = detail::parse_real(val, line);
      else if (key == "alpha") cfg.link.alpha = detail::parse_real(val, line);
      else if (key == "q0") cfg.link.q0 = detail::parse_real(val, line);
      else if (key == "p_i") {
        cfg.p_i_list = detail::parse_reals(val, line);
        cfg.link.p_i = cfg.p_i_list.front();
      } else {
        throw bad();
      }
    } else if (section == "power") {
      if (key == "p_avg") cfg.budget.p_avg = detail::parse_real(val, line);
      else if (key == "p_peak") cfg.budget.p_peak = detail::parse_real(val, line);
      else throw bad();
    } else if (section == "sweep") {
      if (key == "n_points") cfg.sweep.n_points = static_cast<int>(detail::parse_uint(val, line));
      else if (key == "q_bar") cfg.sweep.q_bar = detail::parse_reals(val, line);
      else throw bad();
    } else if (section == "compare") {
      if (key == "q_bar") cfg.compare.q_bar = detail::parse_real(val, line);
      else if (key == "power_db") cfg.compare.power_db = detail::parse_reals(val, line);
      else if (key == "csit") cfg.compare.csit = detail::parse_bool(val, line);
      else if (key == "objective") {
        if (val == "outage") cfg.compare.objective = Objective::outage;
        else if (val == "rate") cfg.compare.objective = Objective::rate;
        else throw ConfigError("objective must be outage or rate", line);
      } else if (key == "baselines") {
        cfg.compare.baselines.clear();
        if (val != "none") {
          for (auto b : detail::split(val, ',')) cfg.compare.baselines.push_back(detail::parse_baseline(b, line));
        }
      } else {
        throw bad();
      }
    } else if (section == "solver") {
      if (key == "tol") cfg.solver.tol = detail::parse_real(val, line);
      else if (key == "gap_tol") cfg.solver.gap_tol = detail::parse_real(val, line);
      else if (key == "max_iter") cfg.solver.max_iter = static_cast<int>(detail::parse_uint(val, line));
      else throw bad();
    } else if (section == "output") {
      if (key == "dir") cfg.output_dir = std::string(val);
      else throw bad();
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + (e.line() ? ":" + std::to_string(e.line()) : std::string()) + ": " + e.what(), e.line());
  }
}

/// Inverse of parse_config: every field, in a form parse_config accepts.
inline std::string write_config(const ExperimentConfig& cfg) {
  std::ostringstream o;
  o << "[experiment]\n";
  o << "name = " << cfg.name << "\n";
  o << "mode = " << (cfg.mode == Mode::sweep ? "sweep" : "compare") << "\n";
  o << "problem = ";
  for (std::size_t i = 0; i < cfg.problems.size(); ++i) o << (i ? ", " : "") << to_string(cfg.problems[i]);
  o << "\n\n[fading]\n";
  o << "h = " << detail::describe_distribution(cfg.h) << "\n";
  o << "interference = " << detail::describe_distribution(cfg.interference) << "\n";
  o << "n_samples = " << cfg.n_samples << "\n";
  o << "seed = " << cfg.seed << "\n\n[link]\n";
  o << "sigma2 = " << format_real(cfg.link.sigma2) << "\n";
  o << "r0 = " << format_real(cfg.link.r0) << "\n";
  o << "alpha = " << format_real(cfg.link.alpha) << "\n";
  o << "p_i = " << detail::join_reals(cfg.p_i_list) << "\n";
  o << "q0 = " << format_real(cfg.link.q0) << "\n\n[power]\n";
  o << "p_avg = " << format_real(cfg.budget.p_avg) << "\n";
  o << "p_peak = " << format_real(cfg.budget.p_peak) << "\n\n[sweep]\n";
  o << "n_points = " << cfg.sweep.n_points << "\n";
  if (!cfg.sweep.q_bar.empty()) o << "q_bar = " << detail::join_reals(cfg.sweep.q_bar) << "\n";
  o << "\n[compare]\n";
  o << "q_bar = " << format_real(cfg.compare.q_bar) << "\n";
  if (!cfg.compare.power_db.empty()) o << "power_db = " << detail::join_reals(cfg.compare.power_db) << "\n";
  o << "baselines = ";
  if (cfg.compare.baselines.empty()) o << "none";
  for (std::size_t i = 0; i < cfg.compare.baselines.size(); ++i) {
    o << (i ? ", " : "") << to_string(cfg.compare.baselines[i]);
  }
  o << "\nobjective = " << to_string(cfg.compare.objective) << "\n";
  o << "csit = " << (cfg.compare.csit ? "true" : "false") << "\n\n[solver]\n";
  o << "tol = " << format_real(cfg.solver.tol) << "\n";
  o << "gap_tol = " << format_real(cfg.solver.gap_tol) << "\n";
  o << "max_iter = " << cfg.solver.max_iter << "\n\n[output]\n";
  o << "dir = " << cfg.output_dir << "\n";
  return o.str();
}

/// Built-in setups. All share exponential h (mean 1) and I (mean 3),
/// sigma2 = 0.5 and p_peak = 20.
inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.budget = {5.0, 20.0};
  cfg.link.sigma2 = 0.5;
  cfg.link.r0 = 0.3;
  if (name == "fig3a") {
    cfg.problems = {Problem::oe_no_csit, Problem::oe_csit};
  } else if (name == "fig3b") {
    cfg.problems = {Problem::re_no_csit, Problem::re_csit};
  } else if (name == "fig3") {
    cfg.problems = {Problem::oe_no_csit, Problem::oe_csit, Problem::re_no_csit, Problem::re_csit};
  } else if (name == "fig12") {
    cfg.problems = {Problem::oe_net};
    cfg.p_i_list = {0.0, 1.0, 4.0};
  } else if (name == "fig8") {
    cfg.mode = Mode::compare;
    cfg.problems = {Problem::oe_no_csit};
    cfg.link.r0 = 0.2;
    cfg.compare.q_bar = 2.0;
    cfg.compare.objective = Objective::outage;
    cfg.compare.csit = false;
    for (int k = 0; k <= 24; ++k) cfg.compare.power_db.push_back(0.5 * k);
  } else if (name == "fig9") {
    cfg.mode = Mode::compare;
    cfg.problems = {Problem::re_csit};
    cfg.compare.q_bar = 2.0;
    cfg.compare.objective = Objective::rate;
    cfg.compare.csit = true;
    for (int k = 0; k <= 12; ++k) cfg.compare.power_db.push_back(k);
    // baselines sit within 1e-6 of the optimum at low power
    cfg.solver.gap_tol = 1e-8;
    cfg.solver.max_iter = 2000;
  } else {
    throw ConfigError("unknown preset '" + name + "' (fig3, fig3a, fig3b, fig8, fig9, fig12)");
  }
  cfg.output_dir = "out/" + name;
  cfg.validate();
  return cfg;
}

}  // namespace swipt
