// swipt: outage/rate vs harvested-energy trade-off experiments.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "swipt/swipt.hpp"

namespace {

struct Common {
  std::string config;
  std::string preset;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c) {
  auto* cfg = app->add_option("--config", c.config, "experiment config file");
  auto* pre = app->add_option("--preset", c.preset, "built-in setup")
                  ->check(CLI::IsMember({"fig3", "fig3a", "fig3b", "fig8", "fig9", "fig12"}));
  cfg->excludes(pre);
  app->add_option("--out", c.out, "output directory (overrides the config)");
  app->add_option("--seed", c.seed, "sampling seed (overrides the config)");
}

swipt::ExperimentConfig resolve(const Common& c) {
  if (c.config.empty() && c.preset.empty()) throw swipt::UsageError("one of --config or --preset is required");
  auto cfg = c.config.empty() ? swipt::preset(c.preset) : swipt::load_config(c.config);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

int report(const swipt::RunResult& r) {
  for (const auto& f : r.files) std::cout << f.string() << '\n';
  if (r.exit_code == 2) std::cerr << "warning: some points were infeasible or did not converge\n";
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Outage/rate versus harvested-energy trade-off solver"};
  app.require_subcommand(1);

  Common sweep_opts, compare_opts, vert_opts, run_opts;
  auto* sweep = app.add_subcommand("sweep", "trace the trade-off boundaries");
  add_common(sweep, sweep_opts);
  auto* compare = app.add_subcommand("compare", "optimal scheme against switching baselines over a power grid");
  add_common(compare, compare_opts);
  std::optional<double> cmp_qbar;
  compare->add_option("--q-bar", cmp_qbar, "energy target");
  auto* vertices = app.add_subcommand("vertices", "extreme points of each region");
  add_common(vertices, vert_opts);
  auto* run = app.add_subcommand("run", "run whatever the config's mode selects");
  add_common(run, run_opts);

  auto* qmin = app.add_subcommand("closed-form-qmin", "Q_min(P) for exponential h and I, no CSIT");
  double power_db = 1.0, lambda1 = 1.0, lambda2 = 1.0 / 3.0, r0 = 0.2, sigma2 = 0.5;
  std::string grid;
  auto* pdb = qmin->add_option("--power-db", power_db, "transmit power in dB");
  qmin->add_option("--lambda1", lambda1, "rate parameter of h (1/mean)");
  qmin->add_option("--lambda2", lambda2, "rate parameter of I (1/mean)");
  qmin->add_option("--r0", r0, "target rate, nats/s/Hz");
  qmin->add_option("--sigma2", sigma2, "noise power");
  qmin->add_option("--grid", grid, "start:step:stop in dB; prints a CSV")->excludes(pdb);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*sweep) {
      auto cfg = resolve(sweep_opts);
      cfg.mode = swipt::Mode::sweep;
      return report(swipt::run_experiment(cfg));
    }
    if (*compare) {
      auto cfg = resolve(compare_opts);
      cfg.mode = swipt::Mode::compare;
      if (cmp_qbar) cfg.compare.q_bar = *cmp_qbar;
      return report(swipt::run_experiment(cfg));
    }
    if (*run) return report(swipt::run_experiment(resolve(run_opts)));
    if (*vertices) {
      const auto cfg = resolve(vert_opts);
      const auto curves = swipt::region_vertices(cfg);
      swipt::write_vertices_csv(std::cout, curves);
      if (!vert_opts.out.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        std::ofstream o(std::filesystem::path(cfg.output_dir) / "vertices.csv", std::ios::binary);
        swipt::write_vertices_csv(o, curves);
      }
      return 0;
    }
    if (*qmin) {
      if (grid.empty()) {
        std::cout << swipt::format_real(swipt::qmin_closed_form(swipt::db_to_linear(power_db), lambda1, lambda2, r0, sigma2))
                  << '\n';
        return 0;
      }
      std::cout << "power_db,q_min\n";
      for (double db : swipt::detail::parse_reals(grid, 0)) {
        std::cout << swipt::format_real(db) << ','
                  << swipt::format_real(swipt::qmin_closed_form(swipt::db_to_linear(db), lambda1, lambda2, r0, sigma2))
                  << '\n';
      }
      return 0;
    }
  } catch (const swipt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
  } catch (const swipt::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 1;
}
