#include <cinttypes>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mada/bounds.hpp"
#include "mada/hyper.hpp"
#include "mada/hypergrad_check.hpp"
#include "mada/numdiff.hpp"
#include "mada/rng.hpp"
#include "mada/runner.hpp"

namespace {

using namespace mada;

int cmd_run(const std::string& config_path, const std::vector<std::string>& sets,
            const std::string& plots_dir) {
  Config cfg = Config::parse_file(config_path);
  for (const auto& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + s + "'");
    }
    cfg.set(Config::trim(s.substr(0, eq)), Config::trim(s.substr(eq + 1)));
  }
  std::string out = execute_run_to_file(cfg);
  RunRecord rec = read_record(out);
  if (!plots_dir.empty()) {
    std::string dir = apply_out_dir(plots_dir);
    emit_coefficient_series(rec, dir + "/coefficients.txt");
    emit_loss_series(rec, dir + "/loss.txt");
  }
  std::printf("wrote %s (%zu rows), final loss %.17g, config %s\n", out.c_str(),
              rec.rows.size(), rec.summary.final_loss, rec.summary.config_hash.c_str());
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& grid_specs,
              const std::string& out_dir, int jobs) {
  Config base = Config::parse_file(config_path);
  std::vector<GridAxis> grid;
  grid.reserve(grid_specs.size());
  for (const auto& s : grid_specs) grid.push_back(parse_grid_axis(s));
  auto cells = run_sweep(base, grid, out_dir, jobs);
  std::printf("ran %zu cells into %s\n", cells.size(), apply_out_dir(out_dir).c_str());
  for (const auto& c : cells) {
    std::printf("  cell %zu: final_loss %.17g\n", c.index, c.final_loss);
  }
  return 0;
}

int cmd_reddi(const std::string& optimizer, long steps, const std::string& out_dir) {
  ReddiOutcome out = run_reddi(optimizer, steps);
  std::string dir = apply_out_dir(out_dir);
  ensure_parent_dir(dir + "/x");
  write_record(out.record, dir + "/record.csv");
  emit_series(out.steps, out.x_series, "x", dir + "/x.txt");
  emit_series(out.steps, out.regret_series, "avg_regret", dir + "/regret.txt");
  if (optimizer == "mada") {
    std::vector<long> rho_steps;
    rho_steps.reserve(out.record.rows.size());
    for (const auto& r : out.record.rows) rho_steps.push_back(r.step);
    emit_series(rho_steps, out.rho_series, "rho", dir + "/rho.txt");
  }
  std::printf("reddi %s: steps=%ld final_x=%.6f final_rho=%.6f final_avg_regret=%.6f\n",
              optimizer.c_str(), steps, out.x_final, out.rho_final, out.final_avg_regret);
  return 0;
}

int cmd_bound(double beta2, long T, int grid_n, double R, double L, long d, double alpha,
              double eps, double f_gap, const std::string& out_path) {
  BoundParams p;
  p.R = R;
  p.L = L;
  p.d = d;
  p.alpha = alpha;
  p.eps = eps;
  p.f_gap = f_gap;
  p.beta2 = beta2;
  p.T = T;
  Vec grid;
  grid.reserve(std::size_t(grid_n));
  for (int i = 0; i < grid_n; ++i) grid.push_back(double(i) / double(grid_n - 1));
  SweepResult sweep = thm3_sweep(p, grid);
  std::printf("# rho bound (beta2=%.17g T=%ld R=%g L=%g d=%ld alpha=%g eps=%g f_gap=%g)\n",
              beta2, T, R, L, d, alpha, eps, f_gap);
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    std::printf("%.6f %.17g%s\n", sweep.points[i].rho, sweep.points[i].bound,
                i == sweep.argmin ? "  <- argmin" : "");
  }
  if (!out_path.empty()) emit_bound_series(sweep, apply_out_dir(out_path));
  return 0;
}

int cmd_prop1(double beta2, long T, long streams, long dim, const std::string& schedule,
              std::uint64_t seed) {
  std::function<double(long)> rho;
  if (schedule == "boundary") {
    rho = [beta2](long t) { return prop1_rho_bound(t, beta2); };
  } else if (schedule == "zero") {
    rho = [](long) { return 0.0; };
  } else if (schedule == "adam") {
    rho = [](long) { return 1.0; };
  } else {
    throw std::invalid_argument("prop1: schedule must be boundary|zero|adam");
  }

  long monotone_ok = 0, condition_ok = 0, implication_failures = 0;
  std::optional<long> example_violation;
  for (long s = 0; s < streams; ++s) {
    Rng stream_rng = Rng(seed).substream(std::uint64_t(s));
    const double scale = stream_rng.uniform(0.5, 2.0);
    auto gen = [&](long t, Vec& g) {
      Rng r = stream_rng.substream(std::uint64_t(t));
      for (double& gi : g) {
        double mag = scale * r.uniform(0.6, 1.4);
        gi = (r.uniform01() < 0.5) ? -mag : mag;
      }
    };
    Prop1Result res = prop1_check(beta2, rho, T, std::size_t(dim), gen);
    if (res.monotone) ++monotone_ok;
    if (res.condition_held) ++condition_ok;
    if (res.condition_held && !res.monotone) {
      ++implication_failures;
      if (!example_violation) example_violation = res.first_monotonicity_violation;
    }
  }
  std::printf("prop1 schedule=%s beta2=%.17g T=%ld dim=%ld streams=%ld\n", schedule.c_str(),
              beta2, T, dim, streams);
  std::printf("  condition held:   %ld/%ld\n", condition_ok, streams);
  std::printf("  monotone:         %ld/%ld\n", monotone_ok, streams);
  std::printf("  implication fail: %ld%s\n", implication_failures,
              example_violation ? (" (first at t=" + std::to_string(*example_violation) + ")").c_str()
                                : "");
  return implication_failures == 0 ? 0 : 1;
}

int cmd_check_hypergrad(int trials, std::uint64_t seed) {
  HypergradCheckResult res = check_hypergrad_fd(trials, seed);
  bool ok = true;
  std::printf("one-step hyper-gradient vs central differences (h=%g, %d states/coefficient/variant)\n",
              kDefaultFdStep, trials);
  for (int k = 0; k < 6; ++k) {
    double e = res.max_rel_err[std::size_t(k)];
    std::printf("  %-6s max rel err %.3e%s\n", coefficient_names()[std::size_t(k)], e,
                e <= 1e-6 ? "" : "  EXCEEDS 1e-6");
    if (e > 1e-6) ok = false;
  }
  return ok ? 0 : 1;
}

int cmd_replay_fs(const std::string& record_path, const std::string& out_path) {
  RunRecord rec = replay_fs(record_path, apply_out_dir(out_path));
  CoefficientVector q = rec.summary.final_q;
  std::printf("replayed %s -> %s (frozen beta1=%.6g beta2=%.6g beta3=%.6g rho=%.6g c=%.6g gamma=%.6g)\n",
              record_path.c_str(), out_path.c_str(), q.beta1, q.beta2, q.beta3, q.rho, q.c,
              q.gamma);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parameterized-optimizer toolkit: runs, sweeps, bounds and diagnostics"};
  app.require_subcommand(1);

  std::string config_path, plots_dir, out_dir = "out", out_path, optimizer = "mada";
  std::vector<std::string> sets, grid_specs;
  int jobs = 1, grid_n = 101, trials = 50;
  long steps = 500000, T = 10000, streams = 100, dim = 10;
  double beta2 = 0.9;
  double R = 1.0, L = 1.0, alpha = 0.1, eps = 10.0, f_gap = 1.0;
  long d = 1;
  std::uint64_t seed = 1;
  std::string prop1_schedule = "boundary";
  std::string record_path;

  auto* run = app.add_subcommand("run", "execute one run config");
  run->add_option("--config", config_path, "flat key=value config file")->required();
  run->add_option("--set", sets, "override key=value (repeatable)");
  run->add_option("--emit-plots", plots_dir, "also write plot-ready series into this directory");

  auto* sweep = app.add_subcommand("sweep", "grid of runs over config keys");
  sweep->add_option("--config", config_path, "base config file")->required();
  sweep->add_option("--grid", grid_specs, "axis spec key=v1,v2,... (repeatable)")->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--jobs", jobs, "worker threads (cells stay deterministic)");

  auto* reddi = app.add_subcommand("reddi", "the adversarial convex experiment preset");
  reddi->add_option("--optimizer", optimizer, "adam|amsgrad|avgrad|yogi|adan|mada");
  reddi->add_option("--steps", steps, "online steps");
  reddi->add_option("--out", out_dir, "output directory");

  auto* bound = app.add_subcommand("bound", "interpolated-optimizer bound sweep over rho");
  bound->add_option("--beta2", beta2);
  bound->add_option("--T", T);
  bound->add_option("--grid", grid_n, "number of rho grid points on [0,1]");
  bound->add_option("--R", R);
  bound->add_option("--L", L);
  bound->add_option("--d", d);
  bound->add_option("--alpha", alpha);
  bound->add_option("--eps", eps);
  bound->add_option("--fgap", f_gap);
  bound->add_option("--out", out_path, "write rho/bound series to this file");

  auto* prop1 = app.add_subcommand("prop1", "effective-learning-rate monotonicity check");
  prop1->add_option("--beta2", beta2);
  prop1->add_option("--T", T);
  prop1->add_option("--streams", streams);
  prop1->add_option("--dim", dim);
  prop1->add_option("--schedule", prop1_schedule, "boundary|zero|adam");
  prop1->add_option("--seed", seed);

  auto* chk = app.add_subcommand("check-hypergrad", "finite-difference hyper-gradient verification");
  chk->add_option("--trials", trials, "states per coefficient per variant");
  chk->add_option("--seed", seed);

  auto* replay = app.add_subcommand("replay-fs", "re-run a record's final coefficients frozen");
  replay->add_option("--record", record_path, "prior record CSV")->required();
  replay->add_option("--out", out_path, "output record CSV")->required();

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(config_path, sets, plots_dir);
    if (sweep->parsed()) return cmd_sweep(config_path, grid_specs, out_dir, jobs);
    if (reddi->parsed()) return cmd_reddi(optimizer, steps, out_dir);
    if (bound->parsed()) return cmd_bound(beta2, T, grid_n, R, L, d, alpha, eps, f_gap, out_path);
    if (prop1->parsed()) return cmd_prop1(beta2, T, streams, dim, prop1_schedule, seed);
    if (chk->parsed()) return cmd_check_hypergrad(trials, seed);
    if (replay->parsed()) return cmd_replay_fs(record_path, out_path);
    std::fprintf(stderr, "error: no subcommand given\n");
    return 2;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.get_exit_code() == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
