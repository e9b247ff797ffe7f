#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mada/base_opt.hpp"
#include "mada/bounds.hpp"
#include "mada/config.hpp"
#include "mada/hyper.hpp"
#include "mada/poly_opt.hpp"
#include "mada/problems.hpp"
#include "mada/record.hpp"
#include "mada/schedule.hpp"
#include "mada/vec.hpp"

namespace mada {

// ---------------------------------------------------------------------------
// config surface
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "problem.kind", "problem.dim", "problem.seed", "problem.n",
      "problem.separation", "problem.label_noise", "problem.batch_size",
      "problem.layers", "problem.a", "problem.b",
      "schedule.kind", "schedule.peak", "schedule.final", "schedule.warmup",
      "schedule.total",
      "opt.mode", "opt.kind", "opt.variant",
      "opt.beta1", "opt.beta2", "opt.beta3", "opt.rho", "opt.c", "opt.gamma",
      "opt.lion_beta1", "opt.lion_beta2",
      "opt.eps", "opt.weight_decay", "opt.bias_correction",
      "mada.lr_betas", "mada.lr_other", "mada.momentum", "mada.freeze_steps",
      "mada.learn.beta1", "mada.learn.beta2", "mada.learn.beta3",
      "mada.learn.rho", "mada.learn.c", "mada.learn.gamma",
      "mada.momentum_on.beta1", "mada.momentum_on.beta2", "mada.momentum_on.beta3",
      "mada.momentum_on.rho", "mada.momentum_on.c", "mada.momentum_on.gamma",
      "run.steps", "run.seed", "run.record_stride", "run.out",
  };
  return keys;
}

/// Relative output paths are prefixed by $MADA_OUT_DIR when it is set.
inline std::string apply_out_dir(const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  const char* base = std::getenv("MADA_OUT_DIR");
  if (base == nullptr || *base == '\0') return path;
  return std::string(base) + "/" + path;
}

inline void ensure_parent_dir(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

inline std::unique_ptr<Problem> make_problem(const Config& cfg) {
  const std::string kind = cfg.get_string("problem.kind");
  const std::uint64_t pseed = std::uint64_t(cfg.get_long("problem.seed", 1));
  if (kind == "quadratic") {
    auto dim = std::size_t(cfg.get_long("problem.dim", 10));
    return std::make_unique<QuadraticProblem>(QuadraticProblem::random(dim, pseed));
  }
  if (kind == "rosenbrock") {
    auto dim = std::size_t(cfg.get_long("problem.dim", 2));
    return std::make_unique<RosenbrockProblem>(dim, cfg.get_double("problem.a", 1.0),
                                               cfg.get_double("problem.b", 100.0));
  }
  if (kind == "logistic-synth") {
    auto dim = std::size_t(cfg.get_long("problem.dim", 20));
    return std::make_unique<LogisticSynthProblem>(
        dim, std::size_t(cfg.get_long("problem.n", 512)),
        cfg.get_double("problem.separation", 2.0),
        cfg.get_double("problem.label_noise", 0.05),
        std::size_t(cfg.get_long("problem.batch_size", 32)), pseed);
  }
  if (kind == "reddi-online") {
    return std::make_unique<ReddiProblem>();
  }
  if (kind == "tiny-mlp") {
    TinyMlpSpec spec;
    if (cfg.has("problem.layers")) {
      spec.layer_widths.clear();
      std::string s = cfg.get_string("problem.layers");
      std::size_t pos = 0;
      while (pos <= s.size()) {
        auto comma = s.find(',', pos);
        std::string tok = Config::trim(s.substr(pos, comma == std::string::npos
                                                          ? std::string::npos
                                                          : comma - pos));
        if (!tok.empty()) spec.layer_widths.push_back(std::size_t(std::stol(tok)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    }
    spec.n_samples = std::size_t(cfg.get_long("problem.n", 512));
    spec.separation = cfg.get_double("problem.separation", 2.0);
    spec.label_noise = cfg.get_double("problem.label_noise", 0.1);
    spec.batch_size = std::size_t(cfg.get_long("problem.batch_size", 32));
    spec.dataset_seed = pseed;
    return std::make_unique<TinyMlpProblem>(spec);
  }
  throw std::invalid_argument("config: unknown problem.kind '" + kind + "'");
}

inline Schedule make_schedule(const Config& cfg, long run_steps) {
  const std::string kind = cfg.get_string("schedule.kind", "constant");
  const double peak = cfg.get_double("schedule.peak", 1e-3);
  switch (schedule_kind_from_string(kind)) {
    case ScheduleKind::constant:
      return Schedule::constant(peak);
    case ScheduleKind::inv_sqrt:
      return Schedule::inv_sqrt(peak);
    case ScheduleKind::cosine_warmup:
      return Schedule::cosine_warmup(peak, cfg.get_double("schedule.final", 0.0),
                                     cfg.get_long("schedule.warmup", 0),
                                     cfg.get_long("schedule.total", run_steps));
  }
  throw std::logic_error("make_schedule");
}

inline CoefficientVector coefficients_from_config(const Config& cfg) {
  CoefficientVector q;
  q.beta1 = cfg.get_double("opt.beta1", q.beta1);
  q.beta2 = cfg.get_double("opt.beta2", q.beta2);
  q.beta3 = cfg.get_double("opt.beta3", q.beta3);
  q.rho = cfg.get_double("opt.rho", q.rho);
  q.c = cfg.get_double("opt.c", q.c);
  q.gamma = cfg.get_double("opt.gamma", q.gamma);
  q.lion_beta1 = cfg.get_double("opt.lion_beta1", q.lion_beta1);
  q.lion_beta2 = cfg.get_double("opt.lion_beta2", q.lion_beta2);
  return q;
}

inline HyperConfig hyper_config_from(const Config& cfg) {
  HyperConfig hc;
  hc.lr_betas = cfg.get_double("mada.lr_betas", hc.lr_betas);
  hc.lr_other = cfg.get_double("mada.lr_other", hc.lr_other);
  hc.momentum = cfg.get_double("mada.momentum", hc.momentum);
  hc.freeze_steps = cfg.get_long("mada.freeze_steps", hc.freeze_steps);
  hc.learn_enabled.beta1 = cfg.get_bool("mada.learn.beta1", true);
  hc.learn_enabled.beta2 = cfg.get_bool("mada.learn.beta2", true);
  hc.learn_enabled.beta3 = cfg.get_bool("mada.learn.beta3", true);
  hc.learn_enabled.rho = cfg.get_bool("mada.learn.rho", true);
  hc.learn_enabled.c = cfg.get_bool("mada.learn.c", true);
  hc.learn_enabled.gamma = cfg.get_bool("mada.learn.gamma", true);
  hc.momentum_enabled.beta1 = cfg.get_bool("mada.momentum_on.beta1", true);
  hc.momentum_enabled.beta2 = cfg.get_bool("mada.momentum_on.beta2", true);
  hc.momentum_enabled.beta3 = cfg.get_bool("mada.momentum_on.beta3", true);
  hc.momentum_enabled.rho = cfg.get_bool("mada.momentum_on.rho", true);
  hc.momentum_enabled.c = cfg.get_bool("mada.momentum_on.c", true);
  hc.momentum_enabled.gamma = cfg.get_bool("mada.momentum_on.gamma", false);
  return hc;
}

/// Canonical polytope corner reported in the coefficient columns of base runs.
inline CoefficientVector vertex_coefficients(BaseKind kind, const BaseHyperParams& hp) {
  CoefficientVector q;
  q.beta1 = hp.beta1;
  q.beta2 = hp.beta2;
  q.beta3 = 0.0;
  q.rho = 1.0;
  q.c = 1.0;
  q.gamma = 1.0;
  q.lion_beta1 = hp.lion_beta1;
  q.lion_beta2 = hp.lion_beta2;
  switch (kind) {
    case BaseKind::amsgrad:
    case BaseKind::avgrad: q.rho = 0.0; break;
    case BaseKind::yogi: q.c = 0.0; break;
    case BaseKind::adan: q.beta3 = hp.beta3; break;
    case BaseKind::lion: q.gamma = 0.0; break;
    default: break;
  }
  return q;
}

// ---------------------------------------------------------------------------
// run execution
// ---------------------------------------------------------------------------

namespace detail {

inline void record_row(RunRecord& rec, long t, double loss, double alpha,
                       const Vec& g, const CoefficientVector& q, const Vec& eff) {
  RunRow row;
  row.step = t;
  row.loss = loss;
  row.lr = alpha;
  row.grad_norm = norm2(g);
  row.q = q;
  if (!eff.empty()) {
    double lo = eff[0], hi = eff[0];
    for (double e : eff) {
      if (e < lo) lo = e;
      if (e > hi) hi = e;
    }
    row.eff_lr_min = lo;
    row.eff_lr_max = hi;
  }
  rec.rows.push_back(row);
}

inline void project_onto(const std::optional<Box>& box, Vec& x) {
  if (!box) return;
  for (double& xi : x) {
    if (xi < box->lo) xi = box->lo;
    else if (xi > box->hi) xi = box->hi;
  }
}

}  // namespace detail

struct FixedRunResult {
  Vec x_final;
  double final_loss = 0.0;
  RunRecord record;
};

inline FixedRunResult run_base_optimizer(const Problem& problem, const Schedule& schedule,
                                         BaseKind kind, const BaseHyperParams& hp,
                                         long steps, std::uint64_t seed,
                                         long record_stride = 0) {
  if (steps < 1) throw std::invalid_argument("run: steps must be >= 1");
  const long stride = record_stride > 0 ? record_stride : auto_record_stride(steps);
  const auto box = problem.constraint_box();
  const CoefficientVector q = vertex_coefficients(kind, hp);

  Vec x = problem.initial_point(seed);
  BaseOptState st(problem.dim());
  FixedRunResult res;
  res.record.summary.steps = steps;
  res.record.summary.seed = seed;
  for (long t = 1; t <= steps; ++t) {
    const double alpha = schedule_at(schedule, t);
    EvalResult ev = problem.eval(x, t, seed);
    base_step(kind, st, hp, x, ev.grad, alpha);
    detail::project_onto(box, x);
    if (t % stride == 0 || t == steps) {
      detail::record_row(res.record, t, ev.loss, alpha, ev.grad, q, effective_lr(st, alpha));
    }
    res.final_loss = ev.loss;
  }
  res.x_final = x;
  res.record.summary.final_loss = res.final_loss;
  res.record.summary.final_q = q;
  if (x.size() <= 32) res.record.summary.final_x = x;
  return res;
}

inline FixedRunResult run_frozen_poly(const Problem& problem, const Schedule& schedule,
                                      const CoefficientVector& q, PolyVariant variant,
                                      double eps, double weight_decay, long steps,
                                      std::uint64_t seed, long record_stride = 0) {
  if (steps < 1) throw std::invalid_argument("run: steps must be >= 1");
  const long stride = record_stride > 0 ? record_stride : auto_record_stride(steps);
  const auto box = problem.constraint_box();

  Vec x = problem.initial_point(seed);
  FrozenPoly opt = freeze(q, variant, problem.dim(), eps, weight_decay);
  FixedRunResult res;
  res.record.summary.steps = steps;
  res.record.summary.seed = seed;
  for (long t = 1; t <= steps; ++t) {
    const double alpha = schedule_at(schedule, t);
    EvalResult ev = problem.eval(x, t, seed);
    StepTrace tr = opt.step(x, ev.grad, alpha);
    detail::project_onto(box, x);
    if (t % stride == 0 || t == steps) {
      detail::record_row(res.record, t, ev.loss, alpha, ev.grad, q, poly_effective_lr(tr, alpha));
    }
    res.final_loss = ev.loss;
  }
  res.x_final = x;
  res.record.summary.final_loss = res.final_loss;
  res.record.summary.final_q = q;
  if (x.size() <= 32) res.record.summary.final_x = x;
  return res;
}

/// Runs the configuration end to end and returns its record (summary carries
/// the config and its hash). Dispatches on opt.mode = base | poly | mada.
inline RunRecord execute_run(const Config& cfg) {
  cfg.validate_keys(known_config_keys());
  const auto t0 = std::chrono::steady_clock::now();

  const long steps = cfg.get_long("run.steps");
  if (steps < 1) throw std::invalid_argument("config: run.steps must be >= 1");
  const auto seed = std::uint64_t(cfg.get_long("run.seed", 1));
  const long stride = cfg.get_long("run.record_stride", 0);
  auto problem = make_problem(cfg);
  Schedule schedule = make_schedule(cfg, steps);
  const std::string mode = cfg.get_string("opt.mode");

  RunRecord rec;
  if (mode == "base") {
    BaseKind kind = base_kind_from_string(cfg.get_string("opt.kind"));
    BaseHyperParams hp;
    hp.beta1 = cfg.get_double("opt.beta1", hp.beta1);
    hp.beta2 = cfg.get_double("opt.beta2", hp.beta2);
    hp.beta3 = cfg.get_double("opt.beta3", hp.beta3);
    hp.eps = cfg.get_double("opt.eps", hp.eps);
    hp.weight_decay = cfg.get_double("opt.weight_decay", hp.weight_decay);
    hp.lion_beta1 = cfg.get_double("opt.lion_beta1", hp.lion_beta1);
    hp.lion_beta2 = cfg.get_double("opt.lion_beta2", hp.lion_beta2);
    hp.bias_correction = cfg.get_bool("opt.bias_correction", false);
    rec = run_base_optimizer(*problem, schedule, kind, hp, steps, seed, stride).record;
  } else if (mode == "poly") {
    PolyVariant variant = poly_variant_from_string(cfg.get_string("opt.variant", "avgrad-interp"));
    rec = run_frozen_poly(*problem, schedule, coefficients_from_config(cfg), variant,
                          cfg.get_double("opt.eps", 1e-8),
                          cfg.get_double("opt.weight_decay", 0.0), steps, seed, stride)
              .record;
  } else if (mode == "mada") {
    HyperConfig hc = hyper_config_from(cfg);
    if (steps <= hc.freeze_steps) {
      throw std::invalid_argument("config: run.steps must exceed mada.freeze_steps");
    }
    MadaOptions opts;
    opts.variant = poly_variant_from_string(cfg.get_string("opt.variant", "avgrad-interp"));
    opts.eps = cfg.get_double("opt.eps", 1e-8);
    opts.weight_decay = cfg.get_double("opt.weight_decay", 0.0);
    opts.record_stride = stride;
    rec = run_mada(*problem, schedule, coefficients_from_config(cfg), hc, steps, seed, opts)
              .record;
  } else {
    throw std::invalid_argument("config: unknown opt.mode '" + mode + "'");
  }

  rec.summary.config = cfg;
  rec.summary.config_hash = cfg.hash();
  rec.summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

inline std::string execute_run_to_file(const Config& cfg) {
  RunRecord rec = execute_run(cfg);
  std::string out = apply_out_dir(cfg.get_string("run.out", "record.csv"));
  ensure_parent_dir(out);
  write_record(rec, out);
  return out;
}

// ---------------------------------------------------------------------------
// plot-data emission (two-column / labeled plain text, no rendering)
// ---------------------------------------------------------------------------

inline void emit_coefficient_series(const RunRecord& rec, const std::string& path) {
  if (rec.rows.empty()) {
    throw std::invalid_argument("emit_plotdata: record has no coefficient series");
  }
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_plotdata: cannot open '" + path + "'");
  out << "step beta1 beta2 beta3 rho c gamma\n";
  for (const RunRow& r : rec.rows) {
    out << r.step << ' ' << detail::fmt_double(r.q.beta1) << ' '
        << detail::fmt_double(r.q.beta2) << ' ' << detail::fmt_double(r.q.beta3) << ' '
        << detail::fmt_double(r.q.rho) << ' ' << detail::fmt_double(r.q.c) << ' '
        << detail::fmt_double(r.q.gamma) << '\n';
  }
}

inline void emit_loss_series(const RunRecord& rec, const std::string& path) {
  if (rec.rows.empty()) throw std::invalid_argument("emit_plotdata: record has no loss series");
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_plotdata: cannot open '" + path + "'");
  out << "step loss\n";
  for (const RunRow& r : rec.rows) {
    out << r.step << ' ' << detail::fmt_double(r.loss) << '\n';
  }
}

inline void emit_series(const std::vector<long>& steps, const Vec& values,
                        const std::string& label, const std::string& path) {
  if (values.empty() || steps.size() != values.size()) {
    throw std::invalid_argument("emit_plotdata: missing series '" + label + "'");
  }
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_plotdata: cannot open '" + path + "'");
  out << "step " << label << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << steps[i] << ' ' << detail::fmt_double(values[i]) << '\n';
  }
}

inline void emit_bound_series(const SweepResult& sweep, const std::string& path) {
  if (sweep.points.empty()) throw std::invalid_argument("emit_plotdata: missing series 'bound'");
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_plotdata: cannot open '" + path + "'");
  out << "rho bound\n";
  for (const auto& p : sweep.points) {
    out << detail::fmt_double(p.rho) << ' ' << detail::fmt_double(p.bound) << '\n';
  }
}

// ---------------------------------------------------------------------------
// the Appendix-C.3 adversarial experiment preset
// ---------------------------------------------------------------------------

struct ReddiOutcome {
  double x_final = 0.0;
  double rho_final = 1.0;
  double final_avg_regret = 0.0;
  RunRecord record;
  std::vector<long> steps;
  Vec x_series, rho_series, regret_series;  // sampled at the record stride
};

/// Runs the adversarial convex problem for a named optimizer. The mada preset
/// starts from the Adam vertex (rho0 = 1, beta1 = 0.9, beta2 = 0.99) with
/// gamma pinned, hyper-SGD momentum 0.5 on (beta3, rho, c) and lr 0.5.
inline ReddiOutcome run_reddi(const std::string& optimizer, long steps,
                              long record_stride = 0) {
  if (steps < 1) throw std::invalid_argument("reddi: steps must be >= 1");
  const long stride = record_stride > 0 ? record_stride : auto_record_stride(steps);
  ReddiProblem problem;
  Schedule schedule = Schedule::inv_sqrt(2.0);
  const std::uint64_t seed = 1;

  ReddiOutcome out;
  Vec x_hist;
  x_hist.reserve(std::size_t(steps));

  if (optimizer == "mada") {
    CoefficientVector q0;
    q0.beta1 = 0.9;
    q0.beta2 = 0.99;
    q0.beta3 = 0.0;
    q0.rho = 1.0;
    q0.c = 1.0;
    q0.gamma = 1.0;
    HyperConfig hc;
    hc.lr_other = 0.5;
    hc.momentum = 0.5;
    hc.freeze_steps = 50;
    hc.learn_enabled.beta1 = false;
    hc.learn_enabled.beta2 = false;
    hc.learn_enabled.gamma = false;

    // same loop as run_mada, kept inline to collect the x_t series
    PolyState st(PolyVariant::avgrad_interp, 1);
    HyperState hs{q0, {}};
    std::optional<StepTrace> prev_trace;
    bool prev_saturated = false;
    Vec x = problem.initial_point(seed);
    out.record.summary.steps = steps;
    out.record.summary.seed = seed;
    for (long t = 1; t <= steps; ++t) {
      const double alpha = schedule_at(schedule, t);
      EvalResult ev = problem.eval(x, t, seed);
      if (prev_trace) {
        Vec masked{prev_saturated ? 0.0 : ev.grad[0]};
        HyperGrads hg = hypergrad(*prev_trace, masked);
        StepTrace tr = poly_step(st, hs.q, x, ev.grad, alpha, 1e-8, 0.0);
        hyper_update(hs, hg, hc, t);
        prev_trace = std::move(tr);
      } else {
        prev_trace = poly_step(st, hs.q, x, ev.grad, alpha, 1e-8, 0.0);
      }
      prev_saturated = x[0] < -1.0 || x[0] > 1.0;
      if (x[0] < -1.0) x[0] = -1.0;
      if (x[0] > 1.0) x[0] = 1.0;
      x_hist.push_back(x[0]);
      if (t % stride == 0 || t == steps) {
        detail::record_row(out.record, t, ev.loss, alpha, ev.grad, hs.q,
                           poly_effective_lr(*prev_trace, alpha));
      }
      out.record.summary.final_loss = ev.loss;
    }
    out.x_final = x[0];
    out.rho_final = hs.q.rho;
    out.record.summary.final_q = hs.q;
    out.record.summary.final_x = x;
  } else {
    BaseKind kind = base_kind_from_string(optimizer);
    BaseHyperParams hp;
    hp.beta1 = 0.9;
    hp.beta2 = 0.99;
    hp.eps = 1e-8;
    const CoefficientVector q = vertex_coefficients(kind, hp);
    Vec x = problem.initial_point(seed);
    BaseOptState st(1);
    out.record.summary.steps = steps;
    out.record.summary.seed = seed;
    for (long t = 1; t <= steps; ++t) {
      const double alpha = schedule_at(schedule, t);
      EvalResult ev = problem.eval(x, t, seed);
      base_step(kind, st, hp, x, ev.grad, alpha);
      if (x[0] < -1.0) x[0] = -1.0;
      if (x[0] > 1.0) x[0] = 1.0;
      x_hist.push_back(x[0]);
      if (t % stride == 0 || t == steps) {
        detail::record_row(out.record, t, ev.loss, alpha, ev.grad, q, effective_lr(st, alpha));
      }
      out.record.summary.final_loss = ev.loss;
    }
    out.x_final = x[0];
    out.rho_final = q.rho;
    out.record.summary.final_q = q;
    out.record.summary.final_x = x;
  }

  Vec regret = reddi_average_regret(x_hist);
  out.final_avg_regret = regret.back();
  for (long t = stride; t <= steps; t += stride) {
    out.steps.push_back(t);
    out.x_series.push_back(x_hist[std::size_t(t - 1)]);
    out.regret_series.push_back(regret[std::size_t(t - 1)]);
  }
  if (out.steps.empty() || out.steps.back() != steps) {
    out.steps.push_back(steps);
    out.x_series.push_back(x_hist.back());
    out.regret_series.push_back(regret.back());
  }
  if (optimizer == "mada") {
    out.rho_series.reserve(out.record.rows.size());
    for (const RunRow& r : out.record.rows) out.rho_series.push_back(r.q.rho);
  }
  return out;
}

// ---------------------------------------------------------------------------
// sweeps: cartesian grid over config keys, one record per cell
// ---------------------------------------------------------------------------

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

inline GridAxis parse_grid_axis(const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("sweep: grid spec must be key=v1,v2,... got '" + spec + "'");
  }
  GridAxis axis;
  axis.key = Config::trim(spec.substr(0, eq));
  std::string rest = spec.substr(eq + 1);
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    auto comma = rest.find(',', pos);
    std::string tok = Config::trim(
        rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (!tok.empty()) axis.values.push_back(tok);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (axis.values.empty()) {
    throw std::invalid_argument("sweep: grid axis '" + axis.key + "' has no values");
  }
  return axis;
}

struct SweepCell {
  std::size_t index = 0;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string record_path;
  double final_loss = 0.0;
};

/// Runs the cartesian product of the grid axes over the base config; cells
/// are single-threaded and deterministic, optionally executed on `jobs`
/// worker threads (order-independent by construction).
inline std::vector<SweepCell> run_sweep(const Config& base, const std::vector<GridAxis>& grid,
                                        const std::string& out_dir, int jobs = 1) {
  if (grid.empty()) throw std::invalid_argument("sweep: no grid axes given");
  std::size_t n_cells = 1;
  for (const auto& a : grid) n_cells *= a.values.size();
  if (n_cells == 0) throw std::invalid_argument("sweep: empty grid");

  const std::string dir = apply_out_dir(out_dir);
  std::filesystem::create_directories(dir);

  std::vector<SweepCell> cells(n_cells);
  for (std::size_t idx = 0; idx < n_cells; ++idx) {
    std::size_t rem = idx;
    SweepCell& cell = cells[idx];
    cell.index = idx;
    for (const auto& axis : grid) {
      cell.overrides.emplace_back(axis.key, axis.values[rem % axis.values.size()]);
      rem /= axis.values.size();
    }
    cell.record_path = dir + "/cell_" + std::to_string(idx) + ".csv";
  }

  auto run_cell = [&](std::size_t idx) {
    Config cfg = base;
    for (const auto& [k, v] : cells[idx].overrides) cfg.set(k, v);
    cfg.set("run.out", cells[idx].record_path);
    RunRecord rec = execute_run(cfg);
    write_record(rec, cells[idx].record_path);
    cells[idx].final_loss = rec.summary.final_loss;
  };

  if (jobs <= 1) {
    for (std::size_t i = 0; i < n_cells; ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    int n_workers = int(std::min(std::size_t(jobs), n_cells));
    workers.reserve(std::size_t(n_workers));
    for (int w = 0; w < n_workers; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= n_cells) return;
          run_cell(i);
        }
      });
    }
    for (auto& th : workers) th.join();
  }

  std::ofstream manifest(dir + "/sweep_manifest.tsv", std::ios::binary);
  if (!manifest) throw std::runtime_error("sweep: cannot open manifest in '" + dir + "'");
  manifest << "cell\toverrides\trecord\tfinal_loss\n";
  for (const auto& cell : cells) {
    manifest << cell.index << '\t';
    for (std::size_t i = 0; i < cell.overrides.size(); ++i) {
      if (i) manifest << ',';
      manifest << cell.overrides[i].first << '=' << cell.overrides[i].second;
    }
    manifest << '\t' << cell.record_path << '\t' << detail::fmt_double(cell.final_loss) << '\n';
  }
  return cells;
}

// ---------------------------------------------------------------------------
// MADA-FS replay
// ---------------------------------------------------------------------------

/// Reads a record, extracts the final learned coefficients and re-runs the
/// embedded config as a frozen poly optimizer from scratch.
inline RunRecord replay_fs(const std::string& record_path, const std::string& out_path) {
  RunRecord prior = read_record(record_path);
  CoefficientVector q = extract_fs(prior);
  Config cfg = prior.summary.config;
  if (cfg.values().empty()) {
    throw std::invalid_argument("replay-fs: record carries no embedded config");
  }
  // drop mada keys, freeze the learned coefficients
  Config frozen;
  for (const auto& [k, v] : cfg.values()) {
    if (k.rfind("mada.", 0) == 0) continue;
    frozen.set(k, v);
  }
  frozen.set("opt.mode", "poly");
  auto set_d = [&](const char* key, double v) { frozen.set(key, detail::fmt_double(v)); };
  set_d("opt.beta1", q.beta1);
  set_d("opt.beta2", q.beta2);
  set_d("opt.beta3", q.beta3);
  set_d("opt.rho", q.rho);
  set_d("opt.c", q.c);
  set_d("opt.gamma", q.gamma);
  set_d("opt.lion_beta1", q.lion_beta1);
  set_d("opt.lion_beta2", q.lion_beta2);
  frozen.set("run.out", out_path);
  RunRecord rec = execute_run(frozen);
  ensure_parent_dir(out_path);
  write_record(rec, out_path);
  return rec;
}

}  // namespace mada
