#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mada/poly_opt.hpp"
#include "mada/problems.hpp"
#include "mada/record.hpp"
#include "mada/schedule.hpp"
#include "mada/vec.hpp"

namespace mada {

// ---------------------------------------------------------------------------
// one-step hyper-gradient
// ---------------------------------------------------------------------------

struct HyperGrads {
  double beta1 = 0.0, beta2 = 0.0, beta3 = 0.0, rho = 0.0, c = 0.0, gamma = 0.0;
};

/// Analytic d f_next(x_t) / dq for one poly_step, with all state entering the
/// step held constant. grad_next is the gradient of f_next at x_t. The sign
/// and max operators back-propagate as routing (derivative 0 on the losing
/// branch), so the Lion betas receive no gradient and are not returned.
inline HyperGrads hypergrad(const StepTrace& tr, const Vec& grad_next) {
  check_same_dim(grad_next, tr.m, "hypergrad");
  const std::size_t d = grad_next.size();
  const double alpha = tr.alpha, eps = tr.eps;
  const double b2 = tr.q.beta2, b3 = tr.q.beta3;
  const double rho = tr.q.rho, c = tr.q.c, gamma = tr.q.gamma;
  const double inv_t = 1.0 / double(tr.t);

  HyperGrads hg;
  for (std::size_t i = 0; i < d; ++i) {
    const double gn = grad_next[i];
    if (gn == 0.0) continue;
    const double v = tr.v[i];
    const double den = std::sqrt(v) + eps;
    const double num = tr.m[i] + b3 * tr.n[i];
    const double ad = (den == 0.0) ? 0.0 : num / den;
    // d x / d v, shared by every second-moment path
    const double xv = (v > 0.0) ? alpha * gamma * num / (2.0 * std::sqrt(v) * den * den) : 0.0;
    // weight of d vbar on v: the rho-blend plus the vtilde / vmax route
    const double w = (tr.variant == PolyVariant::avgrad_interp)
                         ? rho + (1.0 - rho) * inv_t
                         : rho + (1.0 - rho) * double(tr.route_fresh[i]);

    // gamma: x depends on it directly through the update blend
    hg.gamma += gn * (-alpha) * (ad - sign0(tr.u[i]));

    // beta1 through m_t
    if (den != 0.0) {
      hg.beta1 += gn * (-alpha * gamma) * (tr.m_prev[i] - tr.g[i]) / den;
    }

    // beta2 through vbar_t
    hg.beta2 += gn * xv * w * (tr.vbar_prev[i] - tr.gtilde_sq[i]);

    // rho through the v blend
    hg.rho += gn * xv * (tr.vbar[i] - tr.vaux[i]);

    // c through the Yogi blend
    const double gg = tr.ghat[i] * tr.ghat[i];
    const double yogi = tr.vbar_prev[i] + gg * tr.yogi_sign[i];
    hg.c += gn * xv * w * (1.0 - b2) * (gg - yogi);

    // beta3 through n_t (numerator) and ghat (second-moment chain)
    const double dg = tr.g[i] - tr.g_prev[i];
    const double dnum = b3 * (tr.n_prev[i] - dg) + tr.n[i];
    const double dvbar = (1.0 - b2) * 2.0 * tr.ghat[i] * dg * (c + (1.0 - c) * tr.yogi_sign[i]);
    double term = gn * xv * w * dvbar;
    if (den != 0.0) term += gn * (-alpha * gamma) * dnum / den;
    hg.beta3 += term;
  }
  return hg;
}

/// Max-routing diagnostic for the beta2 hyper-gradient (max-interp only):
/// counts (step, coordinate) pairs where v_max blocks the fresh vbar path and
/// verifies the blocked path contributes exactly zero.
struct RoutingDiagnostic {
  std::size_t blocked = 0;
  std::size_t total = 0;
  double max_abs_blocked_contribution = 0.0;   // exact 0 when routing is correct
  double max_abs_would_be_contribution = 0.0;  // magnitude the path would carry if open

  double blocked_fraction() const {
    return total == 0 ? 0.0 : double(blocked) / double(total);
  }

  void merge(const RoutingDiagnostic& o) {
    blocked += o.blocked;
    total += o.total;
    if (o.max_abs_blocked_contribution > max_abs_blocked_contribution) {
      max_abs_blocked_contribution = o.max_abs_blocked_contribution;
    }
    if (o.max_abs_would_be_contribution > max_abs_would_be_contribution) {
      max_abs_would_be_contribution = o.max_abs_would_be_contribution;
    }
  }
};

inline RoutingDiagnostic beta2_routing_diagnostic(const StepTrace& tr, const Vec& grad_next) {
  if (tr.variant != PolyVariant::max_interp) {
    throw std::invalid_argument("beta2_routing_diagnostic: requires max-interp trace");
  }
  check_same_dim(grad_next, tr.m, "beta2_routing_diagnostic");
  RoutingDiagnostic diag;
  const double alpha = tr.alpha, eps = tr.eps;
  const double b3 = tr.q.beta3, rho = tr.q.rho, gamma = tr.q.gamma;
  for (std::size_t i = 0; i < grad_next.size(); ++i) {
    const double v = tr.v[i];
    const double den = std::sqrt(v) + eps;
    const double num = tr.m[i] + b3 * tr.n[i];
    const double xv = (v > 0.0) ? alpha * gamma * num / (2.0 * std::sqrt(v) * den * den) : 0.0;
    const double dvbar = tr.vbar_prev[i] - tr.gtilde_sq[i];
    const double route = double(tr.route_fresh[i]);
    const double through_max = grad_next[i] * xv * (1.0 - rho) * route * dvbar;
    const double would_be = std::fabs(grad_next[i] * xv * (1.0 - rho) * dvbar);
    diag.total += 1;
    if (tr.route_fresh[i] == 0) {
      diag.blocked += 1;
      double a = std::fabs(through_max);
      if (a > diag.max_abs_blocked_contribution) diag.max_abs_blocked_contribution = a;
      if (would_be > diag.max_abs_would_be_contribution) {
        diag.max_abs_would_be_contribution = would_be;
      }
    }
  }
  return diag;
}

// ---------------------------------------------------------------------------
// hyper-SGD with momentum, projected onto the coefficient domain
// ---------------------------------------------------------------------------

struct CoeffFlags {
  bool beta1 = true, beta2 = true, beta3 = true, rho = true, c = true, gamma = true;
};

struct HyperConfig {
  double lr_betas = 2.5e-3;  // beta1, beta2
  double lr_other = 2.5e-3;  // beta3, rho, c, gamma
  double momentum = 0.5;
  CoeffFlags momentum_enabled{true, true, true, true, true, false};  // none on gamma
  CoeffFlags learn_enabled{};
  long freeze_steps = 50;
  CoefficientDomain projection{};

  void validate(long total_steps) const {
    if (lr_betas < 0.0 || lr_other < 0.0) {
      throw std::invalid_argument("hyper config: learning rates must be >= 0");
    }
    if (momentum < 0.0 || momentum >= 1.0) {
      throw std::invalid_argument("hyper config: momentum must be in [0, 1)");
    }
    if (freeze_steps < 0) throw std::invalid_argument("hyper config: freeze_steps must be >= 0");
    if (total_steps > 0 && freeze_steps >= total_steps) {
      throw std::invalid_argument("hyper config: freeze_steps must be < total steps");
    }
  }
};

struct HyperState {
  CoefficientVector q;
  HyperGrads momentum_buf;  // one buffer per learnable coefficient
};

/// q_t = project[q_{t-1} - lr * momentum-filtered hyper-gradient]; frozen for
/// the first freeze_steps steps.
inline void hyper_update(HyperState& hs, const HyperGrads& grads, const HyperConfig& cfg, long t) {
  if (t < 1) throw std::invalid_argument("hyper_update: t must be >= 1");
  if (t <= cfg.freeze_steps) return;

  auto upd = [&](double& qf, double& buf, double g, double lr, bool mom_on, bool learn,
                 const Interval& bounds) {
    if (!learn) return;
    buf = (mom_on ? cfg.momentum * buf : 0.0) + g;
    qf = bounds.clamp(qf - lr * buf);
  };

  upd(hs.q.beta1, hs.momentum_buf.beta1, grads.beta1, cfg.lr_betas,
      cfg.momentum_enabled.beta1, cfg.learn_enabled.beta1, cfg.projection.beta1);
  upd(hs.q.beta2, hs.momentum_buf.beta2, grads.beta2, cfg.lr_betas,
      cfg.momentum_enabled.beta2, cfg.learn_enabled.beta2, cfg.projection.beta2);
  upd(hs.q.beta3, hs.momentum_buf.beta3, grads.beta3, cfg.lr_other,
      cfg.momentum_enabled.beta3, cfg.learn_enabled.beta3, cfg.projection.beta3);
  upd(hs.q.rho, hs.momentum_buf.rho, grads.rho, cfg.lr_other,
      cfg.momentum_enabled.rho, cfg.learn_enabled.rho, cfg.projection.rho);
  upd(hs.q.c, hs.momentum_buf.c, grads.c, cfg.lr_other,
      cfg.momentum_enabled.c, cfg.learn_enabled.c, cfg.projection.c);
  upd(hs.q.gamma, hs.momentum_buf.gamma, grads.gamma, cfg.lr_other,
      cfg.momentum_enabled.gamma, cfg.learn_enabled.gamma, cfg.projection.gamma);
}

// ---------------------------------------------------------------------------
// the MADA loop
// ---------------------------------------------------------------------------

struct MadaOptions {
  PolyVariant variant = PolyVariant::avgrad_interp;
  double eps = 1e-8;
  double weight_decay = 0.0;
  long record_stride = 0;  // 0 = auto: every step up to 1e4 steps, else every 10th
};

struct MadaResult {
  Vec x_final;
  CoefficientVector q_final;
  RunRecord record;
};

inline long auto_record_stride(long steps) { return steps <= 10000 ? 1 : 10; }

/// Alg.-1 loop: sample f_t, step the model with q_{t-1}, then update q via the
/// one-step hyper-gradient of f_t at x_{t-1} (trace of step t-1). For box-
/// constrained problems the iterate is projected after each step and grad_next
/// is zeroed on saturated coordinates (the projection's derivative).
inline MadaResult run_mada(const Problem& problem, const Schedule& schedule,
                           const CoefficientVector& q0, const HyperConfig& cfg,
                           long steps, std::uint64_t seed, const MadaOptions& opt = {}) {
  if (steps < 1) throw std::invalid_argument("run_mada: steps must be >= 1");
  cfg.validate(steps);
  if (!cfg.projection.contains(q0)) {
    throw std::invalid_argument("run_mada: q0 outside projection domain");
  }

  const std::size_t d = problem.dim();
  const long stride = opt.record_stride > 0 ? opt.record_stride : auto_record_stride(steps);
  const auto box = problem.constraint_box();

  Vec x = problem.initial_point(seed);
  PolyState st(opt.variant, d);
  HyperState hs{q0, {}};
  std::optional<StepTrace> prev_trace;
  std::vector<std::uint8_t> prev_saturated(d, 0);
  Vec masked(d);

  MadaResult res;
  res.record.summary.steps = steps;
  res.record.summary.seed = seed;

  double last_loss = 0.0;
  for (long t = 1; t <= steps; ++t) {
    const double alpha = schedule_at(schedule, t);
    EvalResult ev = problem.eval(x, t, seed);
    last_loss = ev.loss;

    // hyper step first computes grad_next for the PREVIOUS step's trace
    if (prev_trace) {
      for (std::size_t i = 0; i < d; ++i) {
        masked[i] = prev_saturated[i] ? 0.0 : ev.grad[i];
      }
      HyperGrads hg = hypergrad(*prev_trace, masked);
      // model step with q_{t-1}, then coefficient update to q_t
      StepTrace tr = poly_step(st, hs.q, x, ev.grad, alpha, opt.eps, opt.weight_decay);
      hyper_update(hs, hg, cfg, t);
      prev_trace = std::move(tr);
    } else {
      prev_trace = poly_step(st, hs.q, x, ev.grad, alpha, opt.eps, opt.weight_decay);
    }

    if (box) {
      for (std::size_t i = 0; i < d; ++i) {
        if (x[i] < box->lo) {
          x[i] = box->lo;
          prev_saturated[i] = 1;
        } else if (x[i] > box->hi) {
          x[i] = box->hi;
          prev_saturated[i] = 1;
        } else {
          prev_saturated[i] = 0;
        }
      }
    }

    if (t % stride == 0 || t == steps) {
      RunRow row;
      row.step = t;
      row.loss = ev.loss;
      row.lr = alpha;
      row.grad_norm = norm2(ev.grad);
      row.q = hs.q;
      Vec eff = poly_effective_lr(*prev_trace, alpha);
      row.eff_lr_min = eff.empty() ? 0.0 : *std::min_element(eff.begin(), eff.end());
      row.eff_lr_max = eff.empty() ? 0.0 : *std::max_element(eff.begin(), eff.end());
      res.record.rows.push_back(row);
    }
  }

  res.x_final = x;
  res.q_final = hs.q;
  res.record.summary.final_loss = last_loss;
  res.record.summary.final_q = hs.q;
  if (d <= 32) res.record.summary.final_x = x;
  return res;
}

}  // namespace mada
