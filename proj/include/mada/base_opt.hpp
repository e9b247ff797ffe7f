#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mada/vec.hpp"

namespace mada {

enum class BaseKind { sgd_momentum, adam, amsgrad, avgrad, yogi, adan, lion };

inline BaseKind base_kind_from_string(const std::string& s) {
  if (s == "sgd-momentum") return BaseKind::sgd_momentum;
  if (s == "adam") return BaseKind::adam;
  if (s == "amsgrad") return BaseKind::amsgrad;
  if (s == "avgrad") return BaseKind::avgrad;
  if (s == "yogi") return BaseKind::yogi;
  if (s == "adan") return BaseKind::adan;
  if (s == "lion") return BaseKind::lion;
  throw std::invalid_argument("unknown optimizer kind '" + s + "'");
}

inline const char* to_string(BaseKind k) {
  switch (k) {
    case BaseKind::sgd_momentum: return "sgd-momentum";
    case BaseKind::adam: return "adam";
    case BaseKind::amsgrad: return "amsgrad";
    case BaseKind::avgrad: return "avgrad";
    case BaseKind::yogi: return "yogi";
    case BaseKind::adan: return "adan";
    case BaseKind::lion: return "lion";
  }
  return "?";
}

struct BaseHyperParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double beta3 = 0.9;        // Adan gradient-difference momentum
  double eps = 1e-8;
  double weight_decay = 0.0;
  double lion_beta1 = 0.9;
  double lion_beta2 = 0.99;
  bool bias_correction = false;  // off for all acceptance/theory runs

  void validate() const {
    auto in01 = [](double b) { return b >= 0.0 && b < 1.0; };
    if (!in01(beta1) || !in01(beta2) || !in01(beta3) || !in01(lion_beta1) ||
        !in01(lion_beta2)) {
      throw std::invalid_argument("base hyperparams: betas must be in [0, 1)");
    }
    if (eps < 0.0) throw std::invalid_argument("base hyperparams: eps must be >= 0");
    if (weight_decay < 0.0) {
      throw std::invalid_argument("base hyperparams: weight_decay must be >= 0");
    }
  }
};

/// Persistent per-parameter buffers, all zero-initialized. v holds the
/// effective second moment after the optimizer's transform (vbar, vmax or
/// the running average, depending on the kind).
struct BaseOptState {
  long t = 0;
  Vec m, vbar, v, vmax, vavg, n, prev_grad, mlion;

  explicit BaseOptState(std::size_t dim)
      : m(dim, 0.0), vbar(dim, 0.0), v(dim, 0.0), vmax(dim, 0.0),
        vavg(dim, 0.0), n(dim, 0.0), prev_grad(dim, 0.0), mlion(dim, 0.0) {}

  std::size_t dim() const { return m.size(); }
};

/// One update of the named optimizer, no bias correction unless enabled.
/// Decoupled weight decay x -= lambda*alpha*x is applied before the moment
/// updates. state.t is the count of prior steps.
inline void base_step(BaseKind kind, BaseOptState& st, const BaseHyperParams& hp,
                      Vec& x, const Vec& g, double alpha) {
  hp.validate();
  check_same_dim(x, g, "base_step");
  if (x.size() != st.dim()) throw std::invalid_argument("base_step: state dimension mismatch");
  require_finite(g, "base_step: gradient");

  const std::size_t d = x.size();
  const long t = st.t + 1;
  const double b1 = hp.beta1, b2 = hp.beta2, b3 = hp.beta3, eps = hp.eps;

  if (hp.weight_decay != 0.0) {
    for (std::size_t i = 0; i < d; ++i) x[i] -= hp.weight_decay * alpha * x[i];
  }

  double bc1 = 1.0, bc2 = 1.0;
  if (hp.bias_correction) {
    bc1 = 1.0 - std::pow(b1, double(t));
    bc2 = 1.0 - std::pow(b2, double(t));
  }

  switch (kind) {
    case BaseKind::sgd_momentum:
      for (std::size_t i = 0; i < d; ++i) {
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * g[i];
        x[i] -= alpha * (st.m[i] / bc1);
      }
      break;

    case BaseKind::adam:
      for (std::size_t i = 0; i < d; ++i) {
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * g[i];
        st.vbar[i] = b2 * st.vbar[i] + (1.0 - b2) * (g[i] * g[i]);
        st.v[i] = st.vbar[i];
        double den = std::sqrt(st.v[i] / bc2) + eps;
        x[i] -= alpha * ((den == 0.0) ? 0.0 : (st.m[i] / bc1) / den);
      }
      break;

    case BaseKind::amsgrad:
      for (std::size_t i = 0; i < d; ++i) {
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * g[i];
        st.vbar[i] = b2 * st.vbar[i] + (1.0 - b2) * (g[i] * g[i]);
        st.vmax[i] = std::max(st.vmax[i], st.vbar[i]);
        st.v[i] = st.vmax[i];
        double den = std::sqrt(st.v[i] / bc2) + eps;
        x[i] -= alpha * ((den == 0.0) ? 0.0 : (st.m[i] / bc1) / den);
      }
      break;

    case BaseKind::avgrad: {
      const double td = double(t);
      for (std::size_t i = 0; i < d; ++i) {
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * g[i];
        st.vbar[i] = b2 * st.vbar[i] + (1.0 - b2) * (g[i] * g[i]);
        st.vavg[i] = (st.vbar[i] + (td - 1.0) * st.vavg[i]) / td;
        st.v[i] = st.vavg[i];
        double den = std::sqrt(st.v[i] / bc2) + eps;
        x[i] -= alpha * ((den == 0.0) ? 0.0 : (st.m[i] / bc1) / den);
      }
      break;
    }

    case BaseKind::yogi:
      for (std::size_t i = 0; i < d; ++i) {
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * g[i];
        double gg = g[i] * g[i];
        double yogi = st.vbar[i] + gg * sign0(gg - st.vbar[i]);
        st.vbar[i] = b2 * st.vbar[i] + (1.0 - b2) * yogi;
        st.v[i] = st.vbar[i];
        double den = std::sqrt(st.v[i] / bc2) + eps;
        x[i] -= alpha * ((den == 0.0) ? 0.0 : (st.m[i] / bc1) / den);
      }
      break;

    case BaseKind::adan: {
      // g_0 := g_1, so n_1 = 0 and beta3 = 0 reduces to Adam from step 1
      const bool first = (st.t == 0);
      for (std::size_t i = 0; i < d; ++i) {
        double gp = first ? g[i] : st.prev_grad[i];
        double dg = g[i] - gp;
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * g[i];
        st.n[i] = b3 * st.n[i] + (1.0 - b3) * dg;
        double ghat = g[i] + b3 * dg;
        st.vbar[i] = b2 * st.vbar[i] + (1.0 - b2) * (ghat * ghat);
        st.v[i] = st.vbar[i];
        double num = st.m[i] + b3 * st.n[i];
        double den = std::sqrt(st.v[i] / bc2) + eps;
        x[i] -= alpha * ((den == 0.0) ? 0.0 : (num / bc1) / den);
      }
      break;
    }

    case BaseKind::lion:
      for (std::size_t i = 0; i < d; ++i) {
        double u = hp.lion_beta1 * st.mlion[i] + (1.0 - hp.lion_beta1) * g[i];
        x[i] -= alpha * sign0(u);
        st.mlion[i] = hp.lion_beta2 * st.mlion[i] + (1.0 - hp.lion_beta2) * g[i];
      }
      break;
  }

  st.prev_grad = g;
  st.t = t;
}

/// Per-coordinate effective learning rate alpha/sqrt(v), with v == 0 -> 0.
inline Vec effective_lr(const BaseOptState& st, double alpha) {
  if (st.t < 1) throw std::invalid_argument("effective_lr: state not stepped yet");
  Vec out(st.dim());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (st.v[i] == 0.0) ? 0.0 : alpha / std::sqrt(st.v[i]);
  }
  return out;
}

}  // namespace mada
