#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mada/vec.hpp"

namespace mada {

// ---------------------------------------------------------------------------
// coefficient vector and its clamp domain
// ---------------------------------------------------------------------------

/// Learnable coefficients of the parameterized optimizer. Vertices of the
/// polytope reproduce the base optimizers (adam: beta3=0, c=rho=1;
/// avgrad/amsgrad: rho=0, c=1, beta3=0; yogi: beta3=c=0, rho=1;
/// adan: c=rho=1; lion direction: gamma=0).
struct CoefficientVector {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double beta3 = 0.0;
  double rho = 1.0;
  double c = 1.0;
  double gamma = 1.0;
  double lion_beta1 = 0.9;
  double lion_beta2 = 0.99;

  bool operator==(const CoefficientVector&) const = default;
};

struct Interval {
  double lo = 0.0, hi = 1.0;
  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct CoefficientDomain {
  Interval beta1{0.0, 0.99};
  Interval beta2{0.5, 0.99};
  Interval beta3{0.0, 0.99};
  Interval rho{0.0, 1.0};
  Interval c{0.0, 1.0};
  Interval gamma{0.0, 1.0};
  Interval lion_beta1{0.0, 1.0};
  Interval lion_beta2{0.0, 1.0};

  bool contains(const CoefficientVector& q) const {
    return beta1.contains(q.beta1) && beta2.contains(q.beta2) &&
           beta3.contains(q.beta3) && rho.contains(q.rho) && c.contains(q.c) &&
           gamma.contains(q.gamma) && lion_beta1.contains(q.lion_beta1) &&
           lion_beta2.contains(q.lion_beta2);
  }

  CoefficientVector clamp(const CoefficientVector& q) const {
    CoefficientVector r = q;
    r.beta1 = beta1.clamp(q.beta1);
    r.beta2 = beta2.clamp(q.beta2);
    r.beta3 = beta3.clamp(q.beta3);
    r.rho = rho.clamp(q.rho);
    r.c = c.clamp(q.c);
    r.gamma = gamma.clamp(q.gamma);
    r.lion_beta1 = lion_beta1.clamp(q.lion_beta1);
    r.lion_beta2 = lion_beta2.clamp(q.lion_beta2);
    return r;
  }
};

inline const CoefficientDomain& default_domain() {
  static const CoefficientDomain d{};
  return d;
}

// ---------------------------------------------------------------------------
// state and trace
// ---------------------------------------------------------------------------

/// avgrad_interp: v = rho*vbar + (1-rho)*vtilde (running average, production
/// path). max_interp: v = rho*vbar + (1-rho)*vmax (AMSGrad-style, kept for
/// the hyper-gradient routing diagnostic).
enum class PolyVariant { avgrad_interp, max_interp };

inline PolyVariant poly_variant_from_string(const std::string& s) {
  if (s == "avgrad-interp") return PolyVariant::avgrad_interp;
  if (s == "max-interp") return PolyVariant::max_interp;
  throw std::invalid_argument("unknown poly variant '" + s + "'");
}

inline const char* to_string(PolyVariant v) {
  return v == PolyVariant::avgrad_interp ? "avgrad-interp" : "max-interp";
}

struct PolyState {
  PolyVariant variant = PolyVariant::avgrad_interp;
  long t = 0;
  Vec m, n, mlion, vbar, vtilde, vmax, prev_grad;

  PolyState(PolyVariant var, std::size_t dim)
      : variant(var), m(dim, 0.0), n(dim, 0.0), mlion(dim, 0.0),
        vbar(dim, 0.0), vtilde(dim, 0.0), vmax(dim, 0.0), prev_grad(dim, 0.0) {}

  std::size_t dim() const { return m.size(); }
};

/// Everything the one-step hyper-gradient needs from a single poly_step:
/// entering state, the step's intermediates and the max routing mask.
struct StepTrace {
  PolyVariant variant = PolyVariant::avgrad_interp;
  long t = 0;  // step index of this step (1-based)
  CoefficientVector q;
  double alpha = 0.0, eps = 0.0;

  Vec g, g_prev;                  // gradient and previous gradient
  Vec m_prev, n_prev, vbar_prev;  // entering first/second-moment state
  Vec x_pre;                      // iterate before weight decay

  Vec m, n, u;           // first-moment outputs (u = lion moment term)
  Vec ghat, gtilde_sq;   // second-moment chain intermediates
  Vec yogi_sign;         // sign(ghat^2 - vbar_prev), in {-1, 0, 1}
  Vec vbar, vaux, v;     // vaux = vtilde (avgrad) or vmax (max-interp)
  std::vector<std::uint8_t> route_fresh;  // max-interp: 1 if vbar_t >= vmax_{t-1}

  bool operator==(const StepTrace&) const = default;
};

// ---------------------------------------------------------------------------
// the parameterized step
// ---------------------------------------------------------------------------

/// One update of the parameterized optimizer (Adan-style first moment, the
/// c-blended Yogi second-moment chain, rho-interpolated normalizer, and the
/// gamma-blended adaptive/Lion update), with decoupled weight decay applied
/// first. Returns the trace of every intermediate.
inline StepTrace poly_step(PolyState& st, const CoefficientVector& q, Vec& x,
                           const Vec& g, double alpha, double eps, double lambda) {
  check_same_dim(x, g, "poly_step");
  if (x.size() != st.dim()) throw std::invalid_argument("poly_step: state dimension mismatch");
  if (!default_domain().contains(q)) {
    throw std::invalid_argument("poly_step: coefficients outside domain");
  }
  if (eps < 0.0) throw std::invalid_argument("poly_step: eps must be >= 0");
  require_finite(g, "poly_step: gradient");

  const std::size_t d = x.size();
  const long t = st.t + 1;
  const double td = double(t);
  const double b1 = q.beta1, b2 = q.beta2, b3 = q.beta3;
  const double rho = q.rho, c = q.c, gamma = q.gamma;

  StepTrace tr;
  tr.variant = st.variant;
  tr.t = t;
  tr.q = q;
  tr.alpha = alpha;
  tr.eps = eps;
  tr.x_pre = x;
  tr.g = g;
  tr.m_prev = st.m;
  tr.n_prev = st.n;
  tr.vbar_prev = st.vbar;
  tr.g_prev.resize(d);
  tr.yogi_sign.resize(d);
  tr.ghat.resize(d);
  tr.gtilde_sq.resize(d);
  tr.u.resize(d);
  if (st.variant == PolyVariant::max_interp) tr.route_fresh.resize(d);

  if (lambda != 0.0) {
    for (std::size_t i = 0; i < d; ++i) x[i] -= lambda * alpha * x[i];
  }

  const bool first = (st.t == 0);
  Vec v(d);
  for (std::size_t i = 0; i < d; ++i) {
    double gp = first ? g[i] : st.prev_grad[i];
    double dg = g[i] - gp;
    tr.g_prev[i] = gp;

    st.m[i] = b1 * st.m[i] + (1.0 - b1) * g[i];
    st.n[i] = b3 * st.n[i] + (1.0 - b3) * dg;
    double u = q.lion_beta1 * st.mlion[i] + (1.0 - q.lion_beta1) * g[i];
    st.mlion[i] = q.lion_beta2 * st.mlion[i] + (1.0 - q.lion_beta2) * g[i];
    tr.u[i] = u;

    double ghat = g[i] + b3 * dg;
    double gg = ghat * ghat;
    double s = sign0(gg - st.vbar[i]);
    double yogi = st.vbar[i] + gg * s;
    double gt2 = c * gg + (1.0 - c) * yogi;
    st.vbar[i] = b2 * st.vbar[i] + (1.0 - b2) * gt2;
    tr.ghat[i] = ghat;
    tr.yogi_sign[i] = s;
    tr.gtilde_sq[i] = gt2;

    if (st.variant == PolyVariant::avgrad_interp) {
      st.vtilde[i] = (st.vbar[i] + (td - 1.0) * st.vtilde[i]) / td;
      v[i] = rho * st.vbar[i] + (1.0 - rho) * st.vtilde[i];
    } else {
      bool fresh = st.vbar[i] >= st.vmax[i];
      st.vmax[i] = fresh ? st.vbar[i] : st.vmax[i];
      tr.route_fresh[i] = fresh ? 1 : 0;
      v[i] = rho * st.vbar[i] + (1.0 - rho) * st.vmax[i];
    }

    double num = st.m[i] + b3 * st.n[i];
    double den = std::sqrt(v[i]) + eps;
    double ad = (den == 0.0) ? 0.0 : num / den;
    double upd = gamma * ad + (1.0 - gamma) * sign0(u);
    x[i] -= alpha * upd;
  }

  st.prev_grad = g;
  st.t = t;

  tr.m = st.m;
  tr.n = st.n;
  tr.vbar = st.vbar;
  tr.vaux = (st.variant == PolyVariant::avgrad_interp) ? st.vtilde : st.vmax;
  tr.v = std::move(v);
  return tr;
}

// ---------------------------------------------------------------------------
// frozen handle (MADA-FS)
// ---------------------------------------------------------------------------

/// poly_step with q held constant for a whole run.
class FrozenPoly {
 public:
  FrozenPoly(PolyVariant variant, const CoefficientVector& q, std::size_t dim,
             double eps, double weight_decay)
      : q_(q), st_(variant, dim), eps_(eps), lambda_(weight_decay) {
    if (!default_domain().contains(q)) {
      throw std::invalid_argument("freeze: coefficients outside domain");
    }
  }

  StepTrace step(Vec& x, const Vec& g, double alpha) {
    return poly_step(st_, q_, x, g, alpha, eps_, lambda_);
  }

  const CoefficientVector& coefficients() const { return q_; }
  const PolyState& state() const { return st_; }
  double eps() const { return eps_; }

 private:
  CoefficientVector q_;
  PolyState st_;
  double eps_, lambda_;
};

inline FrozenPoly freeze(const CoefficientVector& q, PolyVariant variant,
                         std::size_t dim, double eps = 1e-8,
                         double weight_decay = 0.0) {
  return FrozenPoly(variant, q, dim, eps, weight_decay);
}

/// Per-coordinate alpha/sqrt(v) with v == 0 -> 0, from a step trace.
inline Vec poly_effective_lr(const StepTrace& tr, double alpha) {
  Vec out(tr.v.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (tr.v[i] == 0.0) ? 0.0 : alpha / std::sqrt(tr.v[i]);
  }
  return out;
}

}  // namespace mada
