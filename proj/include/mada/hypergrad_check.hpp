#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "mada/hyper.hpp"
#include "mada/numdiff.hpp"
#include "mada/poly_opt.hpp"
#include "mada/rng.hpp"

namespace mada {

inline const std::array<const char*, 6>& coefficient_names() {
  static const std::array<const char*, 6> names = {"beta1", "beta2", "beta3",
                                                   "rho",   "c",     "gamma"};
  return names;
}

inline double& coefficient_field(CoefficientVector& q, int k) {
  switch (k) {
    case 0: return q.beta1;
    case 1: return q.beta2;
    case 2: return q.beta3;
    case 3: return q.rho;
    case 4: return q.c;
    case 5: return q.gamma;
  }
  throw std::invalid_argument("coefficient_field: index out of range");
}

inline double hypergrad_field(const HyperGrads& hg, int k) {
  switch (k) {
    case 0: return hg.beta1;
    case 1: return hg.beta2;
    case 2: return hg.beta3;
    case 3: return hg.rho;
    case 4: return hg.c;
    case 5: return hg.gamma;
  }
  throw std::invalid_argument("hypergrad_field: index out of range");
}

struct HypergradCheckResult {
  std::array<double, 6> max_rel_err{};  // per coefficient, over both variants
  int states_per_coefficient = 0;

  double worst() const {
    double m = 0.0;
    for (double e : max_rel_err) m = std::max(m, e);
    return m;
  }
};

/// Verifies the analytic one-step hyper-gradient of every learnable
/// coefficient against central finite differences of f_next(x_t(q +- h)),
/// entering state held fixed, over randomized states for both poly variants.
/// States are resampled away from the sign/max kinks so the a.e. derivative
/// is the classical one at every probe.
inline HypergradCheckResult check_hypergrad_fd(int states_per_coefficient = 50,
                                               std::uint64_t seed = 1,
                                               double h = kDefaultFdStep) {
  HypergradCheckResult result;
  result.states_per_coefficient = states_per_coefficient;
  const std::size_t d = 8;

  for (PolyVariant variant : {PolyVariant::avgrad_interp, PolyVariant::max_interp}) {
    Rng vrng = Rng(seed).substream(variant == PolyVariant::avgrad_interp ? 1 : 2);
    int accepted = 0;
    std::uint64_t attempt = 0;
    while (accepted < states_per_coefficient) {
      Rng rng = vrng.substream(attempt++);
      CoefficientVector q;
      q.beta1 = rng.uniform(0.05, 0.95);
      q.beta2 = rng.uniform(0.55, 0.95);
      q.beta3 = rng.uniform(0.05, 0.95);
      q.rho = rng.uniform(0.05, 0.95);
      q.c = rng.uniform(0.05, 0.95);
      q.gamma = rng.uniform(0.1, 0.9);

      PolyState st0(variant, d);
      st0.t = long(rng.below(40)) + 1;
      Vec g(d), w(d), a(d), x(d);
      for (std::size_t i = 0; i < d; ++i) {
        st0.m[i] = rng.normal();
        st0.n[i] = 0.3 * rng.normal();
        st0.mlion[i] = rng.normal();
        st0.vbar[i] = rng.uniform(0.3, 2.0);
        st0.vtilde[i] = rng.uniform(0.3, 2.0);
        st0.vmax[i] = st0.vbar[i] * rng.uniform(0.6, 1.7);
        st0.prev_grad[i] = rng.normal();
        g[i] = rng.normal();
        x[i] = rng.normal();
        w[i] = rng.uniform(0.5, 2.0);
        a[i] = rng.normal();
      }
      const double alpha = 0.1;
      const double eps = (accepted % 2 == 0) ? 1e-8 : 0.05;
      const double lambda = (accepted % 3 == 0) ? 0.01 : 0.0;

      PolyState st = st0;
      Vec xt = x;
      StepTrace tr = poly_step(st, q, xt, g, alpha, eps, lambda);

      bool near_kink = false;
      for (std::size_t i = 0; i < d; ++i) {
        if (std::fabs(tr.ghat[i] * tr.ghat[i] - st0.vbar[i]) < 1e-3) near_kink = true;
        if (std::fabs(tr.u[i]) < 1e-3) near_kink = true;
        if (variant == PolyVariant::max_interp &&
            std::fabs(tr.vbar[i] - st0.vmax[i]) < 1e-3) {
          near_kink = true;
        }
      }
      if (near_kink) continue;
      ++accepted;

      auto f_next = [&](const Vec& z) {
        double loss = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          loss += 0.5 * w[i] * (z[i] - a[i]) * (z[i] - a[i]);
        }
        return loss;
      };
      Vec grad_next(d);
      for (std::size_t i = 0; i < d; ++i) grad_next[i] = w[i] * (xt[i] - a[i]);
      HyperGrads hg = hypergrad(tr, grad_next);

      for (int k = 0; k < 6; ++k) {
        CoefficientVector qp = q, qm = q;
        coefficient_field(qp, k) += h;
        coefficient_field(qm, k) -= h;
        auto step_loss = [&](const CoefficientVector& qq) {
          PolyState sc = st0;
          Vec xc = x;
          poly_step(sc, qq, xc, g, alpha, eps, lambda);
          return f_next(xc);
        };
        double fd = (step_loss(qp) - step_loss(qm)) / (2.0 * h);
        double an = hypergrad_field(hg, k);
        double rel = std::fabs(an - fd) / std::max({std::fabs(an), std::fabs(fd), 1e-8});
        if (rel > result.max_rel_err[std::size_t(k)]) {
          result.max_rel_err[std::size_t(k)] = rel;
        }
      }
    }
  }
  return result;
}

}  // namespace mada
