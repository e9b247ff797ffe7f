#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mada/vec.hpp"

namespace mada {

/// Constants of the convergence bounds: gradient bound R, smoothness L,
/// dimension d, base step alpha, momentum betas, the eps of the eps_t = eps/t
/// normalization, the initial optimality gap F0 - F*, horizon T and the
/// interpolation constant rho of the rho_t = rho/t schedule.
struct BoundParams {
  double R = 1.0;
  double L = 1.0;
  long d = 1;
  double alpha = 0.1;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 10.0;
  double f_gap = 1.0;
  long T = 10000;
  double rho = 0.0;

  void validate() const {
    if (!(R > 0.0)) throw std::invalid_argument("bound params: R must be > 0");
    if (!(L > 0.0)) throw std::invalid_argument("bound params: L must be > 0");
    if (d < 1) throw std::invalid_argument("bound params: d must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("bound params: alpha must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0) throw std::invalid_argument("bound params: beta1 in [0,1)");
    if (beta2 <= 0.0 || beta2 >= 1.0) {
      throw std::domain_error("bound params: beta2 must be in (0, 1)");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("bound params: eps must be > 0");
    if (f_gap < 0.0) throw std::invalid_argument("bound params: f_gap must be >= 0");
    if (T < 1) throw std::invalid_argument("bound params: T must be >= 1");
    if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("bound params: rho in [0,1]");
  }
};

/// [ln(rho/beta2)]_+ with the rho = 0 limit defined as 0.
inline double thm3_bracket(double rho, double beta2) {
  if (beta2 <= 0.0) throw std::domain_error("thm3_bracket: beta2 must be > 0");
  if (rho <= 0.0) return 0.0;
  return std::max(std::log(rho / beta2), 0.0);
}

/// Right-hand side of the precise interpolated-optimizer bound: two terms,
/// both carrying sqrt(rho + (1-rho)T), with the log factor
/// ln(1 + R^2(rho+(1-rho)T)/(eps(1-beta2))) + T*[ln(rho/beta2)]_+.
inline double thm3_bound(const BoundParams& p) {
  p.validate();
  const double T = double(p.T);
  const double S = p.rho + (1.0 - p.rho) * T;
  const double rootS = std::sqrt(S);
  const double root1mb2 = std::sqrt(1.0 - p.beta2);
  const double term1 = 2.0 * p.R * rootS * p.f_gap / (p.alpha * T * root1mb2);
  const double logterm = std::log(1.0 + p.R * p.R * S / (p.eps * (1.0 - p.beta2)));
  const double term2 = (2.0 * p.R * rootS * double(p.d) / (root1mb2 * T)) *
                       (2.0 * p.R + p.alpha * p.L) *
                       (logterm + T * thm3_bracket(p.rho, p.beta2));
  return term1 + term2;
}

struct SweepPoint {
  double rho = 0.0;
  double bound = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::size_t argmin = 0;
};

inline SweepResult thm3_sweep(BoundParams p, const Vec& rho_grid) {
  if (rho_grid.empty()) throw std::invalid_argument("thm3_sweep: empty grid");
  SweepResult out;
  out.points.reserve(rho_grid.size());
  for (double rho : rho_grid) {
    if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("thm3_sweep: rho outside [0,1]");
    p.rho = rho;
    out.points.push_back({rho, thm3_bound(p)});
  }
  for (std::size_t i = 1; i < out.points.size(); ++i) {
    if (out.points[i].bound < out.points[out.argmin].bound) out.argmin = i;
  }
  return out;
}

/// AVGrad bounds: Theorem-1 form (no momentum) or the Theorem-2 form with the
/// momentum constant C and the reduced horizon T~ = T - beta1/(1-beta1).
inline double thm12_bound(const BoundParams& p, bool with_momentum) {
  p.validate();
  const double T = double(p.T);
  const double root1mb2 = std::sqrt(1.0 - p.beta2);
  const double logterm = std::log(1.0 + p.R * p.R * T / ((1.0 - p.beta2) * p.eps));
  if (!with_momentum) {
    return 2.0 * p.R * p.f_gap / (p.alpha * std::sqrt(T) * root1mb2) +
           (2.0 * p.R * double(p.d) / (std::sqrt(T) * root1mb2)) *
               (2.0 * p.R + p.alpha * p.L) * logterm;
  }
  const double b1 = p.beta1;
  const double t_tilde = T - b1 / (1.0 - b1);
  if (!(t_tilde > 0.0)) throw std::domain_error("thm12_bound: T~ = T - beta1/(1-beta1) must be > 0");
  const double C = p.alpha * p.R * p.L / (root1mb2 * (1.0 - b1)) +
                   2.0 * b1 * p.alpha * p.alpha * p.L * p.L /
                       ((1.0 - p.beta2) * (1.0 - b1) * (1.0 - b1) * (1.0 - b1)) +
                   12.0 * p.R * p.R / std::sqrt(1.0 - b1);
  return 2.0 * (1.0 - b1) * p.R * std::sqrt(T) * p.f_gap / (p.alpha * root1mb2 * t_tilde) +
         C * std::sqrt(T) * double(p.d) / t_tilde * logterm;
}

// ---------------------------------------------------------------------------
// Proposition-1 condition and effective-learning-rate monotonicity checker
// ---------------------------------------------------------------------------

inline double prop1_rho_bound(long t, double beta2) {
  return 1.0 / (double(t) * (1.0 - beta2) + 1.0);
}

struct Prop1Result {
  bool condition_held = true;
  std::optional<long> first_condition_violation;
  bool monotone = true;
  std::optional<long> first_monotonicity_violation;
};

/// Simulates v_t = rho_t*vbar_t + (1-rho_t)*vtilde_t under alpha_t = alpha/sqrt(t)
/// and checks (a) elementwise non-increase of the effective learning rate and
/// (b) the sufficient condition rho_t <= 1/(t(1-beta2)+1) at every step.
///
/// With eps == 0 the monotonicity of alpha_t/sqrt(v_t) is checked through the
/// algebraically identical non-decrease of t*v_t (sqrt is monotone), which is
/// what makes desk-scale stream counts feasible. With eps > 0 the direct
/// alpha_t/(sqrt(v_t)+eps) comparison runs instead. Coordinates whose previous
/// effective rate is 0 (untouched, the 0/0 -> 0 convention) are not compared.
template <class StreamFn>
Prop1Result prop1_check(double beta2, const std::function<double(long)>& rho_schedule,
                        long T, std::size_t dim, StreamFn&& stream, double alpha = 1.0,
                        double eps = 0.0) {
  if (beta2 <= 0.0 || beta2 >= 1.0) throw std::domain_error("prop1_check: beta2 in (0,1)");
  if (T < 1) throw std::invalid_argument("prop1_check: T must be >= 1");
  if (dim < 1) throw std::invalid_argument("prop1_check: dim must be >= 1");

  Prop1Result res;
  Vec g(dim), vbar(dim, 0.0), vsum(dim, 0.0), prev(dim, 0.0);
  const double one_minus_b2 = 1.0 - beta2;

  for (long t = 1; t <= T; ++t) {
    stream(t, g);
    const double rho = rho_schedule(t);
    if (res.condition_held && rho > prop1_rho_bound(t, beta2)) {
      res.condition_held = false;
      res.first_condition_violation = t;
    }
    const double td = double(t);
    if (eps == 0.0) {
      // h = t*v_t = (t*rho)*vbar + (1-rho)*sum_j vbar_j; eff = alpha/sqrt(h)
      const double trho = td * rho;
      const double orho = 1.0 - rho;
      for (std::size_t i = 0; i < dim; ++i) {
        const double gi = g[i];
        vbar[i] = beta2 * vbar[i] + one_minus_b2 * (gi * gi);
        vsum[i] += vbar[i];
        const double h = trho * vbar[i] + orho * vsum[i];
        if (res.monotone && prev[i] > 0.0 && h < prev[i]) {
          res.monotone = false;
          res.first_monotonicity_violation = t;
        }
        prev[i] = h;
      }
    } else {
      const double alpha_t = alpha / std::sqrt(td);
      for (std::size_t i = 0; i < dim; ++i) {
        const double gi = g[i];
        vbar[i] = beta2 * vbar[i] + one_minus_b2 * (gi * gi);
        vsum[i] += vbar[i];
        const double v = rho * vbar[i] + (1.0 - rho) * (vsum[i] / td);
        const double eff = alpha_t / (std::sqrt(v) + eps);
        if (res.monotone && prev[i] > 0.0 && v > 0.0 && eff > prev[i]) {
          res.monotone = false;
          res.first_monotonicity_violation = t;
        }
        if (v > 0.0) prev[i] = eff;
      }
    }
    if (!res.monotone && !res.condition_held) break;  // both outcomes decided
  }
  return res;
}

}  // namespace mada
