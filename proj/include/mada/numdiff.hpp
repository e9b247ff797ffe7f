#pragma once

#include <cmath>
#include <stdexcept>

namespace mada {

inline constexpr double kDefaultFdStep = 1e-5;

/// Central finite difference (f(x0+h) - f(x0-h)) / (2h).
template <class F>
double central_diff(F&& f, double x0, double h = kDefaultFdStep) {
  if (!(h > 0.0)) throw std::invalid_argument("central_diff: h must be > 0");
  double fp = f(x0 + h);
  double fm = f(x0 - h);
  if (!std::isfinite(fp) || !std::isfinite(fm)) {
    throw std::runtime_error("central_diff: non-finite function value");
  }
  return (fp - fm) / (2.0 * h);
}

}  // namespace mada
