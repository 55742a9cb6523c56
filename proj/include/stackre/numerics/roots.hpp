#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "stackre/errors.hpp"
#include "stackre/numerics/config.hpp"

namespace stackre::numerics {

/// Safeguarded Newton-bisection on a sign-changing bracket.
///
/// The slope comes from the secant through the two most recent iterates (the
/// bracket ends on the first step). A Newton step that leaves the current
/// bracket, or fails to halve it over two steps, is replaced by bisection.
/// Returns once |f(x)| <= cfg.tolerance, or when the bracket has shrunk to a
/// few ulps, in which case the better end is returned.
template <class F>
double solve_scalar_root(const F& f, double lo, double hi, const SolverConfig& cfg) {
  if (lo > hi) std::swap(lo, hi);
  double flo = f(lo);
  double fhi = f(hi);
  if (!std::isfinite(flo) || !std::isfinite(fhi)) {
    throw NonFinite("root bracket endpoints evaluate to non-finite values");
  }
  if (std::abs(flo) <= cfg.tolerance) return lo;
  if (std::abs(fhi) <= cfg.tolerance) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw NoBracket("f(" + std::to_string(lo) + ") = " + std::to_string(flo) + " and f(" +
                    std::to_string(hi) + ") = " + std::to_string(fhi) +
                    " share a sign");
  }

  double x_prev = lo, f_prev = flo;
  double x = hi, fx = fhi;
  double width_before = hi - lo;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const double slope = (fx - f_prev) / (x - x_prev);
    double next = x - fx / slope;
    const bool inside = std::isfinite(next) && next > lo && next < hi;
    if (!inside || (hi - lo) > 0.5 * width_before) {
      next = 0.5 * (lo + hi);
      width_before = hi - lo;
    }
    const double fn = f(next);
    if (!std::isfinite(fn)) throw NonFinite("root function non-finite at " + std::to_string(next));
    if (std::abs(fn) <= cfg.tolerance) return next;
    if ((fn > 0.0) == (flo > 0.0)) {
      lo = next;
      flo = fn;
    } else {
      hi = next;
      fhi = fn;
    }
    x_prev = x;
    f_prev = fx;
    x = next;
    fx = fn;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
      return std::abs(flo) < std::abs(fhi) ? lo : hi;
    }
  }
  throw MaxIterations("scalar root not found within " + std::to_string(cfg.max_iterations) +
                      " iterations");
}

}  // namespace stackre::numerics
