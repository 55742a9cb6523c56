#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "stackre/errors.hpp"

namespace stackre::numerics {

enum class LambertBranch { principal, minus_one };

/// Lambert W on the requested real branch, refined by Halley iteration.
inline double lambert_w(double x, LambertBranch branch) {
  constexpr double inv_e = 1.0 / std::numbers::e;
  if (!std::isfinite(x) || x < -inv_e * (1.0 + 1e-15)) {
    throw OutOfDomain("lambert_w argument " + std::to_string(x) + " is below -1/e");
  }
  if (branch == LambertBranch::minus_one && !(x < 0.0)) {
    throw OutOfDomain("lambert_w minus-one branch needs -1/e <= x < 0");
  }
  if (x == 0.0) return 0.0;
  const double near_branch = 2.0 * (std::numbers::e * x + 1.0);
  if (near_branch <= 0.0) return -1.0;
  const double p = std::sqrt(near_branch);

  double w;
  if (branch == LambertBranch::principal) {
    if (x < -0.25) {
      w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    } else if (x < 3.0) {
      w = std::log1p(x) * (1.0 - std::log1p(std::log1p(x)) / (2.0 + std::log1p(x)));
    } else {
      const double l1 = std::log(x);
      const double l2 = std::log(l1);
      w = l1 - l2 + l2 / l1;
    }
  } else {
    if (x < -0.25) {
      w = -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p * p * p;
    } else {
      const double l1 = std::log(-x);
      const double l2 = std::log(-l1);
      w = l1 - l2 + l2 / l1;
    }
  }

  for (int it = 0; it < 64; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double dw = f / denom;
    w -= dw;
    if (std::abs(dw) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(w))) {
      break;
    }
  }
  return w;
}

}  // namespace stackre::numerics
