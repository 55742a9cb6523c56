#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "stackre/errors.hpp"
#include "stackre/numerics/config.hpp"

namespace stackre::numerics {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod pair (QUADPACK qk15).
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

inline double checked(double v, double z) {
  if (!std::isfinite(v)) {
    throw NonFinite("integrand returned " + std::to_string(v) + " at z = " +
                    std::to_string(z));
  }
  return v;
}

template <class F>
Panel gauss_kronrod_15(const F& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = checked(f(centre), centre);
  double gauss = fc * kGaussWeights[3];
  double kronrod = fc * kKronrodWeights[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double f1 = checked(f(centre - dx), centre - dx);
    const double f2 = checked(f(centre + dx), centre + dx);
    kronrod += kKronrodWeights[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * (f1 + f2);
  }
  const double value = kronrod * half;
  double err = std::abs((kronrod - gauss) * half);
  // Roundoff floor.
  err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * std::abs(value));
  return {a, b, value, err};
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a, b].
///
/// Interior breakpoints (kinks of the integrand) seed the initial partition.
/// The interval with the largest error estimate is bisected until the summed
/// error meets max(abs_tol, rel_tol * |I|, roundoff level) or the subdivision budget runs out;
/// in the latter case the best estimate is returned with its error.
template <class F>
QuadratureResult integrate_detailed(const F& f, double a, double b,
                                    const QuadratureConfig& cfg,
                                    std::span<const double> breakpoints = {}) {
  if (a == b) return {};
  if (b < a) {
    auto r = integrate_detailed(f, b, a, cfg, breakpoints);
    r.value = -r.value;
    return r;
  }
  std::vector<double> cuts{a};
  for (double p : breakpoints) {
    if (p > a && p < b) cuts.push_back(p);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<detail::Panel> heap;
  double total = 0.0, total_err = 0.0, total_abs = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto p = detail::gauss_kronrod_15(f, cuts[i], cuts[i + 1]);
    total += p.value;
    total_abs += std::abs(p.value);
    total_err += p.error;
    heap.push(p);
  }
  int intervals = static_cast<int>(heap.size());
  // Per-panel roundoff floors sum to at most 50 eps sum|I_i|; asking for less is futile.
  auto target = [&] {
    return std::max({cfg.abs_tol, cfg.rel_tol * std::abs(total),
                     100.0 * std::numeric_limits<double>::epsilon() * total_abs});
  };
  while (total_err > target() && intervals < cfg.max_subdivisions) {
    const auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // interval at machine resolution
    heap.pop();
    auto left = detail::gauss_kronrod_15(f, worst.a, mid);
    auto right = detail::gauss_kronrod_15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_abs += std::abs(left.value) + std::abs(right.value) - std::abs(worst.value);
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++intervals;
  }
  // Re-sum to shed accumulated cancellation from the running updates.
  double sum = 0.0, err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  return {sum, err, intervals};
}

template <class F>
double integrate(const F& f, double a, double b, const QuadratureConfig& cfg,
                 std::span<const double> breakpoints = {}) {
  return integrate_detailed(f, a, b, cfg, breakpoints).value;
}

/// Integral of f over [lower, infinity).
///
/// The first panel reaches one initial width beyond the last breakpoint; each
/// following panel doubles in width. Integration stops once two consecutive
/// panels each contribute less than the tolerance. Panels that keep growing
/// (ten in a row) or a run past max_doublings raise Divergent.
template <class F>
double integrate_upper_tail(const F& f, double lower, const QuadratureConfig& cfg,
                            std::span<const double> breakpoints = {}) {
  if (!(lower >= 0.0) || !std::isfinite(lower)) {
    throw OutOfDomain("integrate_upper_tail requires a finite lower limit >= 0");
  }
  double last_bp = lower;
  for (double p : breakpoints) {
    if (p > last_bp && std::isfinite(p)) last_bp = p;
  }
  double upper = last_bp + cfg.initial_width;
  double sum = integrate(f, lower, upper, cfg, breakpoints);
  double width = upper - lower;
  double previous = std::abs(sum);
  int small_run = 0;
  int growth_run = 0;
  for (int k = 0; k < cfg.max_doublings; ++k) {
    const double next = upper + width;
    QuadratureConfig panel_cfg = cfg;
    panel_cfg.abs_tol = 0.5 * std::max(cfg.abs_tol, cfg.rel_tol * std::abs(sum));
    const double panel = integrate(f, upper, next, panel_cfg);
    sum += panel;
    const double mag = std::abs(panel);
    if (mag <= std::max(cfg.abs_tol, cfg.rel_tol * std::abs(sum))) {
      if (++small_run >= 2) return sum;
    } else {
      small_run = 0;
    }
    growth_run = (mag >= previous && mag > 0.0) ? growth_run + 1 : 0;
    if (growth_run >= 10) {
      throw Divergent("tail contributions keep growing beyond z = " +
                      std::to_string(next));
    }
    if (!std::isfinite(sum)) throw Divergent("tail integral overflowed");
    previous = mag;
    upper = next;
    width *= 2.0;
  }
  throw Divergent("tail mass did not decay after " + std::to_string(cfg.max_doublings) +
                  " truncation doublings");
}

}  // namespace stackre::numerics
