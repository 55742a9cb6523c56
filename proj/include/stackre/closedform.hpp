#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stackre/errors.hpp"
#include "stackre/measures/insurer_spec.hpp"
#include "stackre/numerics/config.hpp"
#include "stackre/numerics/fixed_point.hpp"
#include "stackre/numerics/roots.hpp"

// Closed-form equilibria for gamma-proportional and exponential (capped) XL
// markets in the expected-wealth setting. Kept free of the general solver so
// the two can be checked against each other.
namespace stackre::closedform {

using measures::InsurerSpec;

struct GammaProportionalSolution {
  std::vector<double> alpha;
  std::vector<double> eta;
  double shape = 0.0;  // m tilde
  double scale = 0.0;  // xi tilde
  double total_intensity = 0.0;
};

namespace detail {

struct GammaMarket {
  std::vector<double> m, xi, lambda, gamma, pi;
  double eps;

  double shape() const {
    double s = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) s += pi[k] * m[k];
    return s;
  }

  double scale(std::span<const double> alpha) const {
    double inv = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) inv += pi[k] / xi[k] - eps * (1.0 - alpha[k]);
    if (!(inv > 0.0)) {
      throw ConstraintViolated("reinsurer severity scale is not positive (1/xi~ = " +
                               std::to_string(inv) + ")");
    }
    return 1.0 / inv;
  }

  double intensity(std::span<const double> alpha) const {
    const double mt = shape();
    double log_l = mt * std::log(scale(alpha)) + std::lgamma(mt);
    for (std::size_t k = 0; k < m.size(); ++k) {
      log_l += pi[k] * (std::log(lambda[k]) - std::lgamma(m[k]) - m[k] * std::log(xi[k]));
    }
    return std::exp(log_l);
  }

  double equation(std::size_t k, std::span<const double> alpha) const {
    const double a = alpha[k];
    const double base = 1.0 - a * gamma[k] * xi[k];
    return -std::pow(base, -(m[k] + 1.0)) +
           gamma[k] * (1.0 + m[k]) * xi[k] * (1.0 - a) * std::pow(base, -(m[k] + 2.0)) +
           shape() * scale(alpha) * intensity(alpha) / (m[k] * xi[k] * lambda[k]);
  }
};

/// Root of f on (0, 1], taking the sign change nearest to a = 1.
template <class F>
double unit_root(const F& f, const numerics::SolverConfig& cfg) {
  constexpr int kGrid = 200;
  double hi = 1.0;
  double f_hi = f(hi);
  if (f_hi == 0.0) return hi;
  for (int i = kGrid - 1; i >= 0; --i) {
    const double lo = std::max(1e-9, static_cast<double>(i) / kGrid);
    const double f_lo = f(lo);
    if ((f_lo > 0.0) != (f_hi > 0.0) || f_lo == 0.0) {
      return numerics::solve_scalar_root(f, lo, hi, cfg);
    }
    hi = lo;
    f_hi = f_lo;
  }
  throw NoSolution("no sign change of the gamma-proportional equation on (0, 1]");
}

}  // namespace detail

/// Gamma-proportional market with one or two insurers: each first-order
/// equation is solved in its own control, the second nested inside the first.
inline GammaProportionalSolution gamma_proportional_oracle(std::span<const InsurerSpec> insurers,
                                                           double eps) {
  const std::size_t n = insurers.size();
  if (n < 1 || n > 2) throw ValidationError("gamma_proportional_oracle handles 1 or 2 insurers");
  detail::GammaMarket g;
  g.eps = eps;
  for (const auto& ins : insurers) {
    if (!ins.severity.is_gamma_family()) throw ValidationError("gamma severities required");
    g.m.push_back(ins.severity.shape());
    g.xi.push_back(ins.severity.scale());
    g.lambda.push_back(ins.claim_intensity);
    g.gamma.push_back(ins.risk_aversion);
    g.pi.push_back(ins.weight);
    const double cap = std::min(1.0 / ins.risk_aversion,
                                eps > 0.0 ? 1.0 / (static_cast<double>(n) * eps)
                                          : std::numeric_limits<double>::infinity());
    if (ins.severity.scale() > cap) {
      throw ConstraintViolated("xi_k <= min{1/gamma_k, 1/(n eps)} fails");
    }
  }

  numerics::SolverConfig cfg;
  cfg.tolerance = 1e-15;
  cfg.max_iterations = 500;
  std::vector<double> alpha(n, 1.0);
  auto safe = [&](std::size_t k) {
    return [&, k](double a) {
      alpha[k] = a;
      try {
        return g.equation(k, alpha);
      } catch (const ConstraintViolated&) {
        return -std::numeric_limits<double>::infinity();
      }
    };
  };
  if (n == 1) {
    alpha[0] = detail::unit_root(safe(0), cfg);
  } else {
    auto inner = safe(1);
    auto outer = [&](double a1) {
      alpha[0] = a1;
      alpha[1] = detail::unit_root(inner, cfg);
      alpha[0] = a1;
      return g.equation(0, alpha);
    };
    alpha[0] = detail::unit_root(outer, cfg);
    alpha[1] = detail::unit_root(inner, cfg);
  }

  GammaProportionalSolution out;
  out.alpha = alpha;
  for (std::size_t k = 0; k < n; ++k) {
    out.eta.push_back(std::pow(1.0 - alpha[k] * g.gamma[k] * g.xi[k], -(g.m[k] + 1.0)) - 1.0);
  }
  out.shape = g.shape();
  out.scale = g.scale(alpha);
  out.total_intensity = g.intensity(alpha);
  return out;
}

/// Integral over [lo, hi] of C exp(-rho z + eps L(z)) where
/// L(z) = sum_j min((z - alpha_j)_+, ell_j). hi may be +inf.
inline double piecewise_exp_integral(double log_c, double rho, double eps,
                                     std::span<const double> alpha,
                                     std::span<const double> limits, double lo, double hi) {
  auto loss = [&](double z) {
    double s = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      s += std::min(std::max(z - alpha[j], 0.0), limits[j]);
    }
    return s;
  };
  std::vector<double> cuts{lo};
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    for (double b : {alpha[j], alpha[j] + limits[j]}) {
      if (b > lo && b < hi) cuts.push_back(b);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(hi);

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double u = cuts[i], v = cuts[i + 1];
    if (!(v > u)) continue;
    const double probe = std::isfinite(v) ? 0.5 * (u + v) : u + 1.0;
    const double slope = std::isfinite(v) ? (loss(v) - loss(u)) / (v - u) : loss(probe) - loss(u);
    const double intercept = loss(u) - slope * u;
    const double k = eps * slope - rho;
    const double front = log_c + eps * intercept;
    if (!std::isfinite(v)) {
      if (!(k < 0.0)) throw NonIntegrable("distorted compensator grows on the last segment");
      total += std::exp(front + k * u) / -k;
    } else if (k == 0.0) {
      total += std::exp(front) * (v - u);
    } else {
      total += std::exp(front + k * u) * std::expm1(k * (v - u)) / k;
    }
  }
  return total;
}

struct XlSolution {
  std::vector<double> alpha;
  std::vector<double> eta;
  std::vector<double> premiums;
};

namespace detail {

inline XlSolution exponential_layers(std::span<const InsurerSpec> insurers, double eps,
                                     std::span<const double> limits) {
  const std::size_t n = insurers.size();
  double rho = 0.0, log_c = 0.0;
  for (const auto& ins : insurers) {
    if (!ins.severity.is_exponential()) throw ValidationError("exponential severities required");
    const double xi = ins.severity.scale();
    if (!(ins.risk_aversion * xi < 1.0)) throw ConstraintViolated("gamma_k xi_k < 1 fails");
    rho += ins.weight / xi;
    log_c += ins.weight * std::log(ins.claim_intensity / xi);
  }
  const bool capped = std::all_of(limits.begin(), limits.end(),
                                  [](double l) { return std::isfinite(l); });
  if (!capped && !(eps * static_cast<double>(n) < rho)) {
    throw NonIntegrable("eps * n >= sum of pi_k / xi_k");
  }

  // In log form: gamma_k a_k + log(lambda_k D_k (1 - gamma_k xi_k)) - log I_k(a) = 0,
  // with D_k = e^{-a_k/xi_k}(1 - e^{-ell_k/xi_k}).
  auto residual = [&](const std::vector<double>& a) {
    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& ins = insurers[k];
      const double xi = ins.severity.scale();
      const double layer = std::isfinite(limits[k]) ? -std::expm1(-limits[k] / xi) : 1.0;
      const double upper = a[k] + limits[k];
      const double integral = piecewise_exp_integral(log_c, rho, eps, a, limits, a[k], upper);
      r[k] = ins.risk_aversion * a[k] + std::log(ins.claim_intensity) - a[k] / xi +
             std::log(layer) + std::log1p(-ins.risk_aversion * xi) - std::log(integral);
    }
    return r;
  };
  numerics::SolverConfig cfg;
  cfg.tolerance = 1e-14;
  cfg.max_iterations = 500;
  std::vector<double> a0;
  for (const auto& ins : insurers) a0.push_back(std::log(2.0) * ins.severity.scale());
  XlSolution out;
  out.alpha = numerics::solve_fixed_point_system(residual, a0, cfg);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& ins = insurers[k];
    const double xi = ins.severity.scale();
    const double a = out.alpha[k];
    out.eta.push_back(std::expm1(ins.risk_aversion * a));
    const double layer = std::isfinite(limits[k]) ? -std::expm1(-limits[k] / xi) : 1.0;
    out.premiums.push_back((1.0 + out.eta[k]) * ins.claim_intensity * xi * std::exp(-a / xi) *
                           layer);
  }
  return out;
}

}  // namespace detail

/// Uncapped XL with exponential severities.
inline XlSolution exponential_xl_oracle(std::span<const InsurerSpec> insurers, double eps) {
  const std::vector<double> limits(insurers.size(), std::numeric_limits<double>::infinity());
  return detail::exponential_layers(insurers, eps, limits);
}

/// Capped XL with exponential severities and layer widths ell_k.
inline XlSolution capped_xl_oracle(std::span<const InsurerSpec> insurers, double eps,
                                   std::span<const double> limits) {
  if (limits.size() != insurers.size()) throw ValidationError("one ell_k per insurer");
  for (double l : limits) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ValidationError("ell_k > 0");
  }
  return detail::exponential_layers(insurers, eps, limits);
}

}  // namespace stackre::closedform
