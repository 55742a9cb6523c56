#pragma once

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stackre/errors.hpp"
#include "stackre/numerics/config.hpp"
#include "stackre/numerics/quadrature.hpp"
#include "stackre/numerics/roots.hpp"

namespace stackre::measures {

struct Exponential {
  double scale;
};

struct Gamma {
  double shape;
  double scale;
};

/// Piecewise-linear density through the knots, exponential beyond the last one.
struct Tabulated {
  std::vector<double> z;
  std::vector<double> density;
};

enum class SeverityQuery { density, cdf, survival, mean, quantile };

/// Claim-size distribution on the positive half-line.
class SeverityModel {
 public:
  static SeverityModel exponential(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw ValidationError("exponential scale must be positive");
    }
    return SeverityModel(Exponential{scale});
  }

  static SeverityModel gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale)) {
      throw ValidationError("gamma shape and scale must be positive");
    }
    return SeverityModel(Gamma{shape, scale});
  }

  /// Normalizes the knot densities so the whole model integrates to one.
  static SeverityModel tabulated(std::vector<double> z, std::vector<double> density) {
    if (z.size() != density.size() || z.size() < 2) {
      throw ValidationError("tabulated severity needs >= 2 matching (z, density) knots");
    }
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!(density[i] >= 0.0) || !std::isfinite(density[i])) {
        throw ValidationError("tabulated density must be finite and >= 0");
      }
      if (i == 0 ? !(z[0] >= 0.0) : !(z[i] > z[i - 1])) {
        throw ValidationError("tabulated knots must start at z >= 0 and increase strictly");
      }
    }
    SeverityModel model(Tabulated{std::move(z), std::move(density)});
    model.prepare_table();
    return model;
  }

  const auto& params() const { return params_; }
  bool is_exponential() const { return std::holds_alternative<Exponential>(params_); }
  bool is_gamma() const { return std::holds_alternative<Gamma>(params_); }
  bool is_tabulated() const { return std::holds_alternative<Tabulated>(params_); }
  bool is_gamma_family() const { return !is_tabulated(); }

  /// Gamma shape (1 for exponential). Only meaningful for the gamma family.
  double shape() const {
    if (auto* g = std::get_if<Gamma>(&params_)) return g->shape;
    return 1.0;
  }

  /// Scale parameter (gamma family) or inverse tail rate (tabulated).
  double scale() const {
    if (auto* e = std::get_if<Exponential>(&params_)) return e->scale;
    if (auto* g = std::get_if<Gamma>(&params_)) return g->scale;
    return 1.0 / tail_rate_;
  }

  /// Exponential decay rate of the density: 1/scale, or the fitted tail slope.
  double tail_rate() const { return is_tabulated() ? tail_rate_ : 1.0 / scale(); }

  double density(double z) const {
    if (z < 0.0) return 0.0;
    if (auto* e = std::get_if<Exponential>(&params_)) return std::exp(-z / e->scale) / e->scale;
    if (auto* g = std::get_if<Gamma>(&params_)) return std::exp(log_density(z));
    return table_density(z);
  }

  double log_density(double z) const {
    if (z < 0.0) return -std::numeric_limits<double>::infinity();
    if (auto* e = std::get_if<Exponential>(&params_)) return -z / e->scale - std::log(e->scale);
    if (auto* g = std::get_if<Gamma>(&params_)) {
      if (z == 0.0) {
        if (g->shape == 1.0) return -std::log(g->scale);
        return g->shape < 1.0 ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
      }
      return (g->shape - 1.0) * std::log(z) - z / g->scale - std::lgamma(g->shape) -
             g->shape * std::log(g->scale);
    }
    return std::log(table_density(z));
  }

  double cdf(double z) const {
    if (z <= 0.0) return 0.0;
    if (auto* e = std::get_if<Exponential>(&params_)) return -std::expm1(-z / e->scale);
    if (auto* g = std::get_if<Gamma>(&params_)) return boost::math::gamma_p(g->shape, z / g->scale);
    return 1.0 - table_survival(z);
  }

  double survival(double z) const {
    if (z <= 0.0) return 1.0;
    if (auto* e = std::get_if<Exponential>(&params_)) return std::exp(-z / e->scale);
    if (auto* g = std::get_if<Gamma>(&params_)) return boost::math::gamma_q(g->shape, z / g->scale);
    return table_survival(z);
  }

  double mean() const {
    if (auto* e = std::get_if<Exponential>(&params_)) return e->scale;
    if (auto* g = std::get_if<Gamma>(&params_)) return g->shape * g->scale;
    return table_mean_;
  }

  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
      throw OutOfDomain("quantile level must lie in (0, 1), got " + std::to_string(p));
    }
    if (auto* e = std::get_if<Exponential>(&params_)) return -e->scale * std::log1p(-p);
    if (auto* g = std::get_if<Gamma>(&params_)) {
      return g->scale * boost::math::gamma_p_inv(g->shape, p);
    }
    return table_quantile(p);
  }

  double eval(SeverityQuery query, double arg) const {
    if (query != SeverityQuery::quantile && query != SeverityQuery::mean && !(arg >= 0.0)) {
      throw OutOfDomain("severity argument must be >= 0, got " + std::to_string(arg));
    }
    switch (query) {
      case SeverityQuery::density: return density(arg);
      case SeverityQuery::cdf: return cdf(arg);
      case SeverityQuery::survival: return survival(arg);
      case SeverityQuery::mean: return mean();
      case SeverityQuery::quantile: return quantile(arg);
    }
    return 0.0;
  }

  /// Stop-loss transform: E[(Z - a)_+] = integral of the survival function over [a, inf).
  double stop_loss(double a, const numerics::QuadratureConfig& cfg = {}) const {
    a = std::max(a, 0.0);
    if (auto* e = std::get_if<Exponential>(&params_)) return e->scale * std::exp(-a / e->scale);
    if (auto* g = std::get_if<Gamma>(&params_)) {
      const double x = a / g->scale;
      return g->shape * g->scale * boost::math::gamma_q(g->shape + 1.0, x) -
             a * boost::math::gamma_q(g->shape, x);
    }
    const auto& t = std::get<Tabulated>(params_);
    if (a >= t.z.back()) return survival(a) / tail_rate_;
    std::vector<double> knots(t.z.begin(), t.z.end());
    return numerics::integrate([this](double z) { return survival(z); }, a, t.z.back(), cfg,
                               knots) +
           survival(t.z.back()) / tail_rate_;
  }

  /// E[Z^order * exp(tilt * Z)] for order in {1, 2}.
  double tilted_moment(int order, double tilt, const numerics::QuadratureConfig& cfg = {}) const {
    if (order != 1 && order != 2) throw OutOfDomain("tilted moment order must be 1 or 2");
    if (!(tilt < tail_rate())) {
      throw Divergent("tilt " + std::to_string(tilt) + " reaches the tail rate " +
                      std::to_string(tail_rate()));
    }
    if (is_gamma_family()) {
      const double m = shape(), xi = scale();
      const double base = 1.0 - tilt * xi;
      if (order == 1) return m * xi / std::pow(base, m + 1.0);
      return m * (m + 1.0) * xi * xi / std::pow(base, m + 2.0);
    }
    const auto& t = std::get<Tabulated>(params_);
    auto integrand = [&](double z) { return std::pow(z, order) * std::exp(tilt * z) * density(z); };
    std::vector<double> knots(t.z.begin(), t.z.end());
    return numerics::integrate(integrand, 0.0, t.z.back(), cfg, knots) +
           numerics::integrate_upper_tail(integrand, t.z.back(), cfg);
  }

 private:
  explicit SeverityModel(std::variant<Exponential, Gamma, Tabulated> p) : params_(std::move(p)) {}

  void prepare_table() {
    auto& t = std::get<Tabulated>(params_);
    const std::size_t n = t.z.size();
    const double f_last = t.density[n - 1];
    const double f_prev = t.density[n - 2];
    if (!(f_last > 0.0) || !(f_prev > f_last)) {
      throw ValidationError(
          "tabulated density must be positive and decreasing over the last two knots");
    }
    tail_rate_ = std::log(f_prev / f_last) / (t.z[n - 1] - t.z[n - 2]);

    double mass = f_last / tail_rate_;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      mass += 0.5 * (t.density[i] + t.density[i + 1]) * (t.z[i + 1] - t.z[i]);
    }
    for (double& f : t.density) f /= mass;

    cumulative_.assign(n, 0.0);
    double mean = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double h = t.z[i + 1] - t.z[i];
      const double f0 = t.density[i];
      const double s = (t.density[i + 1] - f0) / h;
      cumulative_[i + 1] = cumulative_[i] + 0.5 * (f0 + t.density[i + 1]) * h;
      mean += t.z[i] * f0 * h + (t.z[i] * s + f0) * h * h / 2.0 + s * h * h * h / 3.0;
    }
    const double fn = t.density[n - 1];
    const double zn = t.z[n - 1];
    mean += fn * (zn / tail_rate_ + 1.0 / (tail_rate_ * tail_rate_));
    table_mean_ = mean;
  }

  double table_density(double z) const {
    const auto& t = std::get<Tabulated>(params_);
    if (z < t.z.front()) return 0.0;
    if (z >= t.z.back()) return t.density.back() * std::exp(-tail_rate_ * (z - t.z.back()));
    const auto it = std::upper_bound(t.z.begin(), t.z.end(), z);
    const std::size_t i = static_cast<std::size_t>(it - t.z.begin()) - 1;
    const double w = (z - t.z[i]) / (t.z[i + 1] - t.z[i]);
    return (1.0 - w) * t.density[i] + w * t.density[i + 1];
  }

  double table_survival(double z) const {
    const auto& t = std::get<Tabulated>(params_);
    if (z < t.z.front()) return 1.0;
    if (z >= t.z.back()) {
      return t.density.back() / tail_rate_ * std::exp(-tail_rate_ * (z - t.z.back()));
    }
    const auto it = std::upper_bound(t.z.begin(), t.z.end(), z);
    const std::size_t i = static_cast<std::size_t>(it - t.z.begin()) - 1;
    const double h = t.z[i + 1] - t.z[i];
    const double u = z - t.z[i];
    const double s = (t.density[i + 1] - t.density[i]) / h;
    const double below = cumulative_[i] + t.density[i] * u + 0.5 * s * u * u;
    return std::max(0.0, 1.0 - below);
  }

  double table_quantile(double p) const {
    numerics::SolverConfig cfg;
    cfg.tolerance = 1e-14;
    cfg.max_iterations = 400;
    double hi = std::get<Tabulated>(params_).z.back();
    while (cdf(hi) < p) hi *= 2.0;
    return numerics::solve_scalar_root([&](double z) { return cdf(z) - p; }, 0.0, hi, cfg);
  }

  std::variant<Exponential, Gamma, Tabulated> params_;
  double tail_rate_ = 0.0;
  double table_mean_ = 0.0;
  std::vector<double> cumulative_;
};

}  // namespace stackre::measures
