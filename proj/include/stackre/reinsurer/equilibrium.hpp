#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stackre/contracts.hpp"
#include "stackre/errors.hpp"
#include "stackre/insurer.hpp"
#include "stackre/measures/compensator.hpp"
#include "stackre/numerics/fixed_point.hpp"
#include "stackre/numerics/lambert_w.hpp"
#include "stackre/numerics/quadrature.hpp"
#include "stackre/reinsurer/market.hpp"

namespace stackre::reinsurer {

using measures::CompensatorField;

struct Integrability {
  bool integrable = true;
  std::string reason;
};

namespace detail {

inline double barycentre_tail_rate(const MarketSpec& market) {
  double rate = 0.0;
  for (const auto& ins : market.insurers) {
    if (ins.weight > 0.0) rate += ins.weight * ins.severity.tail_rate();
  }
  return rate;
}

inline bool any_tabulated(const MarketSpec& market) {
  return std::any_of(market.insurers.begin(), market.insurers.end(),
                     [](const InsurerSpec& i) { return i.severity.is_tabulated(); });
}

/// Distorted field before the integrability verdict is attached.
inline CompensatorField raw_distorted(const MarketSpec& market, const std::vector<double>& alpha) {
  const auto vg = measures::barycentre_density(market.insurers, measures::BarycentreKind::geometric);
  const auto contracts = market.contracts();
  std::vector<double> kinks = vg.kinks();
  const auto lk = contracts::aggregate_kinks(contracts, alpha);
  kinks.insert(kinks.end(), lk.begin(), lk.end());
  const double eps = market.ambiguity;
  if (eps == 0.0) {
    return CompensatorField([vg](double z) { return vg(z); }, kinks, true, vg.tag(),
                            vg.cached_mass());
  }

  std::optional<measures::GammaTag> tag;
  if (market.objective == Objective::wealth && market.contract == ContractKind::proportional &&
      vg.tag()) {
    // e^{eps s z} keeps the gamma shape and lowers the rate.
    const double slope = contracts::aggregate_tail_slope(contracts, alpha);
    const double rate = 1.0 / vg.tag()->scale - eps * slope;
    if (rate > 0.0) {
      const double scale = 1.0 / rate;
      const double shape = vg.tag()->shape;
      tag = measures::GammaTag{shape, scale,
                               vg.tag()->mass * std::pow(scale / vg.tag()->scale, shape)};
    }
  }
  if (market.objective == Objective::wealth) {
    return CompensatorField(
        [vg, contracts, alpha, eps](double z) {
          return vg(z) * std::exp(eps * contracts::aggregate_loss(contracts, alpha, z));
        },
        kinks, true, tag, tag ? std::optional<double>(tag->mass) : std::nullopt);
  }
  const double m = market.utility_risk_aversion;
  return CompensatorField(
      [vg, contracts, alpha, eps, m](double z) {
        const double l = contracts::aggregate_loss(contracts, alpha, z);
        return vg(z) * std::exp(eps / m * std::expm1(m * l));
      },
      kinks, true);
}

}  // namespace detail

/// Whether the reinsurer's pricing integrals converge at controls alpha.
inline Integrability check_integrability(const MarketSpec& market,
                                         const std::vector<double>& alpha) {
  const auto contracts = market.contracts();
  const double slope = contracts::aggregate_tail_slope(contracts, alpha);
  const double eps = market.ambiguity;
  const double rate = detail::barycentre_tail_rate(market);
  if (slope == 0.0) return {};

  if (detail::any_tabulated(market)) {
    // Tabulated tails: probe the pricing integrand by truncation doubling.
    const auto raw = detail::raw_distorted(market, alpha);
    const double m = market.objective == Objective::utility ? market.utility_risk_aversion : 0.0;
    try {
      numerics::integrate_upper_tail(
          [&](double z) {
            return (1.0 + z) * raw(z) *
                   std::exp(m * contracts::aggregate_loss(contracts, alpha, z));
          },
          0.0, market.quadrature, raw.kinks());
    } catch (const Divergent& e) {
      return {false, std::string("tail probe diverged: ") + e.what()};
    } catch (const NonFinite& e) {
      return {false, std::string("tail probe overflowed: ") + e.what()};
    }
    return {};
  }

  if (market.objective == Objective::wealth) {
    if (eps * slope < rate) return {};
    return {false, "epsilon * tail slope of L (" + std::to_string(eps * slope) +
                       ") >= barycentre tail rate (" + std::to_string(rate) + ")"};
  }
  if (eps > 0.0) {
    return {false,
            "utility objective with unbounded aggregate loss: exp((eps/m)(e^{mL}-1)) outgrows "
            "every exponential tail"};
  }
  const double m = market.utility_risk_aversion;
  if (m * slope < rate) return {};
  return {false, "m * tail slope of L (" + std::to_string(m * slope) +
                     ") >= barycentre tail rate (" + std::to_string(rate) + ")"};
}

/// Reinsurer's pricing compensator at controls alpha: v^g e^{eps L} (wealth) or
/// v^g exp((eps/m)(e^{mL} - 1)) (utility).
inline CompensatorField distorted_compensator(const MarketSpec& market,
                                              const std::vector<double>& alpha) {
  if (alpha.size() != market.size()) throw ValidationError("one control per insurer");
  return detail::raw_distorted(market, alpha)
      .with_integrability(check_integrability(market, alpha).integrable);
}

namespace detail {

struct LoadingEvaluation {
  std::vector<double> alpha;
  std::vector<double> residual;
  CompensatorField field;
};

inline LoadingEvaluation evaluate_loadings(const MarketSpec& market,
                                           const std::vector<double>& c) {
  const std::size_t n = market.size();
  if (c.size() != n) throw ValidationError("one loading per insurer");
  LoadingEvaluation ev;
  ev.alpha.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    ev.alpha[k] = insurer::best_response(market.insurers[k], market.contract_of(k), c[k],
                                         market.solver, market.quadrature)
                      .control;
  }
  const auto verdict = check_integrability(market, ev.alpha);
  if (!verdict.integrable) throw NonIntegrable(verdict.reason);
  ev.field = raw_distorted(market, ev.alpha);

  const auto contracts = market.contracts();
  const bool utility = market.objective == Objective::utility;
  const double m = market.utility_risk_aversion;
  const auto& field = ev.field;
  const auto& alpha = ev.alpha;
  auto weighted = [&](double z) {
    const double s = field(z);
    if (!utility || s == 0.0) return s;
    return s * std::exp(m * contracts::aggregate_loss(contracts, alpha, z));
  };

  ev.residual.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& ins = market.insurers[k];
    const auto& contract = contracts[k];
    const double a = alpha[k];
    double pricing = 0.0;
    switch (contract.kind) {
      case ContractKind::proportional:
        pricing = numerics::integrate_upper_tail([&](double z) { return z * weighted(z); }, 0.0,
                                                 market.quadrature, field.kinks());
        break;
      case ContractKind::excess_of_loss:
        pricing = numerics::integrate_upper_tail(weighted, a, market.quadrature, field.kinks());
        break;
      case ContractKind::capped_excess_of_loss:
        pricing = numerics::integrate(weighted, a, a + contract.limit, market.quadrature,
                                      field.kinks());
        break;
    }
    const double lambda = ins.claim_intensity;
    const double mass = contracts::marginal_mass(ins, contract, a);
    if (!(mass > 0.0)) {
      throw NonFinite("insurer " + std::to_string(k + 1) + " cedes no claim mass at alpha = " +
                      std::to_string(a));
    }
    const double slope = insurer::response_slope(ins, contract, c[k], a);
    const double ceded = contracts::ceded_mean(ins, contract, a, market.quadrature);
    const double rhs = (lambda * ceded / slope + pricing) / (lambda * mass);
    ev.residual[k] = (1.0 + c[k]) - rhs;
  }
  return ev;
}

}  // namespace detail

/// (1 + c_k) minus the reinsurer's first-order pricing relation at the
/// insurers' best responses to c.
inline std::vector<double> loading_residual(const MarketSpec& market, const std::vector<double>& c) {
  return detail::evaluate_loadings(market, c).residual;
}

struct LandscapePoint {
  std::size_t insurer;
  double loading;
  double residual_norm;  // +inf when the residual could not be evaluated
};

struct EquilibriumDiagnostics {
  double residual_norm = 0.0;
  int iterations = 0;
  int residual_evaluations = 0;
  int newton_steps = 0;
  std::vector<bool> second_order_ok;
  bool integrable = true;
  std::string integrability_reason;
  std::vector<std::string> warnings;
  std::vector<LandscapePoint> landscape;
};

struct EquilibriumResult {
  std::vector<double> alpha;
  std::vector<double> eta;
  std::vector<double> premiums;
  double total_intensity = 0.0;
  CompensatorField compensator;
  EquilibriumDiagnostics diagnostics;
};

struct SolveOptions {
  std::optional<std::vector<double>> initial_loadings;  // warm start
  bool residual_landscape = false;
};

/// Default starting loadings: e^{gamma median} - 1 for XL-type treaties,
/// theta_k (or 0.5 when zero) for proportional ones.
inline std::vector<double> initial_loadings(const MarketSpec& market) {
  std::vector<double> c0;
  for (const auto& ins : market.insurers) {
    if (market.contract == ContractKind::proportional) {
      c0.push_back(ins.loading > 0.0 ? ins.loading : 0.5);
    } else {
      c0.push_back(std::expm1(ins.risk_aversion * ins.severity.quantile(0.5)));
    }
  }
  return c0;
}

inline EquilibriumResult solve_equilibrium(const MarketSpec& market,
                                           const SolveOptions& options = {}) {
  EquilibriumResult out;
  out.diagnostics.warnings = market.validate();
  for (const auto& w : out.diagnostics.warnings) log_warning(w);

  std::vector<double> c0 = options.initial_loadings.value_or(initial_loadings(market));
  if (c0.size() != market.size()) throw ValidationError("one initial loading per insurer");
  {
    std::vector<double> a0;
    for (std::size_t k = 0; k < market.size(); ++k) {
      a0.push_back(insurer::best_response(market.insurers[k], market.contract_of(k), c0[k],
                                          market.solver, market.quadrature)
                       .control);
    }
    const auto verdict = check_integrability(market, a0);
    if (!verdict.integrable) throw NonIntegrable(verdict.reason);
  }

  auto residual = [&](const std::vector<double>& c) { return loading_residual(market, c); };
  const auto report = numerics::solve_fixed_point_report(residual, c0, market.solver);

  out.eta = report.root;
  const auto ev = detail::evaluate_loadings(market, out.eta);
  out.alpha = ev.alpha;
  const auto contracts = market.contracts();
  for (std::size_t k = 0; k < market.size(); ++k) {
    const auto& ins = market.insurers[k];
    out.premiums.push_back(contracts::premium(contracts::PremiumSide::reinsurer, ins,
                                              contracts[k], out.alpha[k], out.eta[k],
                                              market.quadrature));
    out.diagnostics.second_order_ok.push_back(
        insurer::second_order_check(ins, contracts[k], out.eta[k], out.alpha[k]));
  }
  const double mass = measures::total_intensity(ev.field, market.quadrature);
  out.compensator = ev.field.with_mass(mass);
  out.total_intensity = mass;

  auto& d = out.diagnostics;
  d.residual_norm = report.residual_norm;
  d.iterations = report.iterations;
  d.residual_evaluations = report.residual_evaluations;
  d.newton_steps = report.newton_steps;
  d.integrable = true;

  if (options.residual_landscape) {
    for (std::size_t k = 0; k < market.size(); ++k) {
      for (double factor : {0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0}) {
        auto c = out.eta;
        c[k] = factor * out.eta[k];
        double norm = std::numeric_limits<double>::infinity();
        try {
          norm = numerics::detail::sup_norm(loading_residual(market, c));
        } catch (const error&) {
        }
        d.landscape.push_back({k, c[k], norm});
      }
    }
  }
  return out;
}

/// L* = -W(-m e^{-m}) / m - 1 on the chosen Lambert branch.
inline double crossover_loss(double m, numerics::LambertBranch branch) {
  if (!(m > 0.0) || !std::isfinite(m)) {
    throw OutOfDomain("crossover_loss needs m > 0, got " + std::to_string(m));
  }
  return -numerics::lambert_w(-m * std::exp(-m), branch) / m - 1.0;
}

}  // namespace stackre::reinsurer
