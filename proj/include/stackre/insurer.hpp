#pragma once

#include <cmath>
#include <string>

#include "stackre/contracts.hpp"
#include "stackre/errors.hpp"
#include "stackre/measures/insurer_spec.hpp"
#include "stackre/numerics/config.hpp"
#include "stackre/numerics/roots.hpp"

namespace stackre::insurer {

using contracts::Contract;
using contracts::ContractKind;
using measures::InsurerSpec;

struct BestResponse {
  double control = 0.0;
  bool second_order_ok = true;
  bool corner = false;  // proportional a = 1: reinsurance too expensive to buy
};

/// Largest proportional control whose tilted moment E[Z e^{gamma a Z}] exists.
inline double proportional_upper(const InsurerSpec& ins) {
  const double cap = ins.severity.tail_rate() / ins.risk_aversion;
  return cap > 1.0 ? 1.0 : cap * (1.0 - 1e-9);
}

/// First-order residual (1 + c) E[d_a r] - E[d_a r e^{gamma r}].
inline double first_order_residual(const InsurerSpec& ins, const Contract& contract, double c,
                                   double a, const numerics::QuadratureConfig& qcfg = {}) {
  a = contracts::admissible_control(contract, a);
  const double g = ins.risk_aversion;
  if (contract.is_proportional()) {
    return (1.0 + c) * ins.severity.mean() - ins.severity.tilted_moment(1, g * a, qcfg);
  }
  return ((1.0 + c) - std::exp(g * a)) * contracts::marginal_mass(ins, contract, a);
}

/// Second-order condition: E[d2_a r ((1+c) - e^{gamma r})] - gamma E[(d_a r)^2 e^{gamma r}] <= 0.
/// All supported retentions are piecewise linear in a, so only the second
/// (nonpositive) term survives.
inline bool second_order_check(const InsurerSpec& ins, const Contract& contract, double c,
                               double a) {
  (void)c;
  a = contracts::admissible_control(contract, a);
  const double curvature_term = 0.0;
  double concave_term = 0.0;
  if (contract.is_proportional()) {
    concave_term = -ins.risk_aversion * ins.severity.tilted_moment(2, ins.risk_aversion * a);
  } else {
    concave_term = -ins.risk_aversion * std::exp(ins.risk_aversion * a) *
                   contracts::marginal_mass(ins, contract, a);
  }
  return curvature_term + concave_term <= 0.0;
}

/// Optimal control alpha^dagger[c] of a CARA insurer facing loading c.
inline BestResponse best_response(const InsurerSpec& ins, const Contract& contract, double c,
                                  const numerics::SolverConfig& cfg = {},
                                  const numerics::QuadratureConfig& qcfg = {}) {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw OutOfDomain("safety loading must be finite and >= 0, got " + std::to_string(c));
  }
  BestResponse out;
  if (contract.is_xl_type()) {
    out.control = std::log1p(c) / ins.risk_aversion;
  } else {
    const double hi = proportional_upper(ins);
    auto f = [&](double a) { return first_order_residual(ins, contract, c, a, qcfg); };
    const double f_lo = f(contracts::kMinProportional);
    if (f_lo <= 0.0) {
      out.control = contracts::kMinProportional;
    } else if (hi >= 1.0 && f(1.0) >= 0.0) {
      out.control = 1.0;
      out.corner = true;
    } else {
      numerics::SolverConfig root_cfg = cfg;
      root_cfg.tolerance = std::min(cfg.tolerance, 1e-13);
      root_cfg.max_iterations = std::max(cfg.max_iterations, 400);
      out.control = numerics::solve_scalar_root(f, contracts::kMinProportional, hi, root_cfg);
    }
  }
  out.second_order_ok = second_order_check(ins, contract, c, out.control);
  return out;
}

/// d alpha^dagger / dc at an interior best response, by implicit differentiation
/// of the first-order condition.
inline double response_slope(const InsurerSpec& ins, const Contract& contract, double c,
                             double a) {
  if (contract.is_xl_type()) return 1.0 / (ins.risk_aversion * (1.0 + c));
  a = contracts::admissible_control(contract, a);
  return ins.severity.mean() /
         (ins.risk_aversion * ins.severity.tilted_moment(2, ins.risk_aversion * a));
}

}  // namespace stackre::insurer
