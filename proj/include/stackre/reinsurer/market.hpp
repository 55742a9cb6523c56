#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "stackre/contracts.hpp"
#include "stackre/errors.hpp"
#include "stackre/measures/insurer_spec.hpp"
#include "stackre/numerics/config.hpp"

namespace stackre::reinsurer {

using contracts::Contract;
using contracts::ContractKind;
using measures::InsurerSpec;

enum class Objective { wealth, utility };

inline numerics::QuadratureConfig tight_quadrature() {
  numerics::QuadratureConfig q;
  q.abs_tol = 1e-15;
  q.rel_tol = 1e-14;
  q.max_subdivisions = 4000;
  return q;
}

/// Full description of the game.
struct MarketSpec {
  std::vector<InsurerSpec> insurers;
  ContractKind contract = ContractKind::proportional;
  std::vector<double> limits;  // ell_k, capped XL only
  double ambiguity = 0.0;      // epsilon
  Objective objective = Objective::wealth;
  double utility_risk_aversion = 1.0;  // m, utility objective only
  double horizon = 1.0;                // T, simulation only
  numerics::QuadratureConfig quadrature = tight_quadrature();
  numerics::SolverConfig solver;

  std::size_t size() const { return insurers.size(); }

  Contract contract_of(std::size_t k) const {
    if (contract == ContractKind::capped_excess_of_loss) return Contract::capped(limits.at(k));
    return {contract};
  }

  std::vector<Contract> contracts() const {
    std::vector<Contract> out;
    for (std::size_t k = 0; k < size(); ++k) out.push_back(contract_of(k));
    return out;
  }

  /// Throws ValidationError on a hard constraint; returns soft warnings.
  std::vector<std::string> validate() const {
    std::vector<std::string> warnings;
    if (insurers.empty()) throw ValidationError("n >= 1 insurers");
    double pi_sum = 0.0;
    for (const auto& ins : insurers) {
      ins.validate();
      pi_sum += ins.weight;
    }
    if (std::abs(pi_sum - 1.0) > 1e-12) throw ValidationError("sum of pi_k = 1");
    if (!(ambiguity >= 0.0) || !std::isfinite(ambiguity)) throw ValidationError("epsilon >= 0");
    if (objective == Objective::utility &&
        (!(utility_risk_aversion > 0.0) || !std::isfinite(utility_risk_aversion))) {
      throw ValidationError("m > 0");
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("T > 0");
    if (contract == ContractKind::capped_excess_of_loss) {
      if (limits.size() != size()) throw ValidationError("one ell_k per insurer");
      for (double l : limits) {
        if (!(l > 0.0) || !std::isfinite(l)) throw ValidationError("ell_k > 0");
      }
    }
    quadrature.validate();
    solver.validate();

    const double n = static_cast<double>(size());
    for (std::size_t k = 0; k < size(); ++k) {
      const auto& ins = insurers[k];
      const double xi = ins.severity.scale();
      if (ins.severity.is_gamma_family() && contract != ContractKind::capped_excess_of_loss &&
          xi >= 1.0 / ins.risk_aversion) {
        throw ValidationError("xi_k >= 1/gamma_k (insurer " + std::to_string(k + 1) + ")");
      }
      if (ambiguity > 0.0 && xi >= 1.0 / (n * ambiguity)) {
        warnings.push_back("insurer " + std::to_string(k + 1) +
                           ": xi_k >= 1/(n epsilon); the distorted compensator may not be "
                           "integrable");
      }
    }
    return warnings;
  }
};

}  // namespace stackre::reinsurer
