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

namespace stackre::contracts {

enum class ContractKind { proportional, excess_of_loss, capped_excess_of_loss };

inline const char* to_string(ContractKind kind) {
  switch (kind) {
    case ContractKind::proportional: return "proportional";
    case ContractKind::excess_of_loss: return "xl";
    case ContractKind::capped_excess_of_loss: return "capped_xl";
  }
  return "?";
}

inline constexpr double kMinProportional = 1e-9;

/// Reinsurance treaty shape. The control a is the retained share for
/// proportional treaties and the retention level otherwise.
struct Contract {
  ContractKind kind = ContractKind::proportional;
  double limit = std::numeric_limits<double>::infinity();  // layer width, capped only

  static Contract proportional() { return {ContractKind::proportional}; }
  static Contract excess_of_loss() { return {ContractKind::excess_of_loss}; }
  static Contract capped(double limit) {
    Contract c{ContractKind::capped_excess_of_loss, limit};
    c.validate();
    return c;
  }

  bool is_proportional() const { return kind == ContractKind::proportional; }
  bool is_xl_type() const { return kind != ContractKind::proportional; }

  void validate() const {
    if (kind == ContractKind::capped_excess_of_loss && !(limit > 0.0 && std::isfinite(limit))) {
      throw ValidationError("ell_k > 0");
    }
  }
};

/// Checks a against the control domain and returns it, pushing proportional
/// controls into [1e-9, 1].
inline double admissible_control(const Contract& contract, double a) {
  if (!std::isfinite(a)) throw ControlOutOfDomain("control is not finite");
  if (contract.is_proportional()) {
    if (a < 0.0 || a > 1.0 + 1e-12) {
      throw ControlOutOfDomain("proportional control " + std::to_string(a) +
                               " outside (0, 1]");
    }
    return std::clamp(a, kMinProportional, 1.0);
  }
  if (a < 0.0) throw ControlOutOfDomain("retention level " + std::to_string(a) + " < 0");
  return a;
}

enum class RetentionQuery { value, d_da };

/// r(z, a) or its a-derivative. Indicators are left-continuous at the kinks.
inline double retention(const Contract& contract, double z, double a,
                        RetentionQuery query = RetentionQuery::value) {
  a = admissible_control(contract, a);
  z = std::max(z, 0.0);
  const bool value = query == RetentionQuery::value;
  switch (contract.kind) {
    case ContractKind::proportional:
      return value ? a * z : z;
    case ContractKind::excess_of_loss:
      if (value) return std::min(a, z);
      return a <= z ? 1.0 : 0.0;
    case ContractKind::capped_excess_of_loss:
      if (value) return z > a + contract.limit ? z - contract.limit : std::min(a, z);
      return (a <= z && z <= a + contract.limit) ? 1.0 : 0.0;
  }
  return 0.0;
}

/// Ceded part z - r(z, a).
inline double ceded(const Contract& contract, double z, double a) {
  return std::max(z, 0.0) - retention(contract, z, a);
}

/// E[z - r(Z, a)] under the insurer's severity.
inline double ceded_mean(const measures::InsurerSpec& ins, const Contract& contract, double a,
                         const numerics::QuadratureConfig& cfg = {}) {
  a = admissible_control(contract, a);
  switch (contract.kind) {
    case ContractKind::proportional:
      return (1.0 - a) * ins.severity.mean();
    case ContractKind::excess_of_loss:
      return ins.severity.stop_loss(a, cfg);
    case ContractKind::capped_excess_of_loss:
      return ins.severity.stop_loss(a, cfg) - ins.severity.stop_loss(a + contract.limit, cfg);
  }
  return 0.0;
}

/// E[d_a r(Z, a)]: the claim mass on which a marginal change in a acts.
inline double marginal_mass(const measures::InsurerSpec& ins, const Contract& contract,
                            double a) {
  a = admissible_control(contract, a);
  switch (contract.kind) {
    case ContractKind::proportional:
      return ins.severity.mean();
    case ContractKind::excess_of_loss:
      return ins.severity.survival(a);
    case ContractKind::capped_excess_of_loss:
      return ins.severity.survival(a) - ins.severity.survival(a + contract.limit);
  }
  return 0.0;
}

enum class PremiumSide { insurer, reinsurer };

/// Expected-value premium per unit time. On the insurer side loading is
/// theta_k and (contract, a) are ignored.
inline double premium(PremiumSide side, const measures::InsurerSpec& ins,
                      const Contract& contract, double a, double loading,
                      const numerics::QuadratureConfig& cfg = {}) {
  if (!(loading >= 0.0)) throw ValidationError("premium loading must be >= 0");
  if (side == PremiumSide::insurer) {
    return (1.0 + loading) * ins.claim_intensity * ins.severity.mean();
  }
  return (1.0 + loading) * ins.claim_intensity * ceded_mean(ins, contract, a, cfg);
}

/// L(z, alpha) = sum over insurers of z - r_k(z, alpha_k).
inline double aggregate_loss(std::span<const Contract> contracts, std::span<const double> alpha,
                             double z) {
  if (contracts.size() != alpha.size()) {
    throw ValidationError("aggregate_loss: contract and control counts differ");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < contracts.size(); ++k) total += ceded(contracts[k], z, alpha[k]);
  return total;
}

/// Slope of L(z, alpha) as z grows without bound.
inline double aggregate_tail_slope(std::span<const Contract> contracts,
                                   std::span<const double> alpha) {
  double slope = 0.0;
  for (std::size_t k = 0; k < contracts.size(); ++k) {
    switch (contracts[k].kind) {
      case ContractKind::proportional:
        slope += 1.0 - admissible_control(contracts[k], alpha[k]);
        break;
      case ContractKind::excess_of_loss:
        slope += 1.0;
        break;
      case ContractKind::capped_excess_of_loss:
        break;
    }
  }
  return slope;
}

/// z-values where L(., alpha) changes slope.
inline std::vector<double> aggregate_kinks(std::span<const Contract> contracts,
                                           std::span<const double> alpha) {
  std::vector<double> kinks;
  for (std::size_t k = 0; k < contracts.size(); ++k) {
    if (contracts[k].is_proportional()) continue;
    kinks.push_back(alpha[k]);
    if (contracts[k].kind == ContractKind::capped_excess_of_loss) {
      kinks.push_back(alpha[k] + contracts[k].limit);
    }
  }
  std::sort(kinks.begin(), kinks.end());
  return kinks;
}

}  // namespace stackre::contracts
