#pragma once

#include <cmath>
#include <string>

#include "stackre/errors.hpp"
#include "stackre/measures/severity.hpp"

namespace stackre::measures {

/// One first-line insurer: CARA risk aversion, Poisson claim model, premium
/// loading towards policyholders and the reinsurer's prior weight on its model.
struct InsurerSpec {
  double risk_aversion = 0.5;    // gamma_k
  double claim_intensity = 1.0;  // lambda_k, claims per unit time
  SeverityModel severity = SeverityModel::exponential(1.0);
  double loading = 0.0;  // theta_k, enters only the simulated wealth
  double weight = 1.0;   // pi_k

  void validate() const {
    if (!(risk_aversion > 0.0) || !std::isfinite(risk_aversion)) {
      throw ValidationError("gamma_k > 0");
    }
    if (!(claim_intensity > 0.0) || !std::isfinite(claim_intensity)) {
      throw ValidationError("lambda_k > 0");
    }
    if (!(loading >= 0.0)) throw ValidationError("theta_k >= 0");
    if (!(weight >= 0.0)) throw ValidationError("pi_k >= 0");
  }

  /// Compensator density v_k(z) = lambda_k f_k(z).
  double compensator(double z) const { return claim_intensity * severity.density(z); }
  double log_compensator(double z) const {
    return std::log(claim_intensity) + severity.log_density(z);
  }

  /// Premium rate charged to policyholders, (1 + theta_k) mu_k lambda_k.
  double premium_rate() const { return (1.0 + loading) * severity.mean() * claim_intensity; }
};

}  // namespace stackre::measures
