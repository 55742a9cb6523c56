#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stackre/errors.hpp"
#include "stackre/log.hpp"
#include "stackre/measures/insurer_spec.hpp"
#include "stackre/numerics/config.hpp"
#include "stackre/numerics/quadrature.hpp"

namespace stackre::measures {

/// sigma(z) = mass * GammaPdf(z; shape, scale).
struct GammaTag {
  double shape;
  double scale;
  double mass;

  double operator()(double z) const {
    if (z < 0.0) return 0.0;
    if (z == 0.0) return shape == 1.0 ? mass / scale : (shape < 1.0 ? INFINITY : 0.0);
    return mass * std::exp((shape - 1.0) * std::log(z) - z / scale - std::lgamma(shape) -
                           shape * std::log(scale));
  }
};

/// Nonnegative intensity density z -> sigma(z) of a marked Poisson measure,
/// in claims per unit time per unit loss. Immutable once built.
class CompensatorField {
 public:
  using Evaluator = std::function<double(double)>;

  CompensatorField() = default;

  CompensatorField(Evaluator eval, std::vector<double> kinks = {}, bool integrable = true,
                   std::optional<GammaTag> tag = std::nullopt,
                   std::optional<double> mass = std::nullopt)
      : eval_(std::make_shared<Evaluator>(std::move(eval))),
        kinks_(std::move(kinks)),
        integrable_(integrable),
        tag_(tag),
        mass_(mass) {
    std::sort(kinks_.begin(), kinks_.end());
  }

  static CompensatorField from_tag(const GammaTag& tag) {
    return CompensatorField([tag](double z) { return tag(z); }, {}, true, tag, tag.mass);
  }

  /// v_k(z) = lambda_k f_k(z); tagged when the severity is exponential or gamma.
  static CompensatorField of_insurer(const InsurerSpec& ins) {
    if (ins.severity.is_gamma_family()) {
      return from_tag({ins.severity.shape(), ins.severity.scale(), ins.claim_intensity});
    }
    const auto& table = std::get<Tabulated>(ins.severity.params());
    return CompensatorField([ins](double z) { return ins.compensator(z); }, table.z, true,
                            std::nullopt, ins.claim_intensity);
  }

  double operator()(double z) const { return z < 0.0 ? 0.0 : (*eval_)(z); }

  const std::vector<double>& kinks() const { return kinks_; }
  bool integrable() const { return integrable_; }
  const std::optional<GammaTag>& tag() const { return tag_; }
  const std::optional<double>& cached_mass() const { return mass_; }

  CompensatorField with_integrability(bool integrable) const {
    CompensatorField copy = *this;
    copy.integrable_ = integrable;
    return copy;
  }

  CompensatorField with_mass(double mass) const {
    CompensatorField copy = *this;
    copy.mass_ = mass;
    return copy;
  }

 private:
  std::shared_ptr<const Evaluator> eval_ =
      std::make_shared<const Evaluator>([](double) { return 0.0; });
  std::vector<double> kinks_;
  bool integrable_ = true;
  std::optional<GammaTag> tag_;
  std::optional<double> mass_;
};

enum class BarycentreKind { arithmetic, geometric };

inline double weight_sum(std::span<const InsurerSpec> insurers) {
  double s = 0.0;
  for (const auto& ins : insurers) s += ins.weight;
  return s;
}

/// Weighted arithmetic (sum pi_k v_k) or geometric (prod v_k^pi_k) mean of the
/// insurers' compensators. The geometric mean is evaluated in log space; a
/// point where some v_k vanishes with pi_k > 0 yields 0 and one warning.
inline CompensatorField barycentre_density(std::span<const InsurerSpec> insurers,
                                           BarycentreKind kind) {
  if (insurers.empty()) throw ValidationError("barycentre needs at least one insurer");
  if (std::abs(weight_sum(insurers) - 1.0) > 1e-12) {
    throw ValidationError("barycentre weights must sum to 1");
  }
  std::vector<InsurerSpec> members;
  std::vector<double> kinks;
  for (const auto& ins : insurers) {
    if (ins.weight <= 0.0) continue;
    members.push_back(ins);
    if (ins.severity.is_tabulated()) {
      const auto& t = std::get<Tabulated>(ins.severity.params());
      kinks.insert(kinks.end(), t.z.begin(), t.z.end());
    }
  }
  const bool all_gamma = std::all_of(members.begin(), members.end(), [](const InsurerSpec& i) {
    return i.severity.is_gamma_family();
  });

  if (kind == BarycentreKind::arithmetic) {
    double mass = 0.0;
    for (const auto& ins : members) mass += ins.weight * ins.claim_intensity;
    std::optional<GammaTag> tag;
    if (all_gamma) {
      const double m = members.front().severity.shape();
      const double xi = members.front().severity.scale();
      const bool same = std::all_of(members.begin(), members.end(), [&](const InsurerSpec& i) {
        return i.severity.shape() == m && i.severity.scale() == xi;
      });
      if (same) tag = GammaTag{m, xi, mass};
    }
    return CompensatorField(
        [members](double z) {
          double s = 0.0;
          for (const auto& ins : members) s += ins.weight * ins.compensator(z);
          return s;
        },
        std::move(kinks), true, tag, mass);
  }

  std::optional<GammaTag> tag;
  if (all_gamma) {
    double shape = 0.0, rate = 0.0, log_c = 0.0;
    for (const auto& ins : members) {
      const double m = ins.severity.shape(), xi = ins.severity.scale();
      shape += ins.weight * m;
      rate += ins.weight / xi;
      log_c += ins.weight * (std::log(ins.claim_intensity) - std::lgamma(m) - m * std::log(xi));
    }
    const double scale = 1.0 / rate;
    const double mass = std::exp(log_c + std::lgamma(shape) + shape * std::log(scale));
    tag = GammaTag{shape, scale, mass};
  }
  auto warned = std::make_shared<std::once_flag>();
  return CompensatorField(
      [members, warned](double z) {
        double log_v = 0.0;
        for (const auto& ins : members) {
          const double lv = ins.log_compensator(z);
          if (lv == -std::numeric_limits<double>::infinity()) {
            std::call_once(*warned, [] {
              log_warning("geometric barycentre: a weighted compensator vanishes on part of "
                          "the support; the mean is set to 0 there");
            });
            return 0.0;
          }
          log_v += ins.weight * lv;
        }
        return std::exp(log_v);
      },
      std::move(kinks), true, tag, tag ? std::optional<double>(tag->mass) : std::nullopt);
}

/// Lambda = integral of sigma over the half-line. Closed form for gamma tags.
inline double total_intensity(const CompensatorField& field,
                              const numerics::QuadratureConfig& cfg = {}) {
  if (!field.integrable()) throw Divergent("compensator is flagged non-integrable");
  if (field.tag()) return field.tag()->mass;
  if (field.cached_mass()) return *field.cached_mass();
  return numerics::integrate_upper_tail([&](double z) { return field(z); }, 0.0, cfg,
                                        field.kinks());
}

/// KL divergence rate: integral of sigma log(sigma / v) - sigma + v.
inline double kl_rate(const CompensatorField& candidate, const CompensatorField& reference,
                      const numerics::QuadratureConfig& cfg = {}) {
  std::vector<double> kinks = candidate.kinks();
  kinks.insert(kinks.end(), reference.kinks().begin(), reference.kinks().end());
  auto integrand = [&](double z) {
    const double s = candidate(z);
    const double v = reference(z);
    if (s <= 0.0) return v;
    if (v <= 0.0) {
      throw Divergent("candidate compensator is not absolutely continuous w.r.t. the reference");
    }
    const double ratio = s / v;
    // v * (c log c - c + 1), written to keep c near 1 accurate.
    return v * (ratio * std::log(ratio) - (ratio - 1.0));
  };
  return numerics::integrate_upper_tail(integrand, 0.0, cfg, kinks);
}

}  // namespace stackre::measures
