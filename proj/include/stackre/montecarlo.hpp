#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "stackre/contracts.hpp"
#include "stackre/errors.hpp"
#include "stackre/insurer.hpp"
#include "stackre/measures/compensator.hpp"
#include "stackre/numerics/quadrature.hpp"
#include "stackre/reinsurer/equilibrium.hpp"

namespace stackre::montecarlo {

using measures::CompensatorField;
using measures::InsurerSpec;
using measures::SeverityModel;

struct SimConfig {
  double horizon = 1.0;  // T
  std::int64_t replications = 10000;
  std::uint64_t seed = 1;
  std::vector<double> insurer_wealth;  // X_{0,k}; missing entries are 0
  double reinsurer_wealth = 0.0;       // Y_0
  bool antithetic = false;             // pair each path with 1 - u claim sizes
  unsigned threads = 1;

  void validate() const {
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ValidationError("T >= 0");
    if (replications < 1) throw ValidationError("replications >= 1");
    if (threads < 1) throw ValidationError("threads >= 1");
  }
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct EventPath {
  std::vector<double> times;
  std::vector<double> sizes;
  std::string tag;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based stream: splitmix64 applied to a Weyl sequence. Each
/// replication starts from a state hashed out of (seed, index).
class Stream {
 public:
  using result_type = std::uint64_t;
  explicit Stream(std::uint64_t state) : state_(state) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Independent generator for replication `index` of a run with `seed`.
inline Stream replication_engine(std::uint64_t seed, std::uint64_t index) {
  return Stream(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

/// Uniform on the open interval (0, 1) from the top 53 bits.
inline double open_uniform(Stream& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Inverse-cdf sampler for a claim-size law.
class MarkSampler {
 public:
  MarkSampler(std::function<double(double)> quantile, std::string tag)
      : quantile_(std::make_shared<std::function<double(double)>>(std::move(quantile))),
        tag_(std::move(tag)) {}

  static MarkSampler of(const SeverityModel& severity) {
    std::string tag = severity.is_exponential() ? "exponential"
                      : severity.is_gamma()     ? "gamma"
                                                : "tabulated";
    if (severity.is_exponential()) {
      const double xi = severity.scale();
      return MarkSampler([xi](double u) { return -xi * std::log1p(-u); }, tag);
    }
    return MarkSampler([severity](double u) { return severity.quantile(u); }, tag);
  }

  /// Quantile table of sigma / Lambda with `knots` cells on [0, z_max], where
  /// z_max leaves a tail mass below 1e-13. The cdf is linear within a cell.
  static MarkSampler of(const CompensatorField& field, int knots = 2048,
                        const numerics::QuadratureConfig& cfg = {}) {
    const double mass = measures::total_intensity(field, cfg);
    double z_max = 1.0;
    for (const double k : field.kinks()) z_max = std::max(z_max, k + 1.0);
    while (numerics::integrate_upper_tail([&](double z) { return field(z); }, z_max, cfg) >
           1e-13 * mass) {
      z_max *= 1.5;
    }
    std::vector<double> z(knots + 1), cdf(knots + 1, 0.0);
    for (int i = 0; i <= knots; ++i) z[i] = z_max * i / knots;
    for (int i = 0; i < knots; ++i) {
      cdf[i + 1] = cdf[i] + numerics::integrate([&](double x) { return field(x); }, z[i], z[i + 1],
                                                cfg, field.kinks()) /
                                mass;
    }
    for (double& c : cdf) c /= cdf.back();
    auto table = std::make_shared<std::pair<std::vector<double>, std::vector<double>>>(
        std::move(z), std::move(cdf));
    return MarkSampler(
        [table](double u) {
          const auto& [zs, cs] = *table;
          auto it = std::upper_bound(cs.begin(), cs.end(), u);
          if (it == cs.begin()) return zs.front();
          if (it == cs.end()) return zs.back();
          const std::size_t i = static_cast<std::size_t>(it - cs.begin()) - 1;
          const double w = (u - cs[i]) / (cs[i + 1] - cs[i]);
          return zs[i] + w * (zs[i + 1] - zs[i]);
        },
        "compensator-table");
  }

  double operator()(double u) const { return (*quantile_)(u); }
  const std::string& tag() const { return tag_; }

 private:
  std::shared_ptr<std::function<double(double)>> quantile_;
  std::string tag_;
};

/// One path on [0, T]: exponential inter-arrival times, then i.i.d. marks.
/// With `mirror` the claim sizes use 1 - u in place of u.
inline EventPath draw_path(double intensity, const MarkSampler& marks, double horizon,
                           Stream& rng, bool mirror = false) {
  EventPath path;
  path.tag = marks.tag();
  if (!(horizon > 0.0)) return path;
  double t = 0.0;
  while (true) {
    t -= std::log(open_uniform(rng)) / intensity;
    if (t > horizon) break;
    path.times.push_back(t);
  }
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    const double u = open_uniform(rng);
    path.sizes.push_back(marks(mirror ? 1.0 - u : u));
  }
  return path;
}

inline EventPath simulate_compound_poisson(double intensity, const MarkSampler& marks,
                                           double horizon, std::uint64_t seed) {
  if (!(intensity > 0.0)) throw ValidationError("Poisson intensity must be > 0");
  if (!(horizon >= 0.0)) throw ValidationError("T >= 0");
  auto rng = replication_engine(seed, 0);
  return draw_path(intensity, marks, horizon, rng);
}

namespace detail {

inline constexpr std::int64_t kBlock = 4096;

/// Runs body(index, out) for every sample and sums `width` accumulators per
/// fixed block of replications; blocks are then combined in index order, so
/// the total does not depend on the thread count.
template <class Body>
std::vector<double> blocked_sums(std::int64_t samples, std::size_t width, unsigned threads,
                                 const Body& body) {
  const std::int64_t blocks = (samples + kBlock - 1) / kBlock;
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(blocks),
                                           std::vector<double>(width, 0.0));
  auto run = [&](unsigned worker) {
    std::vector<double> row(width);
    for (std::int64_t b = worker; b < blocks; b += threads) {
      auto& acc = partial[static_cast<std::size_t>(b)];
      const std::int64_t end = std::min(samples, (b + 1) * kBlock);
      for (std::int64_t i = b * kBlock; i < end; ++i) {
        std::fill(row.begin(), row.end(), 0.0);
        body(i, row);
        for (std::size_t j = 0; j < width; ++j) acc[j] += row[j];
      }
    }
  };
  if (threads <= 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(run, w);
    for (auto& th : pool) th.join();
  }
  std::vector<double> total(width, 0.0);
  for (const auto& p : partial) {
    for (std::size_t j = 0; j < width; ++j) total[j] += p[j];
  }
  return total;
}

inline Estimate from_moments(double sum, double sum_sq, double count) {
  const double mean = sum / count;
  const double var = count > 1.0 ? std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0))
                                 : 0.0;
  return {mean, std::sqrt(var / count)};
}

}  // namespace detail

struct InsurerGridEstimate {
  std::vector<Estimate> utility;
  // Paired difference utility[i] - utility[reference], same claim paths.
  std::vector<Estimate> difference;
};

/// Expected CARA utility of terminal wealth over a grid of controls, all
/// evaluated on common claim paths.
inline InsurerGridEstimate estimate_insurer_grid(const InsurerSpec& ins,
                                                 const contracts::Contract& contract,
                                                 const std::vector<double>& controls, double c,
                                                 const SimConfig& sim,
                                                 std::size_t reference = 0) {
  sim.validate();
  ins.validate();
  if (controls.empty() || reference >= controls.size()) {
    throw ValidationError("control grid must be non-empty and contain the reference");
  }
  const std::size_t g = controls.size();
  const double x0 = sim.insurer_wealth.empty() ? 0.0 : sim.insurer_wealth.front();
  std::vector<double> drift(g);
  for (std::size_t j = 0; j < g; ++j) {
    const double p_i = contracts::premium(contracts::PremiumSide::insurer, ins, contract,
                                          controls[j], ins.loading);
    const double p_r =
        contracts::premium(contracts::PremiumSide::reinsurer, ins, contract, controls[j], c);
    drift[j] = x0 + (p_i - p_r) * sim.horizon;
  }
  const auto marks = MarkSampler::of(ins.severity);
  const double gamma = ins.risk_aversion;
  const std::size_t width = 4 * g;  // sum, sum_sq of utility; sum, sum_sq of difference
  auto body = [&](std::int64_t i, std::vector<double>& out) {
    auto rng = replication_engine(sim.seed, static_cast<std::uint64_t>(i));
    const int copies = sim.antithetic ? 2 : 1;
    std::vector<double> u(g, 0.0);
    auto base = rng;
    for (int copy = 0; copy < copies; ++copy) {
      auto local = base;
      const auto path = draw_path(ins.claim_intensity, marks, sim.horizon, local, copy == 1);
      for (std::size_t j = 0; j < g; ++j) {
        double kept = 0.0;
        for (double z : path.sizes) kept += contracts::retention(contract, z, controls[j]);
        u[j] += -std::exp(-gamma * (drift[j] - kept)) / gamma / copies;
      }
    }
    for (std::size_t j = 0; j < g; ++j) {
      const double d = u[j] - u[reference];
      out[4 * j] = u[j];
      out[4 * j + 1] = u[j] * u[j];
      out[4 * j + 2] = d;
      out[4 * j + 3] = d * d;
    }
  };
  const auto sums = detail::blocked_sums(sim.replications, width, sim.threads, body);
  InsurerGridEstimate est;
  const double n = static_cast<double>(sim.replications);
  for (std::size_t j = 0; j < g; ++j) {
    est.utility.push_back(detail::from_moments(sums[4 * j], sums[4 * j + 1], n));
    est.difference.push_back(detail::from_moments(sums[4 * j + 2], sums[4 * j + 3], n));
  }
  return est;
}

/// E[u_k(X_{T,k})] with u_k(x) = -(1/gamma_k) e^{-gamma_k x}.
inline Estimate estimate_insurer_objective(const InsurerSpec& ins,
                                           const contracts::Contract& contract, double a,
                                           double c, const SimConfig& sim) {
  return estimate_insurer_grid(ins, contract, {a}, c, sim).utility.front();
}

/// Y_0 + T sum p_k^R - E^sigma[sum of L over claims] + (T/eps) sum pi_k KL(sigma | v_k).
inline Estimate estimate_reinsurer_objective(const reinsurer::MarketSpec& market,
                                             const std::vector<double>& c,
                                             const CompensatorField& sigma, const SimConfig& sim) {
  sim.validate();
  if (!sigma.integrable()) throw NonIntegrable("pricing compensator is not integrable");
  const std::size_t n = market.size();
  if (c.size() != n) throw ValidationError("one loading per insurer");
  const auto contracts = market.contracts();
  std::vector<double> alpha(n);
  double premium_rate = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    alpha[k] = insurer::best_response(market.insurers[k], contracts[k], c[k], market.solver,
                                      market.quadrature)
                   .control;
    premium_rate += contracts::premium(contracts::PremiumSide::reinsurer, market.insurers[k],
                                       contracts[k], alpha[k], c[k], market.quadrature);
  }
  double penalty = 0.0;
  if (market.ambiguity > 0.0) {
    for (const auto& ins : market.insurers) {
      if (ins.weight == 0.0) continue;
      penalty += ins.weight *
                 measures::kl_rate(sigma, CompensatorField::of_insurer(ins), market.quadrature);
    }
    penalty *= sim.horizon / market.ambiguity;
  }
  const double base = sim.reinsurer_wealth + premium_rate * sim.horizon + penalty;
  const double mass = measures::total_intensity(sigma, market.quadrature);
  const bool cedes_nothing = contracts::aggregate_tail_slope(contracts, alpha) == 0.0 &&
                             contracts::aggregate_kinks(contracts, alpha).empty();
  if (!(mass > 0.0) || cedes_nothing) {
    return {base, 0.0};
  }
  const auto marks = MarkSampler::of(sigma, 2048, market.quadrature);
  auto body = [&](std::int64_t i, std::vector<double>& out) {
    auto rng = replication_engine(sim.seed, static_cast<std::uint64_t>(i));
    const auto path = draw_path(mass, marks, sim.horizon, rng);
    double loss = 0.0;
    for (double z : path.sizes) loss += contracts::aggregate_loss(contracts, alpha, z);
    const double y = base - loss;
    out[0] = y;
    out[1] = y * y;
  };
  const auto sums = detail::blocked_sums(sim.replications, 2, sim.threads, body);
  return detail::from_moments(sums[0], sums[1], static_cast<double>(sim.replications));
}

/// Mean of the Girsanov density dQ^sigma/dP on [0, T] for paths drawn under the
/// reference compensator: exp(T (Lambda_ref - Lambda_sigma)) prod sigma(Z_i)/ref(Z_i).
inline Estimate estimate_density_mean(const CompensatorField& sigma,
                                      const InsurerSpec& reference, const SimConfig& sim,
                                      const numerics::QuadratureConfig& cfg = {}) {
  sim.validate();
  const auto ref = CompensatorField::of_insurer(reference);
  const double drift =
      sim.horizon * (reference.claim_intensity - measures::total_intensity(sigma, cfg));
  const auto marks = MarkSampler::of(reference.severity);
  auto body = [&](std::int64_t i, std::vector<double>& out) {
    auto rng = replication_engine(sim.seed, static_cast<std::uint64_t>(i));
    const auto path = draw_path(reference.claim_intensity, marks, sim.horizon, rng);
    double log_d = drift;
    for (double z : path.sizes) log_d += std::log(sigma(z)) - std::log(ref(z));
    const double d = std::exp(log_d);
    out[0] = d;
    out[1] = d * d;
  };
  const auto sums = detail::blocked_sums(sim.replications, 2, sim.threads, body);
  return detail::from_moments(sums[0], sums[1], static_cast<double>(sim.replications));
}

}  // namespace stackre::montecarlo
