#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "markets.hpp"
#include "stackre/measures/compensator.hpp"
#include "stackre/measures/severity.hpp"
#include "stackre/numerics/quadrature.hpp"

using namespace stackre;
using namespace stackre::measures;

TEST(Severity, QuotedQuantiles) {
  EXPECT_NEAR(SeverityModel::exponential(1.0).cdf(1.0), 0.632, 5e-4);
  EXPECT_NEAR(SeverityModel::exponential(1.25).cdf(1.0), 0.551, 5e-4);
  EXPECT_EQ(SeverityModel::gamma(1.5, 1.0).cdf(0.0), 0.0);
}

TEST(Severity, ConsistentTriple) {
  const std::vector<SeverityModel> models{
      SeverityModel::exponential(1.25), SeverityModel::gamma(1.5, 1.0),
      SeverityModel::tabulated({0, 0.5, 1, 2, 3}, {0.2, 0.6, 0.5, 0.3, 0.1})};
  for (const auto& s : models) {
    for (double z : {0.1, 0.7, 1.3, 2.5, 4.0}) {
      EXPECT_NEAR(s.cdf(z) + s.survival(z), 1.0, 1e-14);
    }
    for (double p : {0.01, 0.3, 0.5, 0.9, 0.999}) {
      EXPECT_NEAR(s.cdf(s.quantile(p)), p, 1e-10);
    }
    EXPECT_THROW(s.quantile(0.0), OutOfDomain);
    EXPECT_THROW(s.eval(SeverityQuery::density, -1.0), OutOfDomain);
  }
}

TEST(Severity, DensityIntegratesToOne) {
  numerics::QuadratureConfig cfg;
  const std::vector<SeverityModel> models{
      SeverityModel::exponential(0.7), SeverityModel::gamma(2.0, 1.25),
      SeverityModel::tabulated({0, 0.5, 1, 2, 3}, {0.2, 0.6, 0.5, 0.3, 0.1})};
  for (const auto& s : models) {
    const std::vector<double> knots{0.5, 1, 2, 3};
    const double mass =
        numerics::integrate_upper_tail([&](double z) { return s.density(z); }, 0.0, cfg, knots);
    EXPECT_NEAR(mass, 1.0, 1e-8);
    const double mean = numerics::integrate_upper_tail(
        [&](double z) { return z * s.density(z); }, 0.0, cfg, knots);
    EXPECT_NEAR(mean, s.mean(), 1e-8);
  }
}

TEST(Severity, StopLossMatchesQuadrature) {
  numerics::QuadratureConfig cfg;
  const auto g = SeverityModel::gamma(1.5, 1.0);
  for (double a : {0.0, 0.5, 2.0}) {
    const double q = numerics::integrate_upper_tail([&](double z) { return g.survival(z); }, a, cfg);
    EXPECT_NEAR(g.stop_loss(a), q, 1e-9);
  }
}

TEST(TiltedMoment, Anchors) {
  EXPECT_DOUBLE_EQ(SeverityModel::exponential(1.7).tilted_moment(1, 0.0), 1.7);
  // 1.5 / 0.75^2.5
  EXPECT_NEAR(SeverityModel::gamma(1.5, 1.0).tilted_moment(1, 0.25), 3.079201435678004, 1e-12);
  EXPECT_THROW(SeverityModel::exponential(1.0).tilted_moment(1, 1.0), Divergent);
}

TEST(TiltedMoment, ClosedFormAgreesWithQuadrature) {
  numerics::QuadratureConfig cfg;
  cfg.abs_tol = 1e-12;
  cfg.rel_tol = 1e-12;
  for (double m : {1.0, 1.5, 3.0}) {
    for (double xi : {0.5, 1.0, 1.25}) {
      for (double frac : {0.0, 0.3, 0.6, 0.9}) {
        const auto s = SeverityModel::gamma(m, xi);
        const double tilt = frac / xi;
        for (int order : {1, 2}) {
          const double q = numerics::integrate_upper_tail(
              [&](double z) { return std::exp(order * std::log(z) + tilt * z + s.log_density(z)); },
              0.0, cfg);
          EXPECT_NEAR(s.tilted_moment(order, tilt), q, 1e-8 * std::max(1.0, q))
              << m << " " << xi << " " << frac << " " << order;
        }
      }
    }
  }
}

TEST(Barycentre, SingleInsurerIsIdentity) {
  const std::vector<InsurerSpec> one{markets::insurer(0.5, 2.0, SeverityModel::gamma(1.5, 1), 1)};
  const auto vg = barycentre_density(one, BarycentreKind::geometric);
  for (double z : {0.1, 1.0, 5.0}) EXPECT_NEAR(vg(z), one[0].compensator(z), 1e-14 * vg(z) + 1e-300);
}

TEST(Barycentre, ExponentialPairGeometric) {
  const auto mk = markets::exponential_pair(markets::ContractKind::excess_of_loss);
  const auto vg = barycentre_density(mk.insurers, BarycentreKind::geometric);
  EXPECT_NEAR(vg(0.0), 2.0, 1e-14);
  for (double z : {0.5, 2.0, 7.0}) EXPECT_NEAR(vg(z), 2.0 * std::exp(-0.9 * z), 1e-14);
  ASSERT_TRUE(vg.tag());
  EXPECT_NEAR(total_intensity(vg), 2.0 / 0.9, 1e-12);
}

TEST(Barycentre, GammaPairTag) {
  const auto mk = markets::gamma_pair(0.5);
  const auto vg = barycentre_density(mk.insurers, BarycentreKind::geometric);
  ASSERT_TRUE(vg.tag());
  EXPECT_NEAR(vg.tag()->shape, 1.75, 1e-14);
  EXPECT_NEAR(vg.tag()->scale, 1.0 / 0.9, 1e-14);
  EXPECT_NEAR(total_intensity(vg), 2.100018816865075, 1e-12);
  numerics::QuadratureConfig cfg;
  cfg.abs_tol = cfg.rel_tol = 1e-13;
  const double q = numerics::integrate_upper_tail([&](double z) { return vg(z); }, 0.0, cfg);
  EXPECT_NEAR(q, 2.100018816865075, 1e-9);
  for (double z : {0.3, 1.0, 4.0}) EXPECT_NEAR(vg(z), (*vg.tag())(z), 1e-13);
}

TEST(Barycentre, ArithmeticDominatesGeometric) {
  for (double pi2 : {0.2, 0.5, 0.9}) {
    const auto mk = markets::gamma_pair(pi2);
    const auto va = barycentre_density(mk.insurers, BarycentreKind::arithmetic);
    const auto vg = barycentre_density(mk.insurers, BarycentreKind::geometric);
    for (double z = 0.0; z <= 30.0; z += 0.1) EXPECT_GE(va(z) * (1 + 1e-14), vg(z)) << z;
    double lin = 0.0;
    for (const auto& i : mk.insurers) lin += i.weight * i.claim_intensity;
    EXPECT_DOUBLE_EQ(total_intensity(va), lin);
  }
}

TEST(Barycentre, SupportMismatchGivesZero) {
  warnings_enabled() = false;
  std::vector<InsurerSpec> ins{
      markets::insurer(0.5, 1.0, SeverityModel::tabulated({1, 2, 3}, {0.5, 0.4, 0.2}), 0.5),
      markets::insurer(0.5, 1.0, SeverityModel::exponential(1.0), 0.5)};
  const auto vg = barycentre_density(ins, BarycentreKind::geometric);
  EXPECT_EQ(vg(0.5), 0.0);
  EXPECT_GT(vg(1.5), 0.0);
  warnings_enabled() = true;
}

TEST(Barycentre, WeightsMustSumToOne) {
  auto mk = markets::gamma_pair(0.5);
  mk.insurers[0].weight = 0.3;
  EXPECT_THROW(barycentre_density(mk.insurers, BarycentreKind::geometric), ValidationError);
}

TEST(KlRate, Anchors) {
  const auto ins = markets::insurer(0.5, 2.0, SeverityModel::exponential(1.0), 1.0);
  const auto v = CompensatorField::of_insurer(ins);
  EXPECT_NEAR(kl_rate(v, v), 0.0, 1e-14);
  const CompensatorField twice([v](double z) { return 2.0 * v(z); });
  EXPECT_NEAR(kl_rate(twice, v), 2.0 * (2.0 * std::log(2.0) - 1.0), 1e-9);
}

TEST(KlRate, GammaBarycentreAgainstInsurerOne) {
  const auto mk = markets::gamma_pair(0.5);
  const auto vg = barycentre_density(mk.insurers, BarycentreKind::geometric);
  const auto v1 = CompensatorField::of_insurer(mk.insurers[0]);
  numerics::QuadratureConfig cfg;
  cfg.abs_tol = cfg.rel_tol = 1e-12;
  // mpmath quadrature at 30 digits
  EXPECT_NEAR(kl_rate(vg, v1, cfg), 0.132431829738677910, 1e-8);
}

TEST(KlRate, GibbsOnPerturbations) {
  const auto ins = markets::insurer(0.5, 2.0, SeverityModel::gamma(2.0, 0.8), 1.0);
  const auto v = CompensatorField::of_insurer(ins);
  for (double amp : {1e-3, 0.05, 0.3, 0.9}) {
    for (double freq : {0.5, 2.0, 7.0}) {
      const CompensatorField p([=](double z) { return v(z) * (1.0 + amp * std::sin(freq * z)); });
      EXPECT_GT(kl_rate(p, v), 0.0) << amp << " " << freq;
    }
  }
}

TEST(KlRate, AbsoluteContinuity) {
  const CompensatorField ref([](double z) { return z < 1.0 ? 0.0 : std::exp(-z); }, {1.0});
  const CompensatorField cand([](double z) { return std::exp(-z); });
  EXPECT_THROW(kl_rate(cand, ref), Divergent);
}

TEST(TotalIntensity, Anchors) {
  const auto ins = markets::insurer(0.5, 2.5, SeverityModel::exponential(1.25), 1.0);
  EXPECT_DOUBLE_EQ(total_intensity(CompensatorField::of_insurer(ins)), 2.5);
  const CompensatorField f([](double z) { return 2.0 * std::exp(-0.9 * z); });
  EXPECT_NEAR(total_intensity(f), 2.0 / 0.9, 1e-9);
  EXPECT_THROW(total_intensity(f.with_integrability(false)), Divergent);
}

TEST(InsurerSpec, Validation) {
  auto ins = markets::insurer(0.5, 2.0, SeverityModel::exponential(1.0), 1.0, 0.2);
  EXPECT_NO_THROW(ins.validate());
  EXPECT_NEAR(ins.premium_rate(), 2.4, 1e-15);
  ins.risk_aversion = 0.0;
  EXPECT_THROW(ins.validate(), ValidationError);
}
