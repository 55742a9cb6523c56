#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "markets.hpp"
#include "stackre/contracts.hpp"

using namespace stackre;
using namespace stackre::contracts;
using markets::insurer;
using measures::SeverityModel;

TEST(Retention, Anchors) {
  EXPECT_DOUBLE_EQ(retention(Contract::proportional(), 3.0, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(retention(Contract::excess_of_loss(), 3.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(retention(Contract::capped(2.0), 5.0, 1.0), 3.0);
}

TEST(Retention, Derivatives) {
  EXPECT_DOUBLE_EQ(retention(Contract::proportional(), 3.0, 0.5, RetentionQuery::d_da), 3.0);
  EXPECT_DOUBLE_EQ(retention(Contract::excess_of_loss(), 3.0, 1.0, RetentionQuery::d_da), 1.0);
  EXPECT_DOUBLE_EQ(retention(Contract::excess_of_loss(), 0.5, 1.0, RetentionQuery::d_da), 0.0);
  // Left-continuous indicators at the kinks.
  EXPECT_DOUBLE_EQ(retention(Contract::excess_of_loss(), 1.0, 1.0, RetentionQuery::d_da), 1.0);
  EXPECT_DOUBLE_EQ(retention(Contract::capped(2.0), 3.0, 1.0, RetentionQuery::d_da), 1.0);
  EXPECT_DOUBLE_EQ(retention(Contract::capped(2.0), 3.1, 1.0, RetentionQuery::d_da), 0.0);
}

TEST(Retention, ControlDomain) {
  EXPECT_THROW(retention(Contract::proportional(), 1.0, 1.5), ControlOutOfDomain);
  EXPECT_THROW(retention(Contract::excess_of_loss(), 1.0, -0.1), ControlOutOfDomain);
  EXPECT_DOUBLE_EQ(retention(Contract::proportional(), 1.0, 0.0), kMinProportional);
  EXPECT_THROW(Contract::capped(0.0), ValidationError);
}

TEST(Retention, GridProperties) {
  const std::vector<Contract> kinds{Contract::proportional(), Contract::excess_of_loss(),
                                    Contract::capped(1.5)};
  for (const auto& c : kinds) {
    for (double a = 0.05; a <= 1.0; a += 0.05) {
      for (double z = 0.0; z <= 6.0; z += 0.05) {
        const double r = retention(c, z, a);
        EXPECT_GE(z - r, -1e-15);
        EXPECT_LE(z - r, z + 1e-15);
        if (z > 0) EXPECT_GT(r, 0.0);
        EXPECT_GE(retention(c, z + 0.01, a), r - 1e-15);
        EXPECT_GE(retention(c, z, std::min(1.0, a + 0.01)), r - 1e-15);
      }
    }
  }
}

TEST(Premium, Anchors) {
  const auto exp1 = insurer(0.5, 2.0, SeverityModel::exponential(1.0), 1.0);
  EXPECT_DOUBLE_EQ(premium(PremiumSide::reinsurer, exp1, Contract::proportional(), 1.0, 0.7), 0.0);
  EXPECT_NEAR(premium(PremiumSide::reinsurer, exp1, Contract::excess_of_loss(), 2 * std::log(2.0),
                      1.0),
              1.0, 1e-14);
  const auto g = insurer(0.5, 2.0, SeverityModel::gamma(1.5, 1.0), 1.0);
  EXPECT_NEAR(premium(PremiumSide::insurer, g, Contract::proportional(), 0.3, 0.2), 3.6, 1e-14);
  EXPECT_THROW(premium(PremiumSide::reinsurer, g, Contract::proportional(), 0.3, -0.1),
               ValidationError);
}

TEST(Premium, NonincreasingInRetention) {
  const auto g = insurer(0.5, 2.0, SeverityModel::gamma(1.5, 1.0), 1.0);
  for (const auto& c : {Contract::proportional(), Contract::excess_of_loss(), Contract::capped(1.0)}) {
    double prev = INFINITY;
    for (double a = 0.02; a <= 1.0; a += 0.02) {
      const double p = premium(PremiumSide::reinsurer, g, c, a, 0.5);
      EXPECT_LE(p, prev + 1e-14);
      prev = p;
    }
  }
}

TEST(Premium, CappedApproachesUncapped) {
  const auto e = insurer(0.5, 2.0, SeverityModel::exponential(1.25), 1.0);
  const double xi = 1.25;
  for (double a : {0.5, 1.5, 3.0}) {
    const double uncapped = premium(PremiumSide::reinsurer, e, Contract::excess_of_loss(), a, 1.0);
    const double capped = premium(PremiumSide::reinsurer, e, Contract::capped(40 * xi), a, 1.0);
    EXPECT_LT(std::abs(capped - uncapped) / uncapped, 1e-6);
  }
}

TEST(AggregateLoss, Anchors) {
  const std::vector<Contract> xl{Contract::excess_of_loss(), Contract::excess_of_loss()};
  const std::vector<double> a_xl{1.84, 1.56};
  EXPECT_DOUBLE_EQ(aggregate_loss(xl, a_xl, 1.0), 0.0);
  const std::vector<Contract> prop{Contract::proportional(), Contract::proportional()};
  const std::vector<double> a_prop{0.6, 0.8};
  EXPECT_NEAR(aggregate_loss(prop, a_prop, 10.0), 6.0, 1e-14);
  const std::vector<Contract> capped{Contract::capped(1.0), Contract::capped(1.0)};
  const std::vector<double> a_cap{1.8387, 1.5632};
  EXPECT_NEAR(aggregate_loss(capped, a_cap, 10.0), 2.0, 1e-14);
}

TEST(AggregateLoss, NondecreasingAndSlope) {
  const std::vector<Contract> mix{Contract::proportional(), Contract::excess_of_loss(),
                                  Contract::capped(0.5)};
  const std::vector<double> a{0.7, 1.0, 0.4};
  double prev = 0.0;
  for (double z = 0.0; z <= 10.0; z += 0.01) {
    const double l = aggregate_loss(mix, a, z);
    EXPECT_GE(l, prev - 1e-14);
    prev = l;
  }
  EXPECT_NEAR(aggregate_tail_slope(mix, a), 1.3, 1e-15);
  EXPECT_EQ(aggregate_kinks(mix, a), (std::vector<double>{0.4, 0.9, 1.0}));
}
