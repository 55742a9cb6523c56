#include <gtest/gtest.h>

#include <cmath>

#include "markets.hpp"
#include "stackre/insurer.hpp"

using namespace stackre;
using namespace stackre::insurer;
using contracts::Contract;
using measures::SeverityModel;

TEST(BestResponse, XlClosedForm) {
  const auto e = markets::insurer(0.5, 2.0, SeverityModel::exponential(1.0), 1.0);
  EXPECT_NEAR(best_response(e, Contract::excess_of_loss(), 1.0).control, 1.3862943611198906,
              1e-14);
  EXPECT_EQ(best_response(e, Contract::excess_of_loss(), 0.0).control, 0.0);
}

TEST(BestResponse, ProportionalCorner) {
  const auto g = markets::insurer(0.5, 2.0, SeverityModel::gamma(1.5, 1.0), 1.0);
  const double c = std::pow(2.0, 2.5) - 1.0;  // 1 + c = 1 / (1 - 0.5)^{2.5}
  EXPECT_NEAR(best_response(g, Contract::proportional(), c).control, 1.0, 1e-9);
  const auto above = best_response(g, Contract::proportional(), c + 0.5);
  EXPECT_EQ(above.control, 1.0);
  EXPECT_TRUE(above.corner);
}

TEST(BestResponse, InteriorResidual) {
  const auto g = markets::insurer(0.5, 2.0, SeverityModel::gamma(1.5, 1.0), 1.0);
  for (double c : {0.1, 0.7, 1.7, 3.0}) {
    const auto r = best_response(g, Contract::proportional(), c);
    EXPECT_LE(std::abs(first_order_residual(g, Contract::proportional(), c, r.control)), 1e-10);
    EXPECT_TRUE(r.second_order_ok);
  }
}

TEST(BestResponse, MonotoneInLoading) {
  const std::vector<measures::InsurerSpec> people{
      markets::insurer(0.5, 2.0, SeverityModel::gamma(1.5, 1.0), 1.0),
      markets::insurer(1.2, 1.0, SeverityModel::exponential(0.5), 1.0),
      markets::insurer(0.8, 1.0, SeverityModel::tabulated({0, 0.5, 1, 2}, {0.6, 0.8, 0.4, 0.1}), 1.0)};
  for (const auto& ins : people) {
    for (const auto& k : {Contract::proportional(), Contract::excess_of_loss(), Contract::capped(1.0)}) {
      double prev = -1.0;
      for (double c = 0.0; c <= 3.0 + 1e-12; c += 0.25) {
        const double a = best_response(ins, k, c).control;
        EXPECT_GE(a, prev - 1e-12);
        prev = a;
      }
    }
  }
}

TEST(BestResponse, CappedEqualsUncapped) {
  const auto e = markets::insurer(0.7, 2.0, SeverityModel::exponential(1.2), 1.0);
  for (double c : {0.0, 0.3, 1.0, 2.5}) {
    EXPECT_EQ(best_response(e, Contract::capped(0.8), c).control,
              best_response(e, Contract::excess_of_loss(), c).control);
  }
}

TEST(BestResponse, NegativeLoadingRejected) {
  const auto e = markets::insurer(0.5, 2.0, SeverityModel::exponential(1.0), 1.0);
  EXPECT_THROW(best_response(e, Contract::excess_of_loss(), -0.1), OutOfDomain);
}

TEST(SecondOrder, PiecewiseLinearRetentions) {
  const auto g = markets::insurer(0.5, 2.0, SeverityModel::gamma(1.5, 1.0), 1.0);
  for (double c : {0.0, 1.0, 4.0}) {
    for (double a : {0.1, 0.5, 1.0}) {
      EXPECT_TRUE(second_order_check(g, Contract::excess_of_loss(), c, a));
      EXPECT_TRUE(second_order_check(g, Contract::proportional(), c, a));
      EXPECT_TRUE(second_order_check(g, Contract::capped(2.0), c, a));
    }
  }
}

TEST(ResponseSlope, MatchesFiniteDifference) {
  const auto g = markets::insurer(0.5, 2.0, SeverityModel::gamma(1.5, 1.0), 1.0);
  for (double c : {0.5, 1.5}) {
    const double h = 1e-5;
    const double fd = (best_response(g, Contract::proportional(), c + h).control -
                       best_response(g, Contract::proportional(), c - h).control) /
                      (2 * h);
    const double a = best_response(g, Contract::proportional(), c).control;
    EXPECT_NEAR(response_slope(g, Contract::proportional(), c, a), fd, 1e-6);
  }
}
