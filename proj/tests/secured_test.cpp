#include <gtest/gtest.h>

#include <vector>

#include "esbt/rng.hpp"
#include "esbt/secured.hpp"

using namespace esbt;

TEST(BuildSecured, ComponentwiseSum) {
  std::vector<double> pnl{-1, 2}, res{1, 1};
  auto y = build_secured(pnl, res);
  EXPECT_EQ(y.values, (std::vector<double>{0, 3}));
  EXPECT_FALSE(y.normalized);
}

TEST(BuildSecured, ExactOffsetGivesZero) {
  std::vector<double> pnl{-0.3, 0.7, 1e-3}, res{0.3, -0.7, -1e-3};
  for (double y : build_secured(pnl, res).values) EXPECT_EQ(y, 0.0);
}

TEST(BuildSecured, Errors) {
  std::vector<double> a{1, 2}, b{1};
  EXPECT_THROW(build_secured(a, b), std::domain_error);
  EXPECT_THROW(build_normalized(a, b), std::domain_error);
}

TEST(BuildNormalized, Examples) {
  std::vector<double> p1{-2}, r1{2};
  EXPECT_EQ(build_normalized(p1, r1).values, std::vector<double>{0});
  std::vector<double> p2{-1, 3}, r2{2, 2};
  auto y = build_normalized(p2, r2);
  EXPECT_EQ(y.values, (std::vector<double>{0.5, 2.5}));
  EXPECT_TRUE(y.normalized);
}

TEST(BuildNormalized, NonPositiveReserveNamesIndex) {
  std::vector<double> pnl{1, 1, 1}, res{1, 0, -1};
  try {
    build_normalized(pnl, res);
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos) << e.what();
  }
}

TEST(BuildNormalized, PreservesSignWithPositiveReserves) {
  RngStream r(1, 0);
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> pnl{r.normal() * 3}, res{r.uniform() * 2};
    double raw = build_secured(pnl, res).values[0];
    double norm = build_normalized(pnl, res).values[0];
    EXPECT_EQ(raw < 0, norm < 0) << pnl[0] << " " << res[0];
  }
}
