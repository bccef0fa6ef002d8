#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "esbt/backtest.hpp"
#include "esbt/dist.hpp"
#include "esbt/rng.hpp"
#include "oracles.hpp"

using namespace esbt;

namespace {
SecuredSample ys(std::vector<double> v) { return SecuredSample{std::move(v), false}; }

std::vector<double> random_vector(RngStream& r, std::size_t n) {
  std::vector<double> y(n);
  // Mix of a shifted normal and a heavy tail so both signs show up.
  double shift = 2.0 * r.uniform() - 0.5;
  for (auto& v : y) v = shift + (r.uniform() < 0.2 ? 3.0 * r.normal() : r.normal());
  return y;
}
}  // namespace

TEST(TStat, Examples) {
  EXPECT_EQ(t_stat(ys({1, 1, 1, 1})), (Fraction{0, 4}));
  auto t = t_stat(ys({-1, 1, 1, 1}));
  EXPECT_EQ(t.count, 1u);
  EXPECT_DOUBLE_EQ(t.value(), 0.25);
  EXPECT_EQ(t_stat(ys({0, 0})).count, 0u);  // zero is not a breach
}

TEST(GStat, Examples) {
  auto g = g_stat(ys({-3, 1, 1, 3}));
  EXPECT_EQ(g.count, 3u);
  EXPECT_DOUBLE_EQ(g.value(), 0.75);
  EXPECT_EQ(g_stat(ys({-3, 1, 2, 5})).count, 2u);
  EXPECT_EQ(g_stat(ys({-5, 1})), (Fraction{2, 2}));
  EXPECT_EQ(g_stat(ys({5, -3, 2, 1})).count, 2u);
}

TEST(GStat, MatchesEnumerationOracle) {
  RngStream r(21, 0);
  for (int rep = 0; rep < 2000; ++rep) {
    auto y = random_vector(r, 1 + r.next_u32() % 40);
    EXPECT_EQ(g_stat(ys(y)).count, oracle::worst_negative_prefix(y));
  }
}

TEST(Stats, EmptySampleIsDomainError) {
  EXPECT_THROW(t_stat(ys({})), std::domain_error);
  EXPECT_THROW(g_stat(ys({})), std::domain_error);
  EXPECT_THROW(dual_t(ys({})), std::domain_error);
  EXPECT_THROW(dual_g(ys({})), std::domain_error);
}

TEST(Dual, Examples) {
  EXPECT_DOUBLE_EQ(dual_t(ys({-3, 1, 2, 5})).value(), 0.25);
  EXPECT_DOUBLE_EQ(dual_t(ys({1, 2, 3})).value(), 0.0);
  EXPECT_DOUBLE_EQ(dual_g(ys({-3, 1, 2, 5})).value(), 0.5);
  EXPECT_DOUBLE_EQ(dual_g(ys({1, 2, 3})).value(), 0.0);
  EXPECT_DOUBLE_EQ(dual_t(ys({-1, -2})).value(), 1.0);
  EXPECT_DOUBLE_EQ(dual_g(ys({-5, 1})).value(), 1.0);
}

TEST(Dual, EqualsStatisticsOnRandomVectors) {
  RngStream r(22, 0);
  for (int rep = 0; rep < 10000; ++rep) {
    auto y = ys(random_vector(r, 1 + r.next_u32() % 64));
    ASSERT_EQ(t_stat(y), dual_t(y));
    ASSERT_EQ(g_stat(y), dual_g(y));
  }
}

TEST(Stats, GDominatesT) {
  RngStream r(23, 0);
  for (int rep = 0; rep < 20000; ++rep) {
    auto y = ys(random_vector(r, 1 + r.next_u32() % 250));
    ASSERT_GE(g_stat(y).count, t_stat(y).count);
  }
}

TEST(Stats, InvariantUnderPositiveScaling) {
  RngStream r(24, 0);
  for (int rep = 0; rep < 5000; ++rep) {
    auto y = random_vector(r, 1 + r.next_u32() % 100);
    double lambda = std::exp(6.0 * r.uniform() - 3.0);
    std::vector<double> s(y);
    for (auto& v : s) v *= lambda;
    ASSERT_EQ(t_stat(ys(y)), t_stat(ys(s)));
    ASSERT_EQ(g_stat(ys(y)), g_stat(ys(s)));
  }
}

TEST(Stats, TUnchangedByNormalization) {
  RngStream r(25, 0);
  for (int rep = 0; rep < 5000; ++rep) {
    std::size_t n = 1 + r.next_u32() % 100;
    std::vector<double> pnl(n), res(n);
    for (std::size_t i = 0; i < n; ++i) {
      pnl[i] = r.normal();
      res[i] = 0.01 + 3.0 * r.uniform();
    }
    ASSERT_EQ(t_stat(build_secured(pnl, res)), t_stat(build_normalized(pnl, res)));
  }
}

TEST(TStat, NullMeanMatchesBinomial) {
  // Reserve at the true 1% VaR: n T_n ~ Binomial(250, 0.01), mean 2.5.
  const double q = -quantile(Normal{}, 0.01);
  const int runs = 20000;
  double total = 0.0;
  for (int i = 0; i < runs; ++i) {
    RngStream r(26, i);
    std::vector<double> y(250);
    for (auto& v : y) v = r.normal() + q;
    total += t_stat(ys(y)).count;
  }
  EXPECT_NEAR(total / runs, 2.5, 3.0 * std::sqrt(250 * 0.01 * 0.99 / runs));
}

TEST(ZStat, Examples) {
  std::vector<double> r{1, 2, 3}, v{1, 1, 1}, e{2, 2, 2};
  EXPECT_DOUBLE_EQ(z_stat(r, v, e, RiskLevel(0.025)), -1.0);
  std::vector<double> r1{-5}, v1{2}, e1{2};
  EXPECT_DOUBLE_EQ(z_stat(r1, v1, e1, RiskLevel(0.5)), 4.0);
  EXPECT_EQ(classify(4.0, ZoneThresholds::z_default()), Zone::red);
  EXPECT_EQ(classify(-1.0, ZoneThresholds::z_default()), Zone::green);
}

TEST(ZStat, Errors) {
  std::vector<double> r{-5, 1}, v{2, 2}, e0{0, 1}, e_ok{1, 1}, shorter{1};
  EXPECT_THROW(z_stat(r, v, e0, RiskLevel(0.025)), std::domain_error);
  EXPECT_THROW(z_stat(r, shorter, e_ok, RiskLevel(0.025)), std::domain_error);
  // Non-positive ES on a non-breach day is irrelevant.
  std::vector<double> r2{5, -5}, e2{-1, 1};
  EXPECT_NO_THROW(z_stat(r2, v, e2, RiskLevel(0.025)));
}

TEST(ZStat, NullMeanNearZero) {
  // True VaR and ES at 2.5% on N(0,1) data: E[Z_core] = 0.
  const RiskLevel a(0.025);
  const double var = true_risk(Normal{}, a, RiskMetric::var), es = true_risk(Normal{}, a, RiskMetric::es);
  const int runs = 20000;
  std::vector<double> vr(250, var), er(250, es);
  double total = 0.0, total2 = 0.0;
  for (int i = 0; i < runs; ++i) {
    RngStream r(27, i);
    std::vector<double> x(250);
    for (auto& v : x) v = r.normal();
    double z = z_stat(x, vr, er, a);
    total += z;
    total2 += z * z;
  }
  double m = total / runs, sd = std::sqrt(total2 / runs - m * m);
  EXPECT_NEAR(m, 0.0, 4.0 * sd / std::sqrt(double(runs)));
}

TEST(Classify, ThresholdExamples) {
  auto var = ZoneThresholds::var_default(), es = ZoneThresholds::es_default();
  EXPECT_EQ(classify(4, var), Zone::green);
  EXPECT_EQ(classify(5, var), Zone::yellow);
  EXPECT_EQ(classify(9, var), Zone::yellow);
  EXPECT_EQ(classify(10, var), Zone::red);
  EXPECT_EQ(classify(11, es), Zone::green);
  EXPECT_EQ(classify(12, es), Zone::yellow);
  EXPECT_EQ(classify(24, es), Zone::yellow);
  EXPECT_EQ(classify(25, es), Zone::red);
}

TEST(Classify, MonotoneAndValidated) {
  auto th = ZoneThresholds::z_default();
  Zone prev = Zone::green;
  for (double v = -2.0; v <= 3.0; v += 0.01) {
    Zone z = classify(v, th);
    EXPECT_GE(static_cast<int>(z), static_cast<int>(prev));
    prev = z;
  }
  EXPECT_THROW(ZoneThresholds(ZoneMetric::var, 5, 5), std::domain_error);
  EXPECT_THROW(ZoneThresholds(ZoneMetric::var, 10, 5), std::domain_error);
}

TEST(Zone, StringRoundTrip) {
  for (Zone z : {Zone::green, Zone::yellow, Zone::red}) EXPECT_EQ(zone_from_string(to_string(z)), z);
  EXPECT_THROW(zone_from_string("amber"), std::domain_error);
}

TEST(Evaluate, ClassifiesBothStatistics) {
  std::vector<double> y(250, 1.0);
  for (int i = 0; i < 6; ++i) y[i] = -1.0;
  auto res = evaluate(ys(y), "var-hist", 0.01);
  EXPECT_EQ(res.n, 250u);
  EXPECT_EQ(res.nominal_t, 6u);
  EXPECT_EQ(res.nominal_g, 11u);  // -6 + 5 * 1 < 0, -6 + 6 = 0 is not
  EXPECT_EQ(res.zone_var, Zone::yellow);
  EXPECT_EQ(res.zone_es, Zone::green);
  EXPECT_FALSE(res.z.has_value());
}

TEST(Evaluate, JsonHasExactlyTheRequiredFields) {
  std::vector<double> y{-1, 2, 3};
  auto res = evaluate(ys(y), "es-hist", 0.025);
  auto j = to_json(res);
  std::set<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.insert(it.key());
  EXPECT_EQ(keys, (std::set<std::string>{"n", "alpha", "estimator", "normalized", "nominal_t", "nominal_g", "z",
                                         "zone_var", "zone_es", "zone_z"}));
  EXPECT_TRUE(j["z"].is_null());
  EXPECT_TRUE(j["zone_z"].is_null());
  res.z = 0.9;
  res.zone_z = Zone::yellow;
  auto back = backtest_result_from_json(to_json(res));
  EXPECT_EQ(to_json(back), to_json(res));
}
