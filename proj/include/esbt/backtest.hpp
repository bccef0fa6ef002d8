#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "esbt/estimators.hpp"
#include "esbt/secured.hpp"

namespace esbt {

/// A backtest statistic in exact form: count / n. `count` is the nominal
/// value (n*T_n or n*G_n).
struct Fraction {
  std::size_t count = 0;
  std::size_t n = 0;

  double value() const { return n == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(n); }
  friend bool operator==(const Fraction&, const Fraction&) = default;
};

/// Exception rate: number of strictly negative entries.
Fraction t_stat(const SecuredSample& y);

/// Largest k such that the k smallest entries sum to a strictly negative total.
Fraction g_stat(const SecuredSample& y);

/// Smallest level on the k/n grid at which the historical VaR of y is <= 0
/// (1 if none). Evaluates the VaR step function at (k + 0.5)/n.
Fraction dual_t(const SecuredSample& y);

/// Same scan with the historical ES estimator.
Fraction dual_g(const SecuredSample& y);

/// Test 2 style statistic, sign-flipped so that positive means risk is
/// underestimated: returns -( mean_i[ r_i 1{r_i + var_i < 0} / (alpha es_i) ] + 1 ).
/// No breaches gives -1. A breach day with es_i <= 0 is a domain error.
double z_stat(std::span<const double> realized, std::span<const double> var_reserve,
              std::span<const double> es_reserve, RiskLevel alpha);

enum class Zone { green, yellow, red };
enum class ZoneMetric { var, es, z };

std::string to_string(Zone z);
Zone zone_from_string(const std::string& s);

/// value < green_upper is green, value < yellow_upper is yellow, else red.
struct ZoneThresholds {
  ZoneMetric metric;
  double green_upper;
  double yellow_upper;

  ZoneThresholds(ZoneMetric m, double green, double yellow);

  static ZoneThresholds var_default() { return {ZoneMetric::var, 5, 10}; }
  static ZoneThresholds es_default() { return {ZoneMetric::es, 12, 25}; }
  static ZoneThresholds z_default() { return {ZoneMetric::z, 0.7, 1.8}; }
};

Zone classify(double value, const ZoneThresholds& th);

struct BacktestResult {
  std::size_t n = 0;
  double alpha = 0.0;
  std::string estimator;
  bool normalized = false;
  std::size_t nominal_t = 0;
  std::size_t nominal_g = 0;
  std::optional<double> z;
  Zone zone_var = Zone::green;
  Zone zone_es = Zone::green;
  std::optional<Zone> zone_z;
};

/// Computes both statistics on y and classifies them with default thresholds.
BacktestResult evaluate(const SecuredSample& y, const std::string& estimator, double alpha);

nlohmann::json to_json(const BacktestResult& r);
BacktestResult backtest_result_from_json(const nlohmann::json& j);

}  // namespace esbt
