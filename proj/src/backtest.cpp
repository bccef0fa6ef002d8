#include "esbt/backtest.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

namespace esbt {

namespace {

void require_nonempty(const SecuredSample& y, const char* who) {
  if (y.values.empty()) throw std::domain_error(std::string(who) + ": empty sample");
}

}  // namespace

Fraction t_stat(const SecuredSample& y) {
  require_nonempty(y, "t_stat");
  const auto breaches = std::count_if(y.values.begin(), y.values.end(), [](double v) { return v < 0.0; });
  return {static_cast<std::size_t>(breaches), y.size()};
}

Fraction g_stat(const SecuredSample& y) {
  require_nonempty(y, "g_stat");
  std::vector<double> sorted = y.values;
  std::sort(sorted.begin(), sorted.end());
  // Partial sums of an ascending sequence are convex in k and start at 0, so
  // the negative ones form a prefix; counting them gives the largest k.
  double partial = 0.0;
  std::size_t count = 0;
  for (double v : sorted) {
    partial += v;
    if (partial < 0.0) ++count;
  }
  return {count, y.size()};
}

namespace {

template <class Estimator>
Fraction dual_scan(const SecuredSample& y, Estimator risk) {
  require_nonempty(y, "dual statistic");
  const std::size_t n = y.size();
  for (std::size_t k = 0; k < n; ++k) {
    const RiskLevel level((static_cast<double>(k) + 0.5) / static_cast<double>(n));
    if (risk(y.values, level) <= 0.0) return {k, n};
  }
  return {n, n};
}

}  // namespace

Fraction dual_t(const SecuredSample& y) {
  return dual_scan(y, [](std::span<const double> v, RiskLevel a) { return var_empirical(v, a); });
}

Fraction dual_g(const SecuredSample& y) {
  return dual_scan(y, [](std::span<const double> v, RiskLevel a) { return es_empirical(v, a); });
}

double z_stat(std::span<const double> realized, std::span<const double> var_reserve,
              std::span<const double> es_reserve, RiskLevel alpha) {
  if (realized.size() != var_reserve.size() || realized.size() != es_reserve.size())
    throw std::domain_error("z_stat: input lengths differ");
  if (realized.empty()) throw std::domain_error("z_stat: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < realized.size(); ++i) {
    if (realized[i] + var_reserve[i] < 0.0) {
      if (!(es_reserve[i] > 0.0))
        throw std::domain_error(
            fmt::format("z_stat: breach at index {} with non-positive ES reserve {}", i, es_reserve[i]));
      sum += realized[i] / (alpha.value() * es_reserve[i]);
    }
  }
  const double printed = sum / static_cast<double>(realized.size()) + 1.0;
  return -printed;
}

std::string to_string(Zone z) {
  switch (z) {
    case Zone::green: return "green";
    case Zone::yellow: return "yellow";
    case Zone::red: return "red";
  }
  return "?";
}

Zone zone_from_string(const std::string& s) {
  if (s == "green") return Zone::green;
  if (s == "yellow") return Zone::yellow;
  if (s == "red") return Zone::red;
  throw std::domain_error("unknown zone: " + s);
}

ZoneThresholds::ZoneThresholds(ZoneMetric m, double green, double yellow)
    : metric(m), green_upper(green), yellow_upper(yellow) {
  if (!(green < yellow)) throw std::domain_error("zone thresholds must satisfy green_upper < yellow_upper");
}

Zone classify(double value, const ZoneThresholds& th) {
  if (value < th.green_upper) return Zone::green;
  if (value < th.yellow_upper) return Zone::yellow;
  return Zone::red;
}

BacktestResult evaluate(const SecuredSample& y, const std::string& estimator, double alpha) {
  BacktestResult r;
  r.n = y.size();
  r.alpha = alpha;
  r.estimator = estimator;
  r.normalized = y.normalized;
  r.nominal_t = t_stat(y).count;
  r.nominal_g = g_stat(y).count;
  r.zone_var = classify(static_cast<double>(r.nominal_t), ZoneThresholds::var_default());
  r.zone_es = classify(static_cast<double>(r.nominal_g), ZoneThresholds::es_default());
  return r;
}

nlohmann::json to_json(const BacktestResult& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["alpha"] = r.alpha;
  j["estimator"] = r.estimator;
  j["normalized"] = r.normalized;
  j["nominal_t"] = r.nominal_t;
  j["nominal_g"] = r.nominal_g;
  j["z"] = r.z ? nlohmann::json(*r.z) : nlohmann::json(nullptr);
  j["zone_var"] = to_string(r.zone_var);
  j["zone_es"] = to_string(r.zone_es);
  j["zone_z"] = r.zone_z ? nlohmann::json(to_string(*r.zone_z)) : nlohmann::json(nullptr);
  return j;
}

BacktestResult backtest_result_from_json(const nlohmann::json& j) {
  BacktestResult r;
  try {
    r.n = j.at("n").get<std::size_t>();
    r.alpha = j.at("alpha").get<double>();
    r.estimator = j.at("estimator").get<std::string>();
    r.normalized = j.at("normalized").get<bool>();
    r.nominal_t = j.at("nominal_t").get<std::size_t>();
    r.nominal_g = j.at("nominal_g").get<std::size_t>();
    if (!j.at("z").is_null()) r.z = j.at("z").get<double>();
    r.zone_var = zone_from_string(j.at("zone_var").get<std::string>());
    r.zone_es = zone_from_string(j.at("zone_es").get<std::string>());
    if (!j.at("zone_z").is_null()) r.zone_z = zone_from_string(j.at("zone_z").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw std::domain_error(std::string("bad backtest result JSON: ") + e.what());
  }
  return r;
}

}  // namespace esbt
