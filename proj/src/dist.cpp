#include "esbt/dist.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

namespace esbt {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

boost::math::students_t_distribution<double> std_t(double dof) {
  return boost::math::students_t_distribution<double>(dof);
}

// Standard (location 0, scale 1) skew-t pieces.
double skew_t_pdf_std(double dof, double xi, double z) {
  const auto t = std_t(dof);
  const double norm = 2.0 / (xi + 1.0 / xi);
  return z >= 0.0 ? norm * boost::math::pdf(t, z / xi) : norm * boost::math::pdf(t, z * xi);
}

double skew_t_cdf_std(double dof, double xi, double z) {
  const auto t = std_t(dof);
  const double xi2 = xi * xi;
  if (z < 0.0) return 2.0 / (1.0 + xi2) * boost::math::cdf(t, z * xi);
  return 1.0 / (1.0 + xi2) + 2.0 * xi2 / (1.0 + xi2) * (boost::math::cdf(t, z / xi) - 0.5);
}

double skew_t_quantile_std(double dof, double xi, double p) {
  const auto t = std_t(dof);
  const double xi2 = xi * xi;
  const double split = 1.0 / (1.0 + xi2);
  if (p < split) return boost::math::quantile(t, p * (1.0 + xi2) / 2.0) / xi;
  const double u = 0.5 + (p - split) * (1.0 + xi2) / (2.0 * xi2);
  return xi * boost::math::quantile(t, std::min(u, std::nextafter(1.0, 0.0)));
}

// E|T| for the standard t with dof > 1.
double abs_t_mean(double dof) {
  return 2.0 * std::sqrt(dof) * boost::math::tgamma_ratio((dof + 1.0) / 2.0, dof / 2.0) /
         (std::sqrt(std::numbers::pi) * (dof - 1.0));
}

double skew_t_mean_std(double dof, double xi) { return abs_t_mean(dof) * (xi - 1.0 / xi); }

double skew_t_var_std(double dof, double xi) {
  const double second = dof / (dof - 2.0) * (xi * xi * xi + 1.0 / (xi * xi * xi)) / (xi + 1.0 / xi);
  const double m = skew_t_mean_std(dof, xi);
  return second - m * m;
}

double std_t_draw(double dof, RngStream& rng) {
  const double z = rng.normal();
  const double chi2 = 2.0 * rng.gamma(dof / 2.0);
  return z / std::sqrt(chi2 / dof);
}

}  // namespace

void validate(const DistSpec& d) {
  std::visit(Overloaded{
                 [](const Normal& n) {
                   if (!(n.sd > 0.0) || !std::isfinite(n.mean))
                     throw std::domain_error("normal: sd must be positive");
                 },
                 [](const StudentT& t) {
                   if (!(t.dof > 2.0)) throw std::domain_error("student_t: dof must exceed 2");
                   if (!(t.scale > 0.0)) throw std::domain_error("student_t: scale must be positive");
                 },
                 [](const SkewT& s) {
                   if (!(s.dof > 2.0)) throw std::domain_error("skew_t: dof must exceed 2");
                   if (!(s.skew > 0.0)) throw std::domain_error("skew_t: skew must be positive");
                   if (!(s.scale > 0.0)) throw std::domain_error("skew_t: scale must be positive");
                 },
             },
             d);
}

double pdf(const DistSpec& d, double x) {
  return std::visit(
      Overloaded{
          [x](const Normal& n) {
            return boost::math::pdf(boost::math::normal_distribution<double>(n.mean, n.sd), x);
          },
          [x](const StudentT& t) {
            return boost::math::pdf(std_t(t.dof), (x - t.location) / t.scale) / t.scale;
          },
          [x](const SkewT& s) {
            return skew_t_pdf_std(s.dof, s.skew, (x - s.location) / s.scale) / s.scale;
          },
      },
      d);
}

double log_pdf(const DistSpec& d, double x) {
  auto log_t = [](double dof, double z) {
    return std::lgamma((dof + 1.0) / 2.0) - std::lgamma(dof / 2.0) - 0.5 * std::log(dof * std::numbers::pi) -
           (dof + 1.0) / 2.0 * std::log1p(z * z / dof);
  };
  return std::visit(
      Overloaded{
          [x](const Normal& n) {
            const double z = (x - n.mean) / n.sd;
            return -0.5 * z * z - std::log(n.sd) - 0.5 * std::log(2.0 * std::numbers::pi);
          },
          [&](const StudentT& t) { return log_t(t.dof, (x - t.location) / t.scale) - std::log(t.scale); },
          [&](const SkewT& s) {
            const double z = (x - s.location) / s.scale;
            const double arg = z >= 0.0 ? z / s.skew : z * s.skew;
            return std::log(2.0 / (s.skew + 1.0 / s.skew)) + log_t(s.dof, arg) - std::log(s.scale);
          },
      },
      d);
}

double cdf(const DistSpec& d, double x) {
  if (std::isinf(x)) return x < 0 ? 0.0 : 1.0;
  return std::visit(
      Overloaded{
          [x](const Normal& n) {
            return boost::math::cdf(boost::math::normal_distribution<double>(n.mean, n.sd), x);
          },
          [x](const StudentT& t) { return boost::math::cdf(std_t(t.dof), (x - t.location) / t.scale); },
          [x](const SkewT& s) { return skew_t_cdf_std(s.dof, s.skew, (x - s.location) / s.scale); },
      },
      d);
}

double quantile(const DistSpec& d, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error(fmt::format("quantile: p = {} outside (0,1)", p));
  return std::visit(
      Overloaded{
          [p](const Normal& n) {
            return boost::math::quantile(boost::math::normal_distribution<double>(n.mean, n.sd), p);
          },
          [p](const StudentT& t) { return t.location + t.scale * boost::math::quantile(std_t(t.dof), p); },
          [p](const SkewT& s) { return s.location + s.scale * skew_t_quantile_std(s.dof, s.skew, p); },
      },
      d);
}

double mean(const DistSpec& d) {
  return std::visit(Overloaded{
                        [](const Normal& n) { return n.mean; },
                        [](const StudentT& t) { return t.location; },
                        [](const SkewT& s) { return s.location + s.scale * skew_t_mean_std(s.dof, s.skew); },
                    },
                    d);
}

double variance(const DistSpec& d) {
  return std::visit(Overloaded{
                        [](const Normal& n) { return n.sd * n.sd; },
                        [](const StudentT& t) { return t.scale * t.scale * t.dof / (t.dof - 2.0); },
                        [](const SkewT& s) { return s.scale * s.scale * skew_t_var_std(s.dof, s.skew); },
                    },
                    d);
}

double draw(const DistSpec& d, RngStream& rng) {
  return std::visit(Overloaded{
                        [&rng](const Normal& n) { return n.mean + n.sd * rng.normal(); },
                        [&rng](const StudentT& t) { return t.location + t.scale * std_t_draw(t.dof, rng); },
                        [&rng](const SkewT& s) {
                          const double xi2 = s.skew * s.skew;
                          const double mag = std::abs(std_t_draw(s.dof, rng));
                          const double u = rng.uniform();
                          const double z = u < xi2 / (1.0 + xi2) ? mag * s.skew : -mag / s.skew;
                          return s.location + s.scale * z;
                        },
                    },
                    d);
}

std::vector<double> sample(const DistSpec& d, std::size_t n, RngStream& rng) {
  std::vector<double> out(n);
  for (auto& v : out) v = draw(d, rng);
  return out;
}

SkewT standardized_skew_t(double dof, double skew) {
  if (!(dof > 2.0) || !(skew > 0.0)) throw std::domain_error("standardized_skew_t: need dof > 2, skew > 0");
  const double sd = std::sqrt(skew_t_var_std(dof, skew));
  return SkewT{dof, skew, -skew_t_mean_std(dof, skew) / sd, 1.0 / sd};
}

std::string describe(const DistSpec& d) {
  return std::visit(Overloaded{
                        [](const Normal& n) { return fmt::format("normal(mean={}, sd={})", n.mean, n.sd); },
                        [](const StudentT& t) {
                          return fmt::format("student_t(dof={}, location={}, scale={}; raw, not unit-variance)",
                                             t.dof, t.location, t.scale);
                        },
                        [](const SkewT& s) {
                          return fmt::format("skew_t(dof={}, skew={}, location={}, scale={})", s.dof, s.skew,
                                             s.location, s.scale);
                        },
                    },
                    d);
}

DistSpec dist_preset(const std::string& name) {
  if (name == "normal") return Normal{};
  if (name == "t3") return StudentT{3.0};
  if (name == "t5") return StudentT{5.0};
  if (name == "t10") return StudentT{10.0};
  if (name == "t15") return StudentT{15.0};
  throw std::domain_error("unknown distribution preset: " + name);
}

nlohmann::json to_json(const DistSpec& d) {
  return std::visit(Overloaded{
                        [](const Normal& n) { return nlohmann::json{{"kind", "normal"}, {"mean", n.mean}, {"sd", n.sd}}; },
                        [](const StudentT& t) {
                          return nlohmann::json{
                              {"kind", "student_t"}, {"dof", t.dof}, {"location", t.location}, {"scale", t.scale}};
                        },
                        [](const SkewT& s) {
                          return nlohmann::json{{"kind", "skew_t"},      {"dof", s.dof},    {"skew", s.skew},
                                                {"location", s.location}, {"scale", s.scale}};
                        },
                    },
                    d);
}

DistSpec dist_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw std::domain_error("distribution JSON needs a \"kind\" field");
  const auto kind = j.at("kind").get<std::string>();
  DistSpec d;
  try {
    if (kind == "normal") {
      d = Normal{j.value("mean", 0.0), j.value("sd", 1.0)};
    } else if (kind == "student_t") {
      d = StudentT{j.at("dof").get<double>(), j.value("location", 0.0), j.value("scale", 1.0)};
    } else if (kind == "skew_t") {
      d = SkewT{j.at("dof").get<double>(), j.value("skew", 1.0), j.value("location", 0.0), j.value("scale", 1.0)};
    } else {
      throw std::domain_error("unknown distribution kind: " + kind);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::domain_error(std::string("bad distribution JSON: ") + e.what());
  }
  validate(d);
  return d;
}

}  // namespace esbt
