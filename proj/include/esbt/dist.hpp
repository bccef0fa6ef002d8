#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "esbt/rng.hpp"

namespace esbt {

struct Normal {
  double mean = 0.0;
  double sd = 1.0;
};

/// Location-scale Student-t, unstandardized: scale 1 means the textbook t_nu.
struct StudentT {
  double dof = 5.0;
  double location = 0.0;
  double scale = 1.0;
};

/// Fernandez-Steel skewed Student-t. skew == 1 recovers StudentT; skew > 1
/// puts more mass on the right.
struct SkewT {
  double dof = 5.0;
  double skew = 1.0;
  double location = 0.0;
  double scale = 1.0;
};

using DistSpec = std::variant<Normal, StudentT, SkewT>;

/// Throws std::domain_error if parameters are outside their domain
/// (sd, scale > 0; dof > 2; skew > 0).
void validate(const DistSpec& d);

double pdf(const DistSpec& d, double x);
/// Closed-form log density; cheaper than log(pdf) inside likelihood loops.
double log_pdf(const DistSpec& d, double x);
double cdf(const DistSpec& d, double x);
/// p must lie in (0, 1); throws std::domain_error otherwise.
double quantile(const DistSpec& d, double p);

double mean(const DistSpec& d);
double variance(const DistSpec& d);

double draw(const DistSpec& d, RngStream& rng);
std::vector<double> sample(const DistSpec& d, std::size_t n, RngStream& rng);

/// Skew-t with location/scale chosen so the law has mean 0 and variance 1.
SkewT standardized_skew_t(double dof, double skew);

std::string describe(const DistSpec& d);

/// Named presets used by the CLI: normal, t3, t5, t10, t15.
DistSpec dist_preset(const std::string& name);

nlohmann::json to_json(const DistSpec& d);
/// {"kind": "normal"|"student_t"|"skew_t", ...}. Validates the result.
DistSpec dist_from_json(const nlohmann::json& j);

}  // namespace esbt
