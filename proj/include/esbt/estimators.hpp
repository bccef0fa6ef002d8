#pragma once

#include <cstddef>
#include <span>

#include "esbt/dist.hpp"

namespace esbt {

/// Tail probability level. Restricted to the open interval (0, 1): at 1 the
/// order-statistic index floor(n) + 1 runs past the sample.
class RiskLevel {
public:
  explicit RiskLevel(double alpha);
  double value() const { return alpha_; }

private:
  double alpha_;
};

enum class RiskMetric { var, es };

struct SampleMoments {
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator
  std::size_t n = 0;
};

/// Zero-based index of the order statistic used by the historical
/// estimators, i.e. floor(n * alpha).
std::size_t tail_index(std::size_t n, RiskLevel alpha);

/// Historical VaR: minus the (floor(n*alpha) + 1)-th smallest value.
double var_empirical(std::span<const double> x, RiskLevel alpha);

/// Historical ES: minus the mean of all x_i with x_i + VaR <= 0. Ties at the
/// boundary all enter the average.
double es_empirical(std::span<const double> x, RiskLevel alpha);

SampleMoments moments(std::span<const double> x);

double var_normal(const SampleMoments& m, RiskLevel alpha);
double es_normal(const SampleMoments& m, RiskLevel alpha);

/// Analytic VaR/ES of a known law. Normal and Student-t use closed forms,
/// skew-t integrates the tail numerically.
double true_risk(const DistSpec& d, RiskLevel alpha, RiskMetric metric);

/// ES by adaptive Gauss-Kronrod on (-inf, q], for any supported law.
double true_es_quadrature(const DistSpec& d, RiskLevel alpha);

}  // namespace esbt
