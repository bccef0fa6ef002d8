#include "esbt/estimators.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

namespace esbt {

RiskLevel::RiskLevel(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error(fmt::format("risk level {} outside (0,1)", alpha));
}

std::size_t tail_index(std::size_t n, RiskLevel alpha) {
  // Nudge by a few ulps so that e.g. 100 * 0.29 lands on 29, not 28.
  const double scaled = static_cast<double>(n) * alpha.value() * (1.0 + 8.0 * DBL_EPSILON);
  return std::min(static_cast<std::size_t>(std::floor(scaled)), n - 1);
}

double var_empirical(std::span<const double> x, RiskLevel alpha) {
  if (x.empty()) throw std::domain_error("var_empirical: empty sample");
  std::vector<double> work(x.begin(), x.end());
  const auto k = tail_index(work.size(), alpha);
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k), work.end());
  return -work[k];
}

double es_empirical(std::span<const double> x, RiskLevel alpha) {
  if (x.empty()) throw std::domain_error("es_empirical: empty sample");
  const double var = var_empirical(x, alpha);
  // Compensated tail sum (hi + lo is exact for desk-sized tails), then one
  // fma-corrected division: a flat tail averages to itself and shifting the
  // sample by cash moves the result by exactly one final rounding.
  double hi = 0.0, lo = 0.0;
  std::size_t count = 0;
  for (double v : x) {
    if (v + var <= 0.0) {
      const double s = hi + v;
      const double bv = s - hi;
      lo += (hi - (s - bv)) + (v - bv);
      hi = s;
      ++count;
    }
  }
  const double k = static_cast<double>(count);
  double mean = hi / k;
  mean += (std::fma(-mean, k, hi) + lo) / k;
  return -mean;
}

SampleMoments moments(std::span<const double> x) {
  if (x.size() < 2) throw std::domain_error("moments: need at least two observations");
  const double n = static_cast<double>(x.size());
  double mu = std::accumulate(x.begin(), x.end(), 0.0) / n;
  // Second pass removes the rounding drift of the first (exact for constants).
  double drift = 0.0;
  for (double v : x) drift += v - mu;
  mu += drift / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mu) * (v - mu);
  return {mu, std::sqrt(ss / (n - 1.0)), x.size()};
}

double var_normal(const SampleMoments& m, RiskLevel alpha) {
  if (m.sd < 0.0) throw std::domain_error("var_normal: negative sd");
  return -(m.mean + m.sd * quantile(Normal{}, alpha.value()));
}

double es_normal(const SampleMoments& m, RiskLevel alpha) {
  if (m.sd < 0.0) throw std::domain_error("es_normal: negative sd");
  const double z = quantile(Normal{}, alpha.value());
  return -m.mean + m.sd * pdf(Normal{}, z) / alpha.value();
}

double true_es_quadrature(const DistSpec& d, RiskLevel alpha) {
  const double q = quantile(d, alpha.value());
  auto integrand = [&d](double x) { return x * pdf(d, x); };
  double err = 0.0;
  const double tail = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, -std::numeric_limits<double>::infinity(), q, 25, 1e-14, &err);
  return -tail / alpha.value();
}

double true_risk(const DistSpec& d, RiskLevel alpha, RiskMetric metric) {
  validate(d);
  const double a = alpha.value();
  if (metric == RiskMetric::var) return -quantile(d, a);
  if (metric != RiskMetric::es) throw std::domain_error("true_risk: unsupported metric");

  if (const auto* n = std::get_if<Normal>(&d)) {
    return es_normal(SampleMoments{n->mean, n->sd, 0}, alpha);
  }
  if (const auto* t = std::get_if<StudentT>(&d)) {
    const boost::math::students_t_distribution<double> law(t->dof);
    const double q = boost::math::quantile(law, a);
    const double tail = (t->dof + q * q) / (t->dof - 1.0) * boost::math::pdf(law, q) / a;
    return -t->location + t->scale * tail;
  }
  return true_es_quadrature(d, alpha);
}

}  // namespace esbt
