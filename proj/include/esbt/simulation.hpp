#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "esbt/dist.hpp"
#include "esbt/estimators.hpp"
#include "esbt/rng.hpp"

namespace esbt {

enum class Innovation { normal, skew_t };

/// GARCH(1,1): r_t = mu + sigma_t z_t, sigma_t^2 = omega + a1 eps_{t-1}^2 + b1 sigma_{t-1}^2.
/// The innovation z_t has mean 0 and variance 1; for skew_t the law is the
/// standardized Fernandez-Steel skew-t with the given dof and skew.
struct GarchSpec {
  double mu = 0.0;
  double omega = 1e-5;
  double a1 = 0.08;
  double b1 = 0.90;
  Innovation innovation = Innovation::normal;
  double dof = 8.0;
  double skew = 1.0;
};

/// Throws std::domain_error unless omega > 0, a1, b1 >= 0, a1 + b1 < 1 and the
/// innovation parameters are valid.
void validate(const GarchSpec& g);

/// Unit-variance innovation law of the model.
DistSpec innovation_law(const GarchSpec& g);

double stationary_variance(const GarchSpec& g);

struct GarchPath {
  std::vector<double> returns;
  std::vector<double> sigma;  // conditional sd of each return
};

/// Simulates n returns after a 500-step burn-in started at the stationary
/// variance.
GarchPath garch_simulate(const GarchSpec& g, std::size_t n, RngStream& rng);

inline constexpr std::size_t kGarchBurnIn = 500;

/// Conditional log-likelihood with sigma_1^2 set to the sample variance.
double garch_log_likelihood(const GarchSpec& g, std::span<const double> returns);

struct FitOptions {
  int max_evals = 2000;  // per start
  int starts = 3;
};

/// Raised when no start of the simplex search converges within budget.
class FitError : public std::runtime_error {
public:
  FitError(const std::string& what, std::vector<double> best_point, double gradient_norm)
      : std::runtime_error(what), best_point_(std::move(best_point)), gradient_norm_(gradient_norm) {}

  const std::vector<double>& best_point() const { return best_point_; }
  double gradient_norm() const { return gradient_norm_; }

private:
  std::vector<double> best_point_;
  double gradient_norm_;
};

/// Maximum-likelihood GARCH(1,1) fit. Needs at least 100 observations with
/// nonzero variance.
GarchSpec garch_fit(std::span<const double> returns, Innovation innovation, const FitOptions& opts = {});

enum class IidKind { normal, skew_t };

/// Normal: moment fit. Skew-t: MLE over (dof > 2, skew, location, scale).
/// Needs at least 30 observations.
DistSpec fit_iid(std::span<const double> returns, IidKind kind, const FitOptions& opts = {});

nlohmann::json to_json(const GarchSpec& g);
GarchSpec garch_from_json(const nlohmann::json& j);

using Model = std::variant<DistSpec, GarchSpec>;

/// Accepts either a distribution object or {"kind": "garch", ...}.
Model model_from_json(const nlohmann::json& j);

struct McConfig {
  Model model = DistSpec{Normal{}};
  std::size_t n = 250;
  std::size_t runs = 50'000;
  std::uint64_t seed = 0;
  double var_alpha = 0.01;
  double es_alpha = 0.025;
  unsigned workers = 1;
};

/// Empirical law of a nominal statistic (0..n) over Monte Carlo runs.
struct NullDistribution {
  RiskMetric metric = RiskMetric::var;
  std::vector<std::uint64_t> counts;  // index = nominal value
  std::size_t runs = 0;
  std::uint64_t seed = 0;

  std::vector<double> pmf() const;
  std::vector<double> cdf() const;
  /// P(nominal <= k); 1 beyond the support.
  double cdf_at(std::size_t k) const;
  /// P(nominal < k). For the G statistic this is the probability that the k
  /// worst secured outcomes sum to a nonnegative total, which is how the ES
  /// columns of the reference threshold table are tabulated.
  double cdf_below(std::size_t k) const;
  /// Columns nominal_value, pmf, cdf.
  std::string to_csv() const;
};

/// Runs cfg.runs independent windows of cfg.n observations. Each window is
/// secured with the true VaR (for the T statistic) and the true ES (for the G
/// statistic); under GARCH the true risk is conditional on sigma_t. Run i draws
/// from RngStream(seed, i), so the output does not depend on cfg.workers.
std::pair<NullDistribution, NullDistribution> mc_null(const McConfig& cfg);

}  // namespace esbt
