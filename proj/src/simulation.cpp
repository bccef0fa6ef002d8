#include "esbt/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "esbt/backtest.hpp"
#include "esbt/optimize.hpp"

namespace esbt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// Log density of a normal or (skewed) t law with the normalising constant
// hoisted out of the per-observation loop.
class LogDensity {
public:
  explicit LogDensity(const DistSpec& d) {
    if (const auto* n = std::get_if<Normal>(&d)) {
      normal_ = true;
      location_ = n->mean;
      scale_ = n->sd;
      constant_ = -std::log(n->sd) - 0.5 * std::log(2.0 * std::numbers::pi);
      return;
    }
    SkewT s = std::holds_alternative<SkewT>(d) ? std::get<SkewT>(d) : SkewT{};
    if (const auto* t = std::get_if<StudentT>(&d)) s = SkewT{t->dof, 1.0, t->location, t->scale};
    dof_ = s.dof;
    skew_ = s.skew;
    location_ = s.location;
    scale_ = s.scale;
    constant_ = std::lgamma((dof_ + 1.0) / 2.0) - std::lgamma(dof_ / 2.0) -
                0.5 * std::log(dof_ * std::numbers::pi) + std::log(2.0 / (skew_ + 1.0 / skew_)) -
                std::log(scale_);
  }

  double operator()(double x) const {
    const double z = (x - location_) / scale_;
    if (normal_) return constant_ - 0.5 * z * z;
    const double arg = z >= 0.0 ? z / skew_ : z * skew_;
    return constant_ - (dof_ + 1.0) / 2.0 * std::log1p(arg * arg / dof_);
  }

private:
  bool normal_ = false;
  double dof_ = 0.0, skew_ = 1.0, location_ = 0.0, scale_ = 1.0, constant_ = 0.0;
};

double sample_variance(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mu = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mu) * (v - mu);
  return ss / (n - 1.0);
}

double garch_log_likelihood_impl(const GarchSpec& g, std::span<const double> returns, double initial_var) {
  const LogDensity innov(innovation_law(g));
  double var = initial_var;
  double total = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    if (t > 0) {
      const double prev = returns[t - 1] - g.mu;
      var = g.omega + g.a1 * prev * prev + g.b1 * var;
    }
    const double sd = std::sqrt(var);
    total += innov((returns[t] - g.mu) / sd) - std::log(sd);
  }
  return total;
}

struct MultiStartOutcome {
  SimplexResult best;
  bool any_converged = false;
};

MultiStartOutcome multi_start(const Objective& f, const std::vector<std::vector<double>>& starts, int max_evals) {
  MultiStartOutcome out;
  out.best.value = kInf;
  SimplexOptions opts;
  opts.max_evals = max_evals;
  for (const auto& s : starts) {
    auto res = nelder_mead(f, s, opts);
    // A converged start beats an unconverged one only if it is at least as good.
    if (res.value < out.best.value || (res.converged && !out.best.converged && res.value <= out.best.value)) {
      out.best = res;
    }
    out.any_converged = out.any_converged || res.converged;
  }
  return out;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

void validate(const GarchSpec& g) {
  if (!std::isfinite(g.mu)) throw std::domain_error("garch: mu must be finite");
  if (!(g.omega > 0.0)) throw std::domain_error("garch: omega must be positive");
  if (!(g.a1 >= 0.0) || !(g.b1 >= 0.0)) throw std::domain_error("garch: a1 and b1 must be nonnegative");
  if (!(g.a1 + g.b1 < 1.0)) throw std::domain_error("garch: a1 + b1 must be below 1");
  if (g.innovation == Innovation::skew_t) {
    if (!(g.dof > 2.0)) throw std::domain_error("garch: innovation dof must exceed 2");
    if (!(g.skew > 0.0)) throw std::domain_error("garch: innovation skew must be positive");
  }
}

DistSpec innovation_law(const GarchSpec& g) {
  if (g.innovation == Innovation::normal) return Normal{};
  return standardized_skew_t(g.dof, g.skew);
}

double stationary_variance(const GarchSpec& g) { return g.omega / (1.0 - g.a1 - g.b1); }

GarchPath garch_simulate(const GarchSpec& g, std::size_t n, RngStream& rng) {
  validate(g);
  const DistSpec law = innovation_law(g);
  GarchPath path;
  path.returns.reserve(n);
  path.sigma.reserve(n);
  double var = stationary_variance(g);
  double eps = std::sqrt(var) * draw(law, rng);
  for (std::size_t t = 0; t < kGarchBurnIn + n; ++t) {
    var = g.omega + g.a1 * eps * eps + g.b1 * var;
    const double sd = std::sqrt(var);
    eps = sd * draw(law, rng);
    if (t >= kGarchBurnIn) {
      path.returns.push_back(g.mu + eps);
      path.sigma.push_back(sd);
    }
  }
  return path;
}

double garch_log_likelihood(const GarchSpec& g, std::span<const double> returns) {
  validate(g);
  if (returns.size() < 2) throw std::domain_error("garch likelihood: need at least two returns");
  return garch_log_likelihood_impl(g, returns, sample_variance(returns));
}

GarchSpec garch_fit(std::span<const double> returns, Innovation innovation, const FitOptions& opts) {
  if (returns.size() < 100) throw std::domain_error("garch_fit: need at least 100 observations");
  const double var0 = sample_variance(returns);
  const double mean0 = std::accumulate(returns.begin(), returns.end(), 0.0) / static_cast<double>(returns.size());
  // Relative to the level: a constant series leaves only rounding noise.
  if (!std::isfinite(var0) || !(var0 > 1e-24 * mean0 * mean0) || var0 == 0.0)
    throw std::domain_error("garch_fit: degenerate (zero) variance");
  const double sd0 = std::sqrt(var0);
  const bool skew = innovation == Innovation::skew_t;

  // theta = (mu / sd0, log(omega / var0), logit(a1 + b1), logit(a1 / (a1 + b1)) [, log(dof - 2), log(skew)])
  auto decode = [&](std::span<const double> th) {
    GarchSpec g;
    g.innovation = innovation;
    g.mu = th[0] * sd0;
    g.omega = var0 * std::exp(th[1]);
    const double persistence = std::min(logistic(th[2]), 1.0 - 1e-10);
    const double share = logistic(th[3]);
    g.a1 = persistence * share;
    g.b1 = persistence * (1.0 - share);
    if (skew) {
      g.dof = 2.0 + std::exp(th[4]);
      g.skew = std::exp(th[5]);
    }
    return g;
  };
  const double n = static_cast<double>(returns.size());
  const Objective objective = [&](std::span<const double> th) {
    const GarchSpec g = decode(th);
    if (!(g.omega > 0.0) || !std::isfinite(g.omega) || !(g.dof < 1e6) || !(g.skew > 1e-3 && g.skew < 1e3))
      return kInf;
    return -garch_log_likelihood_impl(g, returns, var0) / n;
  };

  std::vector<std::vector<double>> starts;
  const double grid[3][2] = {{0.05, 0.90}, {0.10, 0.85}, {0.20, 0.60}};
  for (int s = 0; s < std::max(1, std::min(opts.starts, 3)); ++s) {
    const double a1 = grid[s][0], b1 = grid[s][1];
    std::vector<double> th = {mean0 / sd0, std::log(1.0 - a1 - b1), logit(a1 + b1), logit(a1 / (a1 + b1))};
    if (skew) {
      th.push_back(std::log(8.0 - 2.0));
      th.push_back(0.0);
    }
    starts.push_back(std::move(th));
  }

  const auto outcome = multi_start(objective, starts, opts.max_evals);
  const GarchSpec best = decode(outcome.best.x);
  if (!outcome.any_converged) {
    std::vector<double> point = {best.mu, best.omega, best.a1, best.b1};
    if (skew) {
      point.push_back(best.dof);
      point.push_back(best.skew);
    }
    const double gnorm = norm2(numeric_gradient(objective, outcome.best.x));
    throw FitError(fmt::format("garch_fit: no start converged within {} evaluations (gradient norm {:.3g})",
                               opts.max_evals, gnorm),
                   std::move(point), gnorm);
  }
  validate(best);
  return best;
}

DistSpec fit_iid(std::span<const double> returns, IidKind kind, const FitOptions& opts) {
  if (returns.size() < 30) throw std::domain_error("fit_iid: need at least 30 observations");
  const auto m = moments(returns);
  if (!(m.sd > 0.0)) throw std::domain_error("fit_iid: degenerate (zero) variance");
  if (kind == IidKind::normal) return Normal{m.mean, m.sd};

  // theta = (log(dof - 2), log(skew), (location - mean) / sd, log(scale / sd))
  auto decode = [&](std::span<const double> th) {
    return SkewT{2.0 + std::exp(th[0]), std::exp(th[1]), m.mean + th[2] * m.sd, m.sd * std::exp(th[3])};
  };
  const double n = static_cast<double>(returns.size());
  const Objective objective = [&](std::span<const double> th) {
    const SkewT s = decode(th);
    if (!(s.dof < 1e6) || !(s.skew > 1e-3 && s.skew < 1e3) || !(s.scale > 0.0)) return kInf;
    const LogDensity lp(s);
    double total = 0.0;
    for (double x : returns) total += lp(x);
    return -total / n;
  };

  std::vector<std::vector<double>> starts;
  const double dofs[3] = {4.0, 8.0, 16.0};
  for (int s = 0; s < std::max(1, std::min(opts.starts, 3)); ++s) {
    const double dof = dofs[s];
    starts.push_back({std::log(dof - 2.0), 0.0, 0.0, 0.5 * std::log((dof - 2.0) / dof)});
  }
  const auto outcome = multi_start(objective, starts, opts.max_evals);
  const SkewT best = decode(outcome.best.x);
  if (!outcome.any_converged) {
    const double gnorm = norm2(numeric_gradient(objective, outcome.best.x));
    throw FitError(fmt::format("fit_iid(skew_t): no start converged within {} evaluations (gradient norm {:.3g})",
                               opts.max_evals, gnorm),
                   {best.dof, best.skew, best.location, best.scale}, gnorm);
  }
  return best;
}

nlohmann::json to_json(const GarchSpec& g) {
  nlohmann::json j{{"kind", "garch"}, {"mu", g.mu}, {"omega", g.omega}, {"a1", g.a1}, {"b1", g.b1}};
  if (g.innovation == Innovation::normal) {
    j["innovation"] = "normal";
  } else {
    j["innovation"] = "skew_t";
    j["dof"] = g.dof;
    j["skew"] = g.skew;
  }
  return j;
}

GarchSpec garch_from_json(const nlohmann::json& j) {
  GarchSpec g;
  try {
    g.mu = j.value("mu", 0.0);
    g.omega = j.at("omega").get<double>();
    g.a1 = j.at("a1").get<double>();
    g.b1 = j.at("b1").get<double>();
    const auto innov = j.value("innovation", std::string("normal"));
    if (innov == "normal") {
      g.innovation = Innovation::normal;
    } else if (innov == "skew_t") {
      g.innovation = Innovation::skew_t;
      g.dof = j.at("dof").get<double>();
      g.skew = j.value("skew", 1.0);
    } else {
      throw std::domain_error("garch: unknown innovation " + innov);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::domain_error(std::string("bad GARCH JSON: ") + e.what());
  }
  validate(g);
  return g;
}

Model model_from_json(const nlohmann::json& j) {
  if (j.is_object() && j.value("kind", std::string()) == "garch") return garch_from_json(j);
  return dist_from_json(j);
}

std::vector<double> NullDistribution::pmf() const {
  std::vector<double> out(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k)
    out[k] = static_cast<double>(counts[k]) / static_cast<double>(runs);
  return out;
}

std::vector<double> NullDistribution::cdf() const {
  std::vector<double> out(counts.size());
  std::uint64_t cum = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    cum += counts[k];
    out[k] = static_cast<double>(cum) / static_cast<double>(runs);
  }
  return out;
}

double NullDistribution::cdf_at(std::size_t k) const {
  if (k + 1 >= counts.size()) return 1.0;
  const auto cum = std::accumulate(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(k) + 1,
                                   std::uint64_t{0});
  return static_cast<double>(cum) / static_cast<double>(runs);
}

double NullDistribution::cdf_below(std::size_t k) const { return k == 0 ? 0.0 : cdf_at(k - 1); }

std::string NullDistribution::to_csv() const {
  std::string out = "nominal_value,pmf,cdf\n";
  const auto p = pmf();
  const auto c = cdf();
  for (std::size_t k = 0; k < counts.size(); ++k) out += fmt::format("{},{},{}\n", k, p[k], c[k]);
  return out;
}

std::pair<NullDistribution, NullDistribution> mc_null(const McConfig& cfg) {
  if (cfg.runs < 1) throw std::domain_error("mc_null: runs must be at least 1");
  if (cfg.n < 1) throw std::domain_error("mc_null: n must be at least 1");
  const RiskLevel var_level(cfg.var_alpha);
  const RiskLevel es_level(cfg.es_alpha);

  // Per-window reserves: constant for i.i.d. laws, scaled by sigma_t under GARCH.
  double var_unit = 0.0, es_unit = 0.0, shift = 0.0;
  const GarchSpec* garch = std::get_if<GarchSpec>(&cfg.model);
  if (garch) {
    validate(*garch);
    const DistSpec law = innovation_law(*garch);
    var_unit = true_risk(law, var_level, RiskMetric::var);
    es_unit = true_risk(law, es_level, RiskMetric::es);
    shift = -garch->mu;
  } else {
    const auto& d = std::get<DistSpec>(cfg.model);
    validate(d);
    var_unit = true_risk(d, var_level, RiskMetric::var);
    es_unit = true_risk(d, es_level, RiskMetric::es);
  }

  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(cfg.runs)));
  std::vector<std::vector<std::uint64_t>> var_counts(workers, std::vector<std::uint64_t>(cfg.n + 1, 0));
  std::vector<std::vector<std::uint64_t>> es_counts(workers, std::vector<std::uint64_t>(cfg.n + 1, 0));
  const std::size_t chunk = (cfg.runs + workers - 1) / workers;

  auto work = [&](unsigned w) {
    SecuredSample y_var, y_es;
    y_var.values.resize(cfg.n);
    y_es.values.resize(cfg.n);
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(cfg.runs, begin + chunk);
    for (std::size_t run = begin; run < end; ++run) {
      RngStream rng(cfg.seed, run);
      if (garch) {
        const auto path = garch_simulate(*garch, cfg.n, rng);
        for (std::size_t i = 0; i < cfg.n; ++i) {
          y_var.values[i] = path.returns[i] + shift + path.sigma[i] * var_unit;
          y_es.values[i] = path.returns[i] + shift + path.sigma[i] * es_unit;
        }
      } else {
        const auto& d = std::get<DistSpec>(cfg.model);
        for (std::size_t i = 0; i < cfg.n; ++i) {
          const double x = draw(d, rng);
          y_var.values[i] = x + var_unit;
          y_es.values[i] = x + es_unit;
        }
      }
      ++var_counts[w][t_stat(y_var).count];
      ++es_counts[w][g_stat(y_es).count];
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  NullDistribution var_null{RiskMetric::var, std::vector<std::uint64_t>(cfg.n + 1, 0), cfg.runs, cfg.seed};
  NullDistribution es_null{RiskMetric::es, std::vector<std::uint64_t>(cfg.n + 1, 0), cfg.runs, cfg.seed};
  for (unsigned w = 0; w < workers; ++w) {
    for (std::size_t k = 0; k <= cfg.n; ++k) {
      var_null.counts[k] += var_counts[w][k];
      es_null.counts[k] += es_counts[w][k];
    }
  }
  return {std::move(var_null), std::move(es_null)};
}

}  // namespace esbt
