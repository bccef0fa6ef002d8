#include "esbt/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace esbt {

namespace {

double safe_eval(const Objective& f, std::span<const double> x, int& evals) {
  ++evals;
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

SimplexResult nelder_mead(const Objective& f, std::vector<double> start, const SimplexOptions& opts) {
  const std::size_t dim = start.size();
  std::vector<std::vector<double>> pts(dim + 1, start);
  for (std::size_t i = 0; i < dim; ++i) {
    const double step = start[i] != 0.0 ? opts.initial_step * std::max(1.0, std::abs(start[i])) : opts.initial_step;
    pts[i + 1][i] += step;
  }

  SimplexResult res;
  std::vector<double> vals(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) vals[i] = safe_eval(f, pts[i], res.evals);

  std::vector<std::size_t> order(dim + 1);
  std::vector<double> centroid(dim), trial(dim), trial2(dim);

  auto point_along = [&](double coef, std::span<const double> worst, std::vector<double>& out) {
    for (std::size_t j = 0; j < dim; ++j) out[j] = centroid[j] + coef * (worst[j] - centroid[j]);
  };

  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[dim > 0 ? dim - 1 : 0];

    const double spread = std::abs(vals[worst] - vals[best]);
    const double scale = std::abs(vals[worst]) + std::abs(vals[best]) + 1e-300;
    if (std::isfinite(vals[worst]) && 2.0 * spread <= opts.ftol * scale) {
      res.converged = true;
      break;
    }
    if (res.evals >= opts.max_evals) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < dim; ++j) centroid[j] += pts[i][j] / static_cast<double>(dim);
    }

    point_along(-1.0, pts[worst], trial);
    const double fr = safe_eval(f, trial, res.evals);
    if (fr < vals[best]) {
      point_along(-2.0, pts[worst], trial2);
      const double fe = safe_eval(f, trial2, res.evals);
      if (fe < fr) {
        pts[worst] = trial2;
        vals[worst] = fe;
      } else {
        pts[worst] = trial;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = trial;
      vals[worst] = fr;
      continue;
    }
    // Contraction, outside if the reflection improved on the worst point.
    const bool outside = fr < vals[worst];
    point_along(outside ? -0.5 : 0.5, pts[worst], trial2);
    const double fc = safe_eval(f, trial2, res.evals);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = trial2;
      vals[worst] = fc;
      continue;
    }
    // Shrink towards the best vertex.
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < dim; ++j) pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
      vals[i] = safe_eval(f, pts[i], res.evals);
    }
  }

  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  res.x = pts[best];
  res.value = vals[best];
  return res;
}

std::vector<double> numeric_gradient(const Objective& f, std::span<const double> x, double step) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace esbt
