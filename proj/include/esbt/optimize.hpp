#pragma once

#include <functional>
#include <span>
#include <vector>

namespace esbt {

using Objective = std::function<double(std::span<const double>)>;

struct SimplexOptions {
  int max_evals = 2000;
  double ftol = 1e-10;       // relative spread of simplex values
  double initial_step = 0.1;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int evals = 0;
  bool converged = false;
};

/// Derivative-free Nelder-Mead minimisation. Non-finite objective values are
/// treated as +inf.
SimplexResult nelder_mead(const Objective& f, std::vector<double> start, const SimplexOptions& opts = {});

/// Central-difference gradient.
std::vector<double> numeric_gradient(const Objective& f, std::span<const double> x, double step = 1e-6);

}  // namespace esbt
