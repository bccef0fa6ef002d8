#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace esbt {

/// Realised P&L plus the reserve held against it, day by day. When
/// `normalized` is set each entry was additionally divided by its (positive)
/// reserve.
struct SecuredSample {
  std::vector<double> values;
  bool normalized = false;

  std::size_t size() const { return values.size(); }
};

/// y_i = pnl_i + reserve_i.
SecuredSample build_secured(std::span<const double> pnl, std::span<const double> reserve);

/// y_i = pnl_i / reserve_i + 1. Every reserve must be strictly positive; the
/// error message names the first offending index.
SecuredSample build_normalized(std::span<const double> pnl, std::span<const double> reserve);

}  // namespace esbt
