#include "esbt/secured.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace esbt {

namespace {

void check_lengths(std::span<const double> pnl, std::span<const double> reserve) {
  if (pnl.size() != reserve.size())
    throw std::domain_error(
        fmt::format("secured position: {} P&L values but {} reserves", pnl.size(), reserve.size()));
  if (pnl.empty()) throw std::domain_error("secured position: empty input");
}

}  // namespace

SecuredSample build_secured(std::span<const double> pnl, std::span<const double> reserve) {
  check_lengths(pnl, reserve);
  SecuredSample out;
  out.values.resize(pnl.size());
  for (std::size_t i = 0; i < pnl.size(); ++i) out.values[i] = pnl[i] + reserve[i];
  return out;
}

SecuredSample build_normalized(std::span<const double> pnl, std::span<const double> reserve) {
  check_lengths(pnl, reserve);
  SecuredSample out;
  out.normalized = true;
  out.values.resize(pnl.size());
  for (std::size_t i = 0; i < pnl.size(); ++i) {
    if (!(reserve[i] > 0.0))
      throw std::domain_error(
          fmt::format("normalized secured position: reserve at index {} is {} (must be > 0)", i, reserve[i]));
    out.values[i] = pnl[i] / reserve[i] + 1.0;
  }
  return out;
}

}  // namespace esbt
