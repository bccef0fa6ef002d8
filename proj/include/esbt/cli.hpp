#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace esbt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitConfigError = 3;

/// Bad flags or inconsistent settings (exit 3).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Worker count from ESBT_WORKERS, 1 if unset or invalid.
unsigned default_workers();

/// Runs one subcommand (backtest, mc, compare, simulate). `args` excludes the
/// program name. Human-readable errors go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Schema checks applied to every report before it is written. Throw
/// std::runtime_error describing the first violation.
void validate_backtest_report(const nlohmann::json& report);
void validate_compare_report(const nlohmann::json& report);
void validate_null_csv(const std::string& csv);
void validate_heatmap_csv(const std::string& csv);

}  // namespace esbt::cli
