#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "esbt/backtest.hpp"

namespace esbt {

/// Aligned daily return columns, decimals (0.0125 is 1.25%).
struct ReturnPanel {
  std::vector<std::string> dates;  // empty when the source had no date column
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::size_t dropped_rows = 0;

  std::size_t n_rows() const { return columns.empty() ? 0 : columns.front().size(); }
  std::size_t n_cols() const { return columns.size(); }
};

enum class PanelFormat { ff_daily, simple_csv };

PanelFormat panel_format_from_string(const std::string& s);

/// Ingestion failure. `line()` is 1-based, 0 when not tied to a line.
class DataError : public std::runtime_error {
public:
  DataError(const std::string& what, std::size_t line = 0) : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// ff_daily: Fama-French daily CSV. Leading description lines are skipped; the
/// first table is read (YYYYMMDD date, percent returns). Rows containing the
/// -99.99 / -999 missing-value sentinels are dropped and counted.
/// simple_csv: header row, optional leading "date" column, decimal returns;
/// empty or NA cells drop the row.
ReturnPanel parse_returns(std::istream& in, PanelFormat format);
ReturnPanel load_returns(const std::string& path, PanelFormat format);

/// Keeps rows with from <= date <= to (YYYYMMDD, either bound optional).
ReturnPanel filter_dates(const ReturnPanel& panel, const std::optional<std::string>& from,
                         const std::optional<std::string>& to);

struct Sample {
  std::string column;
  std::size_t block = 0;
  std::vector<double> values;
};

/// Disjoint consecutive windows per column, column-major; a trailing remainder
/// shorter than `window` is discarded.
std::vector<Sample> split_samples(const ReturnPanel& panel, std::size_t window = 500);

enum class Estimator { var_hist, var_norm, es_hist, es_norm };
enum class Family { historical, normal };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& s);
Family family_of(Estimator e);
bool is_var(Estimator e);

struct RollingConfig {
  std::size_t learn = 250;
  std::size_t test = 250;
  Estimator estimator = Estimator::es_hist;
  double var_alpha = 0.01;
  double es_alpha = 0.025;
  double z_alpha = 0.025;  // level for both reserves entering the Z statistic
  bool normalize = false;
  bool with_z = false;

  std::size_t window() const { return learn + test; }
};

/// Reserve for test day i (0-based), estimated from x[i, i + learn).
std::vector<double> rolling_reserves(std::span<const double> x, std::size_t learn, std::size_t test,
                                     Estimator estimator, double alpha);

/// y_i = x[learn + i] + reserve_i (or the normalized form), then both
/// statistics and zones. With cfg.with_z the VaR and ES estimators of the same
/// family are also run at z_alpha and Z is filled in.
BacktestResult rolling_backtest(std::span<const double> x, const RollingConfig& cfg);

/// Paired run for one sample: VaR estimator at var_alpha and ES estimator at
/// es_alpha of the same family; the ES result carries Z.
struct Comparison {
  BacktestResult var;
  BacktestResult es;
};

Comparison rolling_compare(std::span<const double> x, Family family, const RollingConfig& cfg);

std::vector<BacktestResult> run_backtests(std::span<const Sample> samples, const RollingConfig& cfg,
                                          unsigned workers = 1);
std::vector<Comparison> run_comparisons(std::span<const Sample> samples, Family family, const RollingConfig& cfg,
                                        unsigned workers = 1);

/// counts[row][col] with rows and columns ordered green, yellow, red.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, 3>, 3> counts{};

  std::size_t total() const;
  std::size_t trace() const;
  double trace_ratio() const;
};

/// Rows are ES zones, columns VaR zones.
ConfusionMatrix confusion(std::span<const Zone> var_zones, std::span<const Zone> es_zones);

nlohmann::json to_json(const ConfusionMatrix& m, const std::string& rows, const std::string& cols);

struct HeatmapCell {
  std::size_t nt_capped = 0;
  std::size_t ng_capped = 0;
  std::size_t count = 0;
};

/// Clamps (nominal_t, nominal_g) pairs to the caps and counts them; sorted by
/// (nt, ng).
std::vector<HeatmapCell> heatmap_table(std::span<const std::pair<std::size_t, std::size_t>> points,
                                       std::size_t cap_t = 15, std::size_t cap_g = 35);
std::vector<HeatmapCell> heatmap_table(std::span<const BacktestResult> results, std::size_t cap_t = 15,
                                       std::size_t cap_g = 35);
std::string heatmap_csv(std::span<const HeatmapCell> cells);

}  // namespace esbt
