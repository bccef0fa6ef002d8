#include "esbt/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>

#include <fmt/format.h>

#include "esbt/parallel.hpp"

namespace esbt {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                        : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

bool is_date_field(const std::string& s) {
  return s.size() == 8 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_sentinel(double v) { return std::abs(v + 99.99) < 1e-9 || std::abs(v + 999.0) < 1e-9; }

bool is_missing_cell(const std::string& s) {
  if (s.empty()) return true;
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower == "na" || lower == "nan" || lower == "null";
}

// Rows collected before the drop decision so all-missing columns can be reported.
struct RawRows {
  std::vector<std::string> dates;
  std::vector<std::vector<std::optional<double>>> rows;
};

ReturnPanel assemble(RawRows raw, std::vector<std::string> names) {
  if (raw.rows.empty()) throw DataError("no data rows found");
  const std::size_t cols = names.size();
  for (std::size_t c = 0; c < cols; ++c) {
    const bool all_missing =
        std::all_of(raw.rows.begin(), raw.rows.end(), [c](const auto& r) { return !r[c].has_value(); });
    if (all_missing) throw DataError(fmt::format("column '{}' has no valid values", names[c]));
  }
  ReturnPanel panel;
  panel.names = std::move(names);
  panel.columns.assign(cols, {});
  const bool dated = !raw.dates.empty();
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    const auto& row = raw.rows[r];
    if (std::any_of(row.begin(), row.end(), [](const auto& v) { return !v.has_value(); })) {
      ++panel.dropped_rows;
      continue;
    }
    if (dated) panel.dates.push_back(raw.dates[r]);
    for (std::size_t c = 0; c < cols; ++c) panel.columns[c].push_back(*row[c]);
  }
  return panel;
}

ReturnPanel parse_ff_daily(std::istream& in) {
  std::vector<std::string> names;
  RawRows raw;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool in_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    const bool data_row = fields.size() > 1 && is_date_field(fields[0]);
    if (!in_data) {
      if (!data_row) {
        // Header of the first table: empty leading cell followed by names.
        if (fields.size() > 1 && fields[0].empty() && !fields[1].empty()) {
          names.assign(fields.begin() + 1, fields.end());
        }
        continue;
      }
      in_data = true;
      width = fields.size() - 1;
      if (names.empty()) {
        for (std::size_t c = 0; c < width; ++c) names.push_back(fmt::format("col{}", c + 1));
      } else if (names.size() != width) {
        throw DataError(fmt::format("line {}: {} values but header names {} columns", line_no, width, names.size()),
                        line_no);
      }
    } else if (!data_row) {
      if (trim(line).empty() || !is_date_field(fields[0])) break;  // end of the first table
    }
    if (fields.size() - 1 != width)
      throw DataError(fmt::format("line {}: expected {} values, found {}", line_no, width, fields.size() - 1),
                      line_no);
    std::vector<std::optional<double>> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      const auto v = parse_double(fields[c + 1]);
      if (!v) throw DataError(fmt::format("line {}: cannot parse '{}'", line_no, fields[c + 1]), line_no);
      if (!is_sentinel(*v)) row[c] = *v / 100.0;
    }
    raw.dates.push_back(fields[0]);
    raw.rows.push_back(std::move(row));
  }
  return assemble(std::move(raw), std::move(names));
}

ReturnPanel parse_simple_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) throw DataError("missing header row");
  std::string first = header[0];
  std::transform(first.begin(), first.end(), first.begin(), [](unsigned char c) { return std::tolower(c); });
  const bool dated = first == "date";
  std::vector<std::string> names(header.begin() + (dated ? 1 : 0), header.end());
  if (names.empty()) throw DataError("header has no return columns", line_no);

  RawRows raw;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw DataError(fmt::format("line {}: expected {} fields, found {}", line_no, header.size(), fields.size()),
                      line_no);
    std::vector<std::optional<double>> row(names.size());
    for (std::size_t c = 0; c < names.size(); ++c) {
      const auto& cell = fields[c + (dated ? 1 : 0)];
      if (is_missing_cell(cell)) continue;
      const auto v = parse_double(cell);
      if (!v) throw DataError(fmt::format("line {}: cannot parse '{}'", line_no, cell), line_no);
      row[c] = *v;
    }
    if (dated) raw.dates.push_back(fields[0]);
    raw.rows.push_back(std::move(row));
  }
  return assemble(std::move(raw), std::move(names));
}

}  // namespace

PanelFormat panel_format_from_string(const std::string& s) {
  if (s == "ff_daily") return PanelFormat::ff_daily;
  if (s == "simple_csv") return PanelFormat::simple_csv;
  throw std::domain_error("unknown input format: " + s);
}

ReturnPanel parse_returns(std::istream& in, PanelFormat format) {
  return format == PanelFormat::ff_daily ? parse_ff_daily(in) : parse_simple_csv(in);
}

ReturnPanel load_returns(const std::string& path, PanelFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_returns(in, format);
}

ReturnPanel filter_dates(const ReturnPanel& panel, const std::optional<std::string>& from,
                         const std::optional<std::string>& to) {
  if (!from && !to) return panel;
  if (panel.dates.empty()) throw DataError("date filter requested but the input has no date column");
  ReturnPanel out;
  out.names = panel.names;
  out.columns.assign(panel.n_cols(), {});
  out.dropped_rows = panel.dropped_rows;
  for (std::size_t r = 0; r < panel.n_rows(); ++r) {
    const auto& d = panel.dates[r];
    if ((from && d < *from) || (to && d > *to)) continue;
    out.dates.push_back(d);
    for (std::size_t c = 0; c < panel.n_cols(); ++c) out.columns[c].push_back(panel.columns[c][r]);
  }
  return out;
}

std::vector<Sample> split_samples(const ReturnPanel& panel, std::size_t window) {
  if (window == 0) throw std::domain_error("split_samples: window must be positive");
  if (window > panel.n_rows())
    throw std::domain_error(
        fmt::format("split_samples: window {} exceeds the {} available rows", window, panel.n_rows()));
  std::vector<Sample> out;
  const std::size_t blocks = panel.n_rows() / window;
  for (std::size_t c = 0; c < panel.n_cols(); ++c) {
    for (std::size_t b = 0; b < blocks; ++b) {
      const auto first = panel.columns[c].begin() + static_cast<std::ptrdiff_t>(b * window);
      out.push_back({panel.names[c], b, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(window))});
    }
  }
  return out;
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::var_hist: return "var-hist";
    case Estimator::var_norm: return "var-norm";
    case Estimator::es_hist: return "es-hist";
    case Estimator::es_norm: return "es-norm";
  }
  return "?";
}

Estimator estimator_from_string(const std::string& s) {
  if (s == "var-hist" || s == "var_hist") return Estimator::var_hist;
  if (s == "var-norm" || s == "var_norm") return Estimator::var_norm;
  if (s == "es-hist" || s == "es_hist") return Estimator::es_hist;
  if (s == "es-norm" || s == "es_norm") return Estimator::es_norm;
  throw std::domain_error("unknown estimator: " + s);
}

Family family_of(Estimator e) {
  return (e == Estimator::var_hist || e == Estimator::es_hist) ? Family::historical : Family::normal;
}

bool is_var(Estimator e) { return e == Estimator::var_hist || e == Estimator::var_norm; }

std::vector<double> rolling_reserves(std::span<const double> x, std::size_t learn, std::size_t test,
                                     Estimator estimator, double alpha) {
  if (x.size() != learn + test)
    throw std::domain_error(fmt::format("rolling window: need {} observations, got {}", learn + test, x.size()));
  const RiskLevel level(alpha);
  std::vector<double> reserves(test);
  for (std::size_t i = 0; i < test; ++i) {
    const auto window = x.subspan(i, learn);
    switch (estimator) {
      case Estimator::var_hist: reserves[i] = var_empirical(window, level); break;
      case Estimator::es_hist: reserves[i] = es_empirical(window, level); break;
      case Estimator::var_norm: reserves[i] = var_normal(moments(window), level); break;
      case Estimator::es_norm: reserves[i] = es_normal(moments(window), level); break;
    }
  }
  return reserves;
}

namespace {

double z_for(std::span<const double> x, Family family, const RollingConfig& cfg) {
  const bool hist = family == Family::historical;
  const auto var_res =
      rolling_reserves(x, cfg.learn, cfg.test, hist ? Estimator::var_hist : Estimator::var_norm, cfg.z_alpha);
  const auto es_res =
      rolling_reserves(x, cfg.learn, cfg.test, hist ? Estimator::es_hist : Estimator::es_norm, cfg.z_alpha);
  return z_stat(x.subspan(cfg.learn), var_res, es_res, RiskLevel(cfg.z_alpha));
}

}  // namespace

BacktestResult rolling_backtest(std::span<const double> x, const RollingConfig& cfg) {
  const double alpha = is_var(cfg.estimator) ? cfg.var_alpha : cfg.es_alpha;
  const auto reserves = rolling_reserves(x, cfg.learn, cfg.test, cfg.estimator, alpha);
  const auto realized = x.subspan(cfg.learn);
  const SecuredSample y = cfg.normalize ? build_normalized(realized, reserves) : build_secured(realized, reserves);
  BacktestResult r = evaluate(y, to_string(cfg.estimator), alpha);
  if (cfg.with_z) {
    r.z = z_for(x, family_of(cfg.estimator), cfg);
    r.zone_z = classify(*r.z, ZoneThresholds::z_default());
  }
  return r;
}

Comparison rolling_compare(std::span<const double> x, Family family, const RollingConfig& cfg) {
  const bool hist = family == Family::historical;
  RollingConfig var_cfg = cfg;
  var_cfg.estimator = hist ? Estimator::var_hist : Estimator::var_norm;
  var_cfg.with_z = false;
  RollingConfig es_cfg = cfg;
  es_cfg.estimator = hist ? Estimator::es_hist : Estimator::es_norm;
  es_cfg.with_z = true;
  return {rolling_backtest(x, var_cfg), rolling_backtest(x, es_cfg)};
}

std::vector<BacktestResult> run_backtests(std::span<const Sample> samples, const RollingConfig& cfg,
                                          unsigned workers) {
  return parallel_map<BacktestResult>(samples.size(), workers,
                                      [&](std::size_t i) { return rolling_backtest(samples[i].values, cfg); });
}

std::vector<Comparison> run_comparisons(std::span<const Sample> samples, Family family, const RollingConfig& cfg,
                                        unsigned workers) {
  return parallel_map<Comparison>(samples.size(), workers,
                                  [&](std::size_t i) { return rolling_compare(samples[i].values, family, cfg); });
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

std::size_t ConfusionMatrix::trace() const { return counts[0][0] + counts[1][1] + counts[2][2]; }

double ConfusionMatrix::trace_ratio() const {
  const auto t = total();
  return t == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(t);
}

ConfusionMatrix confusion(std::span<const Zone> var_zones, std::span<const Zone> es_zones) {
  if (var_zones.size() != es_zones.size())
    throw std::domain_error(
        fmt::format("confusion: {} VaR zones but {} ES zones", var_zones.size(), es_zones.size()));
  ConfusionMatrix m;
  for (std::size_t i = 0; i < var_zones.size(); ++i)
    ++m.counts[static_cast<std::size_t>(es_zones[i])][static_cast<std::size_t>(var_zones[i])];
  return m;
}

nlohmann::json to_json(const ConfusionMatrix& m, const std::string& rows, const std::string& cols) {
  return {{"rows", rows},
          {"cols", cols},
          {"labels", {"green", "yellow", "red"}},
          {"counts", m.counts},
          {"total", m.total()},
          {"trace_ratio", m.trace_ratio()}};
}

std::vector<HeatmapCell> heatmap_table(std::span<const std::pair<std::size_t, std::size_t>> points,
                                       std::size_t cap_t, std::size_t cap_g) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> bins;
  for (const auto& [nt, ng] : points) ++bins[{std::min(nt, cap_t), std::min(ng, cap_g)}];
  std::vector<HeatmapCell> out;
  out.reserve(bins.size());
  for (const auto& [key, count] : bins) out.push_back({key.first, key.second, count});
  return out;
}

std::vector<HeatmapCell> heatmap_table(std::span<const BacktestResult> results, std::size_t cap_t,
                                       std::size_t cap_g) {
  std::vector<std::pair<std::size_t, std::size_t>> points;
  points.reserve(results.size());
  for (const auto& r : results) points.emplace_back(r.nominal_t, r.nominal_g);
  return heatmap_table(points, cap_t, cap_g);
}

std::string heatmap_csv(std::span<const HeatmapCell> cells) {
  std::string out = "nt_capped,ng_capped,count\n";
  for (const auto& c : cells) out += fmt::format("{},{},{}\n", c.nt_capped, c.ng_capped, c.count);
  return out;
}

}  // namespace esbt
