#include "esbt/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "esbt/harness.hpp"
#include "esbt/parallel.hpp"
#include "esbt/simulation.hpp"

namespace esbt::cli {

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << content;
  if (!out) throw DataError("failed writing " + path);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("{}: invalid JSON ({})", path, e.what()));
  }
}

std::string derived_path(const std::string& report, const std::string& suffix) {
  const auto dot = report.rfind('.');
  const auto slash = report.find_last_of('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? report.substr(0, dot) : report) + suffix;
}

// Domain errors raised while processing data (e.g. a non-positive reserve under
// --normalize) are data errors, not configuration errors.
template <class Fn>
auto as_data_error(Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::domain_error& e) {
    throw DataError(e.what());
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error("report schema violation: " + what);
}

void check_result(const nlohmann::json& r) {
  static const char* fields[] = {"n",        "alpha",     "estimator", "normalized", "nominal_t",
                                 "nominal_g", "z",        "zone_var",  "zone_es",    "zone_z"};
  require(r.is_object() && r.size() == std::size(fields), "result must have exactly the ten result fields");
  for (const char* f : fields) require(r.contains(f), std::string("result missing ") + f);
  require(r["n"].is_number_unsigned(), "n must be a nonnegative integer");
  require(r["alpha"].is_number(), "alpha must be a number");
  require(r["estimator"].is_string(), "estimator must be a string");
  require(r["normalized"].is_boolean(), "normalized must be boolean");
  require(r["nominal_t"].is_number_unsigned() && r["nominal_g"].is_number_unsigned(), "nominal values");
  require(r["nominal_t"].get<std::size_t>() <= r["n"].get<std::size_t>() &&
              r["nominal_g"].get<std::size_t>() <= r["n"].get<std::size_t>(),
          "nominal values must not exceed n");
  require(r["z"].is_null() || r["z"].is_number(), "z must be null or a number");
  for (const char* f : {"zone_var", "zone_es"}) {
    require(r[f].is_string(), std::string(f) + " must be a string");
    zone_from_string(r[f].get<std::string>());
  }
  require(r["zone_z"].is_null() == r["z"].is_null(), "zone_z must accompany z");
  if (!r["zone_z"].is_null()) zone_from_string(r["zone_z"].get<std::string>());
}

void check_confusion(const nlohmann::json& c) {
  require(c.is_object() && c.contains("counts") && c["counts"].is_array() && c["counts"].size() == 3,
          "confusion counts must be 3x3");
  std::size_t total = 0;
  for (const auto& row : c["counts"]) {
    require(row.is_array() && row.size() == 3, "confusion row must have 3 entries");
    for (const auto& v : row) {
      require(v.is_number_unsigned(), "confusion entries must be nonnegative integers");
      total += v.get<std::size_t>();
    }
  }
  require(c.contains("total") && c["total"].get<std::size_t>() == total, "confusion total mismatch");
}

unsigned resolve_workers(const std::optional<unsigned>& flag) {
  const unsigned w = flag ? *flag : default_workers();
  if (w == 0) throw ConfigError("--workers must be at least 1");
  return w;
}

// ---------------------------------------------------------------- backtest --

struct PanelArgs {
  std::string input;
  std::string format = "ff_daily";
  std::optional<std::string> from, to;
};

struct RollingArgs {
  std::optional<double> alpha;
  double var_alpha = 0.01;
  double es_alpha = 0.025;
  double z_alpha = 0.025;
  std::size_t learn = 250;
  std::size_t test = 250;
  bool normalize = false;
};

struct BacktestArgs {
  PanelArgs panel;
  RollingArgs rolling;
  std::string estimator = "es-hist";
  bool with_z = false;
  std::string out;
  std::string heatmap;
  std::size_t cap_t = 15;
  std::size_t cap_g = 35;
  std::optional<unsigned> workers;
};

struct CompareArgs {
  PanelArgs panel;
  RollingArgs rolling;
  std::optional<std::string> family;
  std::vector<std::string> estimators;
  std::string out;
  std::string heatmap;
  std::size_t cap_t = 15;
  std::size_t cap_g = 35;
  std::optional<unsigned> workers;
};

struct McArgs {
  std::optional<std::string> dist;
  std::optional<std::string> spec;
  std::size_t runs = 50'000;
  std::size_t n = 250;
  std::optional<std::uint64_t> seed;
  double var_alpha = 0.01;
  double es_alpha = 0.025;
  std::string out_prefix;
  std::optional<unsigned> workers;
};

struct SimulateArgs {
  std::optional<std::string> input;
  std::string format = "ff_daily";
  std::optional<std::string> from, to;
  std::string model = "normal";
  std::size_t picks = 8;
  std::size_t window = 500;
  std::optional<std::string> dist;
  std::optional<std::string> spec;
  std::size_t samples = 125;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string fits_out;
  std::optional<unsigned> workers;
};

void add_panel_options(CLI::App* cmd, PanelArgs& a) {
  cmd->add_option("--input", a.input, "Return file")->required();
  cmd->add_option("--format", a.format, "ff_daily or simple_csv");
  cmd->add_option("--from", a.from, "First date kept (YYYYMMDD)");
  cmd->add_option("--to", a.to, "Last date kept (YYYYMMDD)");
}

void add_rolling_options(CLI::App* cmd, RollingArgs& a) {
  cmd->add_option("--alpha", a.alpha, "Level of the selected estimator");
  cmd->add_option("--var-alpha", a.var_alpha, "VaR level");
  cmd->add_option("--es-alpha", a.es_alpha, "ES level");
  cmd->add_option("--z-alpha", a.z_alpha, "Level of both reserves in the Z statistic");
  cmd->add_option("--learn", a.learn, "Estimation window length");
  cmd->add_option("--test", a.test, "Backtest window length");
  cmd->add_flag("--normalize", a.normalize, "Divide secured positions by their reserves");
}

RollingConfig make_rolling(const RollingArgs& a, Estimator estimator) {
  RollingConfig cfg;
  cfg.learn = a.learn;
  cfg.test = a.test;
  cfg.estimator = estimator;
  cfg.var_alpha = a.var_alpha;
  cfg.es_alpha = a.es_alpha;
  cfg.z_alpha = a.z_alpha;
  cfg.normalize = a.normalize;
  if (a.alpha) (is_var(estimator) ? cfg.var_alpha : cfg.es_alpha) = *a.alpha;
  if (cfg.learn < 2 || cfg.test < 1) throw ConfigError("--learn must be >= 2 and --test >= 1");
  for (double level : {cfg.var_alpha, cfg.es_alpha, cfg.z_alpha}) RiskLevel{level};
  return cfg;
}

std::vector<Sample> load_samples(const PanelArgs& a, std::size_t window, std::size_t& dropped) {
  const auto format = panel_format_from_string(a.format);
  if (!std::filesystem::exists(a.input)) throw DataError("input file not found: " + a.input);
  const auto panel = filter_dates(load_returns(a.input, format), a.from, a.to);
  dropped = panel.dropped_rows;
  if (panel.n_rows() < window)
    throw ConfigError(fmt::format("input has {} rows after filtering but learn + test = {}", panel.n_rows(), window));
  return split_samples(panel, window);
}

nlohmann::json rolling_json(const RollingConfig& cfg) {
  return {{"learn", cfg.learn},         {"test", cfg.test},         {"var_alpha", cfg.var_alpha},
          {"es_alpha", cfg.es_alpha},   {"z_alpha", cfg.z_alpha},   {"normalize", cfg.normalize}};
}

nlohmann::json sample_json(const Sample& s) { return {{"column", s.column}, {"block", s.block}}; }

int cmd_backtest(const BacktestArgs& a, std::ostream& out) {
  const auto workers = resolve_workers(a.workers);
  RollingConfig cfg = make_rolling(a.rolling, estimator_from_string(a.estimator));
  cfg.with_z = a.with_z;
  std::size_t dropped = 0;
  const auto samples = load_samples(a.panel, cfg.window(), dropped);
  const auto results = as_data_error([&] { return run_backtests(samples, cfg, workers); });

  std::vector<Zone> zv, ze;
  nlohmann::json jresults = nlohmann::json::array(), jsamples = nlohmann::json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    zv.push_back(results[i].zone_var);
    ze.push_back(results[i].zone_es);
    jresults.push_back(to_json(results[i]));
    jsamples.push_back(sample_json(samples[i]));
  }
  const auto cm = confusion(zv, ze);
  nlohmann::json cfg_json = rolling_json(cfg);
  cfg_json["estimator"] = to_string(cfg.estimator);
  cfg_json["with_z"] = cfg.with_z;
  nlohmann::json report{{"config", cfg_json},
                        {"dropped_rows", dropped},
                        {"samples", jsamples},
                        {"results", jresults},
                        {"summary", {{"confusion", to_json(cm, "es", "var")}, {"trace_ratio", cm.trace_ratio()}}}};
  validate_backtest_report(report);
  const auto cells = heatmap_table(results, a.cap_t, a.cap_g);
  const auto csv = heatmap_csv(cells);
  validate_heatmap_csv(csv);

  write_file(a.out, report.dump(2) + "\n");
  const auto heatmap_path = a.heatmap.empty() ? derived_path(a.out, "_heatmap.csv") : a.heatmap;
  write_file(heatmap_path, csv);
  out << fmt::format("{} samples backtested with {} ({} rows dropped); trace ratio {:.4f}\n", results.size(),
                     to_string(cfg.estimator), dropped, cm.trace_ratio());
  out << fmt::format("report: {}\nheatmap: {}\n", a.out, heatmap_path);
  return kExitOk;
}

// ----------------------------------------------------------------- compare --

Family resolve_family(const CompareArgs& a) {
  if (a.family && !a.estimators.empty()) throw ConfigError("give either --family or --estimator, not both");
  if (a.family) {
    if (*a.family == "hist" || *a.family == "historical") return Family::historical;
    if (*a.family == "norm" || *a.family == "normal") return Family::normal;
    throw ConfigError("unknown family: " + *a.family);
  }
  if (a.estimators.empty()) return Family::historical;
  std::optional<Estimator> var_est, es_est;
  for (const auto& name : a.estimators) {
    const auto e = estimator_from_string(name);
    (is_var(e) ? var_est : es_est) = e;
  }
  if (!var_est || !es_est)
    throw ConfigError("Test 2 needs both a VaR and an ES estimator (e.g. --estimator var-norm --estimator es-norm)");
  if (family_of(*var_est) != family_of(*es_est))
    throw ConfigError("VaR and ES estimators must belong to the same family");
  return family_of(*var_est);
}

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  const auto workers = resolve_workers(a.workers);
  const Family family = resolve_family(a);
  const RollingConfig cfg = make_rolling(a.rolling, family == Family::historical ? Estimator::es_hist : Estimator::es_norm);
  std::size_t dropped = 0;
  const auto samples = load_samples(a.panel, cfg.window(), dropped);
  const auto rows = as_data_error([&] { return run_comparisons(samples, family, cfg, workers); });

  std::vector<Zone> zv, ze, zz;
  std::vector<std::pair<std::size_t, std::size_t>> points;
  nlohmann::json jsamples = nlohmann::json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    zv.push_back(rows[i].var.zone_var);
    ze.push_back(rows[i].es.zone_es);
    zz.push_back(*rows[i].es.zone_z);
    points.emplace_back(rows[i].var.nominal_t, rows[i].es.nominal_g);
    auto js = sample_json(samples[i]);
    js["var"] = to_json(rows[i].var);
    js["es"] = to_json(rows[i].es);
    jsamples.push_back(std::move(js));
  }
  const auto cm_es = confusion(zv, ze);
  const auto cm_z = confusion(zv, zz);
  nlohmann::json cfg_json = rolling_json(cfg);
  cfg_json["family"] = family == Family::historical ? "hist" : "norm";
  nlohmann::json report{{"config", cfg_json},
                        {"dropped_rows", dropped},
                        {"samples", jsamples},
                        {"summary",
                         {{"confusion", to_json(cm_es, "es", "var")},
                          {"trace_ratio", cm_es.trace_ratio()},
                          {"confusion_z", to_json(cm_z, "z", "var")},
                          {"trace_ratio_z", cm_z.trace_ratio()}}}};
  validate_compare_report(report);
  const auto csv = heatmap_csv(heatmap_table(points, a.cap_t, a.cap_g));
  validate_heatmap_csv(csv);

  write_file(a.out, report.dump(2) + "\n");
  const auto heatmap_path = a.heatmap.empty() ? derived_path(a.out, "_heatmap.csv") : a.heatmap;
  write_file(heatmap_path, csv);
  out << fmt::format("{} samples compared; VaR-vs-ES trace ratio {:.4f}, VaR-vs-Z trace ratio {:.4f}\n", rows.size(),
                     cm_es.trace_ratio(), cm_z.trace_ratio());
  out << fmt::format("report: {}\nheatmap: {}\n", a.out, heatmap_path);
  return kExitOk;
}

// ---------------------------------------------------------------------- mc --

Model resolve_model(const std::optional<std::string>& preset, const std::optional<std::string>& spec_path) {
  if (preset.has_value() == spec_path.has_value()) throw ConfigError("give exactly one of --dist or --spec");
  try {
    if (preset) return dist_preset(*preset);
    return model_from_json(read_json_file(*spec_path));
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
}

std::string describe_model(const Model& m) {
  if (const auto* d = std::get_if<DistSpec>(&m)) return describe(*d);
  return to_json(std::get<GarchSpec>(m)).dump();
}

std::string mc_summary(const McConfig& cfg, const NullDistribution& var_null, const NullDistribution& es_null) {
  std::string s;
  s += fmt::format("model: {}\n", describe_model(cfg.model));
  s += fmt::format("runs: {}  n: {}  seed: {}  var_alpha: {}  es_alpha: {}\n", cfg.runs, cfg.n, cfg.seed,
                   cfg.var_alpha, cfg.es_alpha);
  // VAR columns: P(n*T_n <= k). ES columns: P(n*G_n < k), i.e. the k worst
  // outcomes sum to a nonnegative total.
  s += fmt::format("{:<10}{:>9}{:>9}{:>9}{:>9} |{:>9}{:>9}{:>9}{:>9}\n", "metric", "VAR<=k", "", "", "", "ES<k", "",
                   "", "");
  s += fmt::format("{:<10}{:>9}{:>9}{:>9}{:>9} |{:>9}{:>9}{:>9}{:>9}\n", "k", 4, 5, 9, 10, 11, 12, 24, 25);
  s += fmt::format("{:<10}{:>9.4f}{:>9.4f}{:>9.4f}{:>9.4f} |{:>9.4f}{:>9.4f}{:>9.4f}{:>9.4f}\n", "cdf",
                   var_null.cdf_at(4), var_null.cdf_at(5), var_null.cdf_at(9), var_null.cdf_at(10),
                   es_null.cdf_below(11), es_null.cdf_below(12), es_null.cdf_below(24), es_null.cdf_below(25));
  auto se = [&](double p) { return std::sqrt(p * (1.0 - p) / static_cast<double>(cfg.runs)); };
  s += fmt::format("VAR cdf@5 = {:.4f} ± {:.4f} (MC standard error)\n", var_null.cdf_at(5), se(var_null.cdf_at(5)));
  s += fmt::format("ES cdf@12 = {:.4f} ± {:.4f} (MC standard error)\n", es_null.cdf_below(12),
                   se(es_null.cdf_below(12)));
  return s;
}

int cmd_mc(const McArgs& a, std::ostream& out) {
  if (!a.seed) throw ConfigError("mc requires --seed");
  McConfig cfg;
  cfg.model = resolve_model(a.dist, a.spec);
  cfg.runs = a.runs;
  cfg.n = a.n;
  cfg.seed = *a.seed;
  cfg.var_alpha = a.var_alpha;
  cfg.es_alpha = a.es_alpha;
  cfg.workers = resolve_workers(a.workers);
  if (cfg.runs < 1 || cfg.n < 1) throw ConfigError("--runs and --n must be at least 1");
  try {
    RiskLevel{cfg.var_alpha};
    RiskLevel{cfg.es_alpha};
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }

  const auto [var_null, es_null] = mc_null(cfg);
  const auto var_csv = var_null.to_csv();
  const auto es_csv = es_null.to_csv();
  validate_null_csv(var_csv);
  validate_null_csv(es_csv);
  const auto summary = mc_summary(cfg, var_null, es_null);
  write_file(a.out_prefix + "_var.csv", var_csv);
  write_file(a.out_prefix + "_es.csv", es_csv);
  write_file(a.out_prefix + "_summary.txt", summary);
  out << summary;
  return kExitOk;
}

// ---------------------------------------------------------------- simulate --

struct SimColumn {
  std::string name;
  std::vector<double> values;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (!a.seed) throw ConfigError("simulate requires --seed");
  const auto workers = resolve_workers(a.workers);
  if (a.window < 1) throw ConfigError("--window must be at least 1");
  std::vector<SimColumn> columns;
  nlohmann::json fits = nlohmann::json::array();

  if (a.input) {
    if (a.dist || a.spec) throw ConfigError("--input (fit mode) cannot be combined with --dist/--spec");
    if (a.picks < 1) throw ConfigError("--picks must be at least 1");
    enum class Kind { normal, skew_t, garch_normal, garch_skew_t };
    Kind kind;
    if (a.model == "normal") kind = Kind::normal;
    else if (a.model == "skew-t" || a.model == "skew_t") kind = Kind::skew_t;
    else if (a.model == "garch-normal" || a.model == "garch_normal") kind = Kind::garch_normal;
    else if (a.model == "garch-skew-t" || a.model == "garch_skew_t") kind = Kind::garch_skew_t;
    else throw ConfigError("unknown --model " + a.model);

    PanelArgs panel_args{*a.input, a.format, a.from, a.to};
    std::size_t dropped = 0;
    const auto samples = load_samples(panel_args, a.window, dropped);
    const auto fitted = as_data_error([&] { return parallel_map<Model>(samples.size(), workers, [&](std::size_t i) -> Model {
      const auto& x = samples[i].values;
      switch (kind) {
        case Kind::normal: return fit_iid(x, IidKind::normal);
        case Kind::skew_t: return fit_iid(x, IidKind::skew_t);
        case Kind::garch_normal: return garch_fit(x, Innovation::normal);
        case Kind::garch_skew_t: return garch_fit(x, Innovation::skew_t);
      }
      return DistSpec{};
    }); });
    const std::size_t picks = a.picks;
    const auto paths = parallel_map<std::vector<double>>(samples.size() * picks, workers, [&](std::size_t k) {
      RngStream rng(*a.seed, k);
      const auto& m = fitted[k / picks];
      if (const auto* g = std::get_if<GarchSpec>(&m)) return garch_simulate(*g, a.window, rng).returns;
      return sample(std::get<DistSpec>(m), a.window, rng);
    });
    for (std::size_t k = 0; k < paths.size(); ++k) {
      const auto& s = samples[k / picks];
      columns.push_back({fmt::format("{}_b{}_p{}", s.column, s.block, k % picks), paths[k]});
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& m = fitted[i];
      nlohmann::json spec = std::holds_alternative<GarchSpec>(m) ? to_json(std::get<GarchSpec>(m))
                                                                   : to_json(std::get<DistSpec>(m));
      fits.push_back({{"column", samples[i].column}, {"block", samples[i].block}, {"model", spec}});
    }
  } else {
    const Model model = resolve_model(a.dist, a.spec);
    if (a.samples < 1) throw ConfigError("--samples must be at least 1");
    const auto paths = parallel_map<std::vector<double>>(a.samples, workers, [&](std::size_t k) {
      RngStream rng(*a.seed, k);
      if (const auto* g = std::get_if<GarchSpec>(&model)) return garch_simulate(*g, a.window, rng).returns;
      return sample(std::get<DistSpec>(model), a.window, rng);
    });
    for (std::size_t k = 0; k < paths.size(); ++k) columns.push_back({fmt::format("s{}", k), paths[k]});
  }

  std::string csv;
  for (std::size_t c = 0; c < columns.size(); ++c) csv += (c ? "," : "") + columns[c].name;
  csv += "\n";
  for (std::size_t r = 0; r < a.window; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) csv += ",";
      csv += fmt::format("{}", columns[c].values[r]);
    }
    csv += "\n";
  }
  write_file(a.out, csv);
  if (!a.fits_out.empty()) write_file(a.fits_out, fits.dump(2) + "\n");
  out << fmt::format("wrote {} simulated series of length {} to {}\n", columns.size(), a.window, a.out);
  return kExitOk;
}

}  // namespace

unsigned default_workers() {
  if (const char* env = std::getenv("ESBT_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<unsigned>(v);
  }
  return 1;
}

void validate_backtest_report(const nlohmann::json& report) {
  require(report.is_object(), "report must be an object");
  require(report.contains("results") && report["results"].is_array(), "results array");
  require(report.contains("samples") && report["samples"].size() == report["results"].size(),
          "samples and results must align");
  for (const auto& r : report["results"]) {
    check_result(r);
    require(r["nominal_t"].get<std::size_t>() <= r["nominal_g"].get<std::size_t>(), "nominal_t <= nominal_g");
  }
  require(report.contains("summary") && report["summary"].contains("confusion") &&
              report["summary"].contains("trace_ratio"),
          "summary block");
  check_confusion(report["summary"]["confusion"]);
  require(report["summary"]["confusion"]["total"].get<std::size_t>() == report["results"].size(),
          "confusion total equals sample count");
}

void validate_compare_report(const nlohmann::json& report) {
  require(report.is_object() && report.contains("samples") && report["samples"].is_array(), "samples array");
  for (const auto& s : report["samples"]) {
    require(s.contains("var") && s.contains("es"), "sample needs var and es results");
    check_result(s["var"]);
    check_result(s["es"]);
    require(!s["es"]["z"].is_null(), "compare rows carry Z");
  }
  const auto& sum = report.at("summary");
  for (const char* k : {"confusion", "confusion_z"}) {
    require(sum.contains(k), std::string("summary missing ") + k);
    check_confusion(sum[k]);
    require(sum[k]["total"].get<std::size_t>() == report["samples"].size(), "confusion total equals sample count");
  }
}

void validate_null_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  require(line == "nominal_value,pmf,cdf", "null distribution CSV header");
  double sum = 0.0, prev_cdf = 0.0, last_cdf = 0.0;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    std::size_t k = 0;
    double pmf = 0.0, cdf = 0.0;
    require(std::sscanf(line.c_str(), "%zu,%lf,%lf", &k, &pmf, &cdf) == 3, "null CSV row: " + line);
    require(k == expected++, "nominal values must be consecutive from 0");
    require(pmf >= 0.0 && cdf + 1e-15 >= prev_cdf, "pmf nonnegative, cdf nondecreasing");
    sum += pmf;
    prev_cdf = last_cdf = cdf;
  }
  require(expected > 0, "null CSV has no rows");
  require(std::abs(sum - 1.0) <= 1e-12 && std::abs(last_cdf - 1.0) <= 1e-12, "pmf sums to 1 and cdf ends at 1");
}

void validate_heatmap_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  require(line == "nt_capped,ng_capped,count", "heatmap CSV header");
  while (std::getline(in, line)) {
    std::size_t nt = 0, ng = 0, count = 0;
    require(std::sscanf(line.c_str(), "%zu,%zu,%zu", &nt, &ng, &count) == 3, "heatmap row: " + line);
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Expected Shortfall and VaR backtesting toolkit", "esbt"};
  app.require_subcommand(1, 1);

  BacktestArgs bt;
  auto* backtest = app.add_subcommand("backtest", "Rolling backtest of every sample in a return panel");
  add_panel_options(backtest, bt.panel);
  add_rolling_options(backtest, bt.rolling);
  backtest->add_option("--estimator", bt.estimator, "var-hist, var-norm, es-hist or es-norm");
  backtest->add_flag("--with-z", bt.with_z, "Also compute the Z statistic (same estimator family)");
  backtest->add_option("--out", bt.out, "Report JSON path")->required();
  backtest->add_option("--heatmap", bt.heatmap, "Heatmap CSV path (default <out>_heatmap.csv)");
  backtest->add_option("--cap-t", bt.cap_t, "Cap on n*T_n in the heatmap");
  backtest->add_option("--cap-g", bt.cap_g, "Cap on n*G_n in the heatmap");
  backtest->add_option("--workers", bt.workers, "Worker threads (default $ESBT_WORKERS or 1)");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "VaR vs ES vs Z comparison for one estimator family");
  add_panel_options(compare, cmp.panel);
  add_rolling_options(compare, cmp.rolling);
  compare->add_option("--family", cmp.family, "hist or norm");
  compare->add_option("--estimator", cmp.estimators, "VaR and ES estimators of one family (repeatable)");
  compare->add_option("--out", cmp.out, "Report JSON path")->required();
  compare->add_option("--heatmap", cmp.heatmap, "Heatmap CSV path (default <out>_heatmap.csv)");
  compare->add_option("--cap-t", cmp.cap_t, "Cap on n*T_n in the heatmap");
  compare->add_option("--cap-g", cmp.cap_g, "Cap on n*G_n in the heatmap");
  compare->add_option("--workers", cmp.workers, "Worker threads (default $ESBT_WORKERS or 1)");

  McArgs mc;
  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo null distributions of n*T_n and n*G_n");
  mc_cmd->add_option("--dist", mc.dist, "Preset: normal, t3, t5, t10, t15");
  mc_cmd->add_option("--spec", mc.spec, "JSON file with a distribution or GARCH spec");
  mc_cmd->add_option("--runs", mc.runs, "Monte Carlo runs");
  mc_cmd->add_option("--n", mc.n, "Observations per run");
  mc_cmd->add_option("--seed", mc.seed, "Random seed (required)");
  mc_cmd->add_option("--var-alpha", mc.var_alpha, "VaR level");
  mc_cmd->add_option("--es-alpha", mc.es_alpha, "ES level");
  mc_cmd->add_option("--out-prefix", mc.out_prefix, "Writes <prefix>_var.csv, _es.csv, _summary.txt")->required();
  mc_cmd->add_option("--workers", mc.workers, "Worker threads (default $ESBT_WORKERS or 1)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Fit models to a panel and simulate, or sample a fixed model");
  simulate->add_option("--input", sim.input, "Return file to fit (fit mode)");
  simulate->add_option("--format", sim.format, "ff_daily or simple_csv");
  simulate->add_option("--from", sim.from, "First date kept (YYYYMMDD)");
  simulate->add_option("--to", sim.to, "Last date kept (YYYYMMDD)");
  simulate->add_option("--model", sim.model, "normal, skew-t, garch-normal or garch-skew-t");
  simulate->add_option("--picks", sim.picks, "Simulated series per fitted sample");
  simulate->add_option("--window", sim.window, "Sample length (fit windows and simulated series)");
  simulate->add_option("--dist", sim.dist, "Preset model (no-fit mode)");
  simulate->add_option("--spec", sim.spec, "JSON model file (no-fit mode)");
  simulate->add_option("--samples", sim.samples, "Number of series in no-fit mode");
  simulate->add_option("--seed", sim.seed, "Random seed (required)");
  simulate->add_option("--out", sim.out, "Output panel (simple_csv)")->required();
  simulate->add_option("--fits-out", sim.fits_out, "JSON file with fitted models");
  simulate->add_option("--workers", sim.workers, "Worker threads (default $ESBT_WORKERS or 1)");

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("esbt");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    if (backtest->parsed()) return cmd_backtest(bt, out);
    if (compare->parsed()) return cmd_compare(cmp, out);
    if (mc_cmd->parsed()) return cmd_mc(mc, out);
    if (simulate->parsed()) return cmd_simulate(sim, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const FitError& e) {
    err << "fit error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::domain_error& e) {
    // Unknown names (estimator, format, preset) surface as domain errors before any data is read.
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitConfigError;
}

}  // namespace esbt::cli
