// pimfit - fit probabilistic index models on datasets where the quadratic
// pseudo-observation expansion makes the naive fit impractical.
//
// Subcommands:
//   fit       full, partitioned or subsampled PIM fit from a CSV
//   simulate  Monte Carlo study over a method grid (JSON + CSV reports)
//   diagnose  pseudo-observation residuals and LOESS curves

#include <CLI11.hpp>
#include <chrono>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pimfit/pimfit.hpp"

namespace {

using namespace pimfit;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int hardware_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

std::vector<std::string> term_columns(const std::vector<TermExpr>& exprs) {
  std::vector<std::string> cols;
  for (const auto& e : exprs) {
    if (std::find(cols.begin(), cols.end(), e.column) == cols.end())
      cols.push_back(e.column);
  }
  return cols;
}

struct LoadedData {
  Dataset data;
  DesignSpec spec;
  CsvLoadInfo info;
};

LoadedData load_and_resolve(const FitConfig& config) {
  std::vector<TermExpr> exprs;
  for (const auto& t : config.terms) exprs.push_back(parse_term_expr(t));
  LoadedData out;
  out.data = load_csv(config.input_path, config.response, term_columns(exprs),
                      &out.info);
  out.spec = resolve_design(exprs, link_from_string(config.link), out.data);
  return out;
}

void emit_fit_report(const FitReport& report, const FitConfig& config) {
  const std::string text = config.output_format == "json"
                               ? to_json(report).dump(2) + "\n"
                               : to_csv(report);
  if (config.output_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(config.output_path, text);
    std::cerr << "report written to " << config.output_path << "\n";
  }
}

int run_fit(const FitConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  LoadedData loaded = load_and_resolve(config);
  const int workers = config.workers > 0 ? config.workers : hardware_workers();
  if (loaded.info.rows_dropped > 0)
    std::cerr << loaded.info.rows_dropped
              << " incomplete rows dropped; " << loaded.data.n()
              << " complete cases used\n";

  auto seconds_since = [](auto t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  FitReport report;
  if (config.method == "full") {
    if (static_cast<std::size_t>(loaded.data.n()) > config.full_cap &&
        !config.force_full) {
      throw ConfigError(
          "n = " + std::to_string(loaded.data.n()) + " exceeds the full-fit cap " +
          std::to_string(config.full_cap) +
          " (the pseudo-observation set grows quadratically); use "
          "--method partition or --method subsample, or pass --force-full");
    }
    SolverConfig solver;
    solver.threads = workers;
    const PimFit fit = fit_pim(loaded.data, loaded.spec, solver);
    report = build_fit_report(config, fit, loaded.info, seconds_since(started));
  } else if (config.method == "partition") {
    const auto plan =
        config.partitions
            ? PartitionPlan::by_count(loaded.data.n(), config.partitions,
                                      config.seed)
            : PartitionPlan::by_piece_size(
                  loaded.data.n(),
                  static_cast<Eigen::Index>(config.partition_size), config.seed);
    const AggregatedFit agg = partition_fit(loaded.data, loaded.spec, plan,
                                            config.alpha, {}, workers);
    report = build_fit_report(config, agg, loaded.info, seconds_since(started));
  } else {
    SubsamplePlan plan;
    plan.k = config.k;
    plan.b = config.b;
    plan.seed = config.seed;
    const AggregatedFit agg = subsample_fit(loaded.data, loaded.spec, plan,
                                            config.alpha, {}, workers);
    report = build_fit_report(config, agg, loaded.info, seconds_since(started));
  }
  for (const auto& warning : report.warnings) std::cerr << "warning: " << warning << "\n";
  emit_fit_report(report, config);
  return kExitOk;
}

int run_simulate(const SimulateConfig& config) {
  config.validate();
  McGridSpec grid;
  grid.model = GeneratingModel::by_name(config.model);
  grid.n = static_cast<Eigen::Index>(config.n);
  grid.runs = config.runs;
  for (const auto& m : config.methods) grid.methods.push_back(Method::parse(m));
  grid.alpha = config.alpha;
  grid.seed = config.seed;
  grid.workers = config.workers > 0 ? config.workers : hardware_workers();
  const SimulationReport report = run_mc_study(grid);

  write_text_file(config.out_prefix + ".json", to_json(report).dump(2) + "\n");
  write_text_file(config.out_prefix + ".csv", to_metrics_csv(report));
  write_text_file(config.out_prefix + "_samples.csv", to_samples_csv(report));
  std::cerr << "reports written to " << config.out_prefix << ".json, "
            << config.out_prefix << ".csv, " << config.out_prefix
            << "_samples.csv\n";
  for (const auto& cell : report.cells) {
    std::cout << cell.method.to_string() << ": mse=" << cell.mse
              << " ec_scaled=" << cell.ec_scaled
              << " ec_adjusted=" << cell.ec_adjusted
              << " mean_fit_seconds=" << cell.mean_fit_seconds << "\n";
  }
  return kExitOk;
}

struct DiagnoseOptions {
  FitConfig fit_config;
  std::string from_report;
  std::size_t m = 50;
  double span = 0.75;
  std::string out_prefix = "diagnostics";
};

int run_diagnose(const DiagnoseOptions& options) {
  FitConfig config = options.fit_config;
  config.output_format = "json";
  config.validate();
  LoadedData loaded = load_and_resolve(config);

  PimFit fit;
  if (!options.from_report.empty()) {
    // Reuse pooled estimates from a stored report instead of refitting.
    const auto j = ordered_json::parse(detail::read_file(options.from_report));
    fit.beta.resize(loaded.spec.p());
    const auto& coefs = j.at("coefficients");
    if (static_cast<Eigen::Index>(coefs.size()) != loaded.spec.p())
      throw ConfigError("stored report has " + std::to_string(coefs.size()) +
                        " coefficients but the design has " +
                        std::to_string(loaded.spec.p()));
    for (Eigen::Index c = 0; c < loaded.spec.p(); ++c)
      fit.beta[c] = coefs[static_cast<std::size_t>(c)].at("estimate").get<double>();
    fit.link = loaded.spec.link;
    fit.design_fingerprint = loaded.spec.fingerprint();
    fit.coefficient_names = loaded.spec.coefficient_names();
  } else {
    const int workers = config.workers > 0 ? config.workers : hardware_workers();
    if (config.method == "full") {
      if (static_cast<std::size_t>(loaded.data.n()) > config.full_cap &&
          !config.force_full) {
        throw ConfigError(
            "n = " + std::to_string(loaded.data.n()) +
            " exceeds the full-fit cap " + std::to_string(config.full_cap) +
            "; use --method partition for the refit, or pass --force-full");
      }
      SolverConfig solver;
      solver.threads = workers;
      fit = fit_pim(loaded.data, loaded.spec, solver);
    } else if (config.method == "partition") {
      const auto plan =
          config.partitions
              ? PartitionPlan::by_count(loaded.data.n(), config.partitions,
                                        config.seed)
              : PartitionPlan::by_piece_size(
                    loaded.data.n(),
                    static_cast<Eigen::Index>(config.partition_size),
                    config.seed);
      const AggregatedFit agg = partition_fit(loaded.data, loaded.spec, plan,
                                              config.alpha, {}, workers);
      fit.beta = agg.beta_pooled;
      fit.covariance = agg.pooled_covariance;
      fit.link = loaded.spec.link;
      fit.design_fingerprint = loaded.spec.fingerprint();
      fit.coefficient_names = loaded.spec.coefficient_names();
    } else {
      throw ConfigError("diagnose supports method full or partition");
    }
  }

  const ResidualSet residuals =
      pim_residuals(loaded.data, loaded.spec, fit, options.m, config.seed);
  write_text_file(options.out_prefix + "_residuals.csv", to_csv(residuals));

  std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> series;
  if (residuals.entries.size() >= 10) {
    std::vector<std::pair<double, double>> by_index, by_eta;
    for (const auto& e : residuals.entries) {
      by_index.emplace_back(static_cast<double>(e.pseudo_index), e.residual);
      by_eta.emplace_back(e.linear_predictor, e.residual);
    }
    series.emplace_back("pseudo_index", loess_smooth(by_index, options.span));
    series.emplace_back("linear_predictor", loess_smooth(by_eta, options.span));
  } else {
    std::cerr << "note: fewer than 10 residuals, LOESS skipped\n";
  }
  write_text_file(options.out_prefix + "_loess.csv", loess_series_csv(series));
  std::cerr << residuals.entries.size() << " residuals written to "
            << options.out_prefix << "_residuals.csv\n";
  return kExitOk;
}

// Shared fit/diagnose flag wiring. Values present on the command line
// override the config file.
struct FitFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> input;
  std::optional<std::string> response;
  std::vector<std::string> terms;
  std::optional<std::string> link;
  std::optional<std::string> method;
  std::optional<std::size_t> partitions;
  std::optional<std::size_t> partition_size;
  std::optional<std::size_t> k;
  std::optional<std::size_t> b;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::vector<std::string> predict;
  bool emit_pieces = false;
  std::optional<std::size_t> full_cap;
  bool force_full = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (key = value)");
    cmd->add_option("--input", input, "input CSV path");
    cmd->add_option("--response", response, "response column name");
    cmd->add_option("--term", terms,
                    "design term (repeatable): linear:COL, quad:COL, factor:COL@BASE");
    cmd->add_option("--link", link, "link function: logit|probit");
    cmd->add_option("--method", method, "full|partition|subsample");
    cmd->add_option("--partitions", partitions, "partition count S");
    cmd->add_option("--partition-size", partition_size,
                    "rows per partition (alternative to --partitions)");
    cmd->add_option("--k", k, "subsample size K");
    cmd->add_option("--b", b, "subsample iterations B");
    cmd->add_option("--alpha", alpha, "CI level alpha (default 0.05)");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--workers", workers, "worker threads (default: cores)");
    cmd->add_option("--out", out, "output path (default: stdout)");
    cmd->add_option("--format", format, "json|csv");
    cmd->add_option("--predict", predict,
                    "PI contrast, comma-separated z values (repeatable)");
    cmd->add_flag("--emit-pieces", emit_pieces, "include per-piece estimates");
    cmd->add_option("--full-cap", full_cap,
                    "largest n allowed for --method full (default 50000)");
    cmd->add_flag("--force-full", force_full, "override the full-fit cap");
  }

  FitConfig merge() const {
    FitConfig c = config_path ? FitConfig::parse_file(*config_path) : FitConfig{};
    if (input) c.input_path = *input;
    if (response) c.response = *response;
    if (!terms.empty()) c.terms = terms;
    if (link) c.link = *link;
    if (method) c.method = *method;
    if (partitions) c.partitions = *partitions;
    if (partition_size) c.partition_size = *partition_size;
    if (k) c.k = *k;
    if (b) c.b = *b;
    if (alpha) c.alpha = *alpha;
    if (seed) c.seed = *seed;
    if (workers) c.workers = *workers;
    if (out) c.output_path = *out;
    if (format) c.output_format = *format;
    if (!predict.empty()) c.predict = predict;
    if (emit_pieces) c.emit_pieces = true;
    if (full_cap) c.full_cap = *full_cap;
    if (force_full) c.force_full = true;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probabilistic index models at scale"};
  app.require_subcommand(1);

  FitFlags fit_flags;
  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a PIM from a CSV");
  fit_flags.attach(fit_cmd);

  std::optional<std::string> sim_config_path;
  std::optional<int> sim_workers;
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::string> sim_prefix;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "run a Monte Carlo grid");
  sim_cmd->add_option("--config", sim_config_path, "grid config file")->required();
  sim_cmd->add_option("--workers", sim_workers, "worker threads");
  sim_cmd->add_option("--seed", sim_seed, "override the grid seed");
  sim_cmd->add_option("--out-prefix", sim_prefix, "output file prefix");

  FitFlags diag_flags;
  DiagnoseOptions diag;
  CLI::App* diag_cmd =
      app.add_subcommand("diagnose", "pseudo-observation residuals + LOESS");
  diag_flags.attach(diag_cmd);
  diag_cmd->add_option("--m", diag.m, "subset size (default 50)");
  diag_cmd->add_option("--span", diag.span, "LOESS span (default 0.75)");
  diag_cmd->add_option("--from-report", diag.from_report,
                       "reuse estimates from a stored JSON report");
  diag_cmd->add_option("--out-prefix", diag.out_prefix,
                       "output file prefix (default diagnostics)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit_flags.merge());
    if (sim_cmd->parsed()) {
      SimulateConfig config = SimulateConfig::parse_file(*sim_config_path);
      if (sim_workers) config.workers = *sim_workers;
      if (sim_seed) config.seed = *sim_seed;
      if (sim_prefix) config.out_prefix = *sim_prefix;
      return run_simulate(config);
    }
    if (diag_cmd->parsed()) {
      diag.fit_config = diag_flags.merge();
      return run_diagnose(diag);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const AggregationError& e) {
    std::cerr << "aggregation error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DesignError& e) {
    std::cerr << "design error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
