#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pimfit/aggregate.hpp"
#include "pimfit/config.hpp"
#include "pimfit/csv.hpp"
#include "pimfit/diagnostics.hpp"
#include "pimfit/errors.hpp"
#include "pimfit/fit.hpp"
#include "pimfit/mc.hpp"
#include "pimfit/wald.hpp"

namespace pimfit {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

namespace detail {

// CSV numbers use 10 significant digits; JSON keeps full (round-trippable)
// doubles via the serializer.
inline std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline ordered_json json_vector(const Eigen::VectorXd& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace detail

struct CoefficientReportRow {
  std::string name;
  double estimate = 0.0;
  // Primary construction: the sandwich SE for a full fit, the adjusted
  // sandwich SE for aggregated fits. z/p/ci refer to it.
  double se = 0.0;
  double z = 0.0;
  double p = 1.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  // Aggregated fits also expose the scaled construction.
  std::optional<double> se_scaled;
  std::optional<double> ci_scaled_lower;
  std::optional<double> ci_scaled_upper;
};

struct PredictionReportRow {
  std::vector<double> contrast;
  double pi = 0.5;
  double ci_lower = 0.0;
  double ci_upper = 1.0;
};

struct FitReport {
  int schema_version = kReportSchemaVersion;
  FitConfig config;
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  Eigen::Index n_used = 0;
  std::string method;  // resolved, e.g. "partition:117"
  std::size_t n_pieces = 0;
  std::vector<CoefficientReportRow> coefficients;
  std::vector<PredictionReportRow> predictions;
  std::vector<std::string> warnings;
  // Optional per-piece estimates (emit_pieces).
  std::vector<Eigen::VectorXd> piece_betas;
  // Timing block; the only fields allowed to differ between identical runs.
  double total_seconds = 0.0;
  double piece_mean_seconds = 0.0;
  double piece_sd_seconds = 0.0;
};

inline Eigen::VectorXd parse_contrast(const std::string& text, Eigen::Index p) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad contrast entry '" + item + "' in '" + text + "'");
    }
  }
  if (static_cast<Eigen::Index>(values.size()) != p)
    throw ConfigError("contrast '" + text + "' has " +
                      std::to_string(values.size()) + " entries, expected " +
                      std::to_string(p));
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

inline FitReport build_fit_report(const FitConfig& config, const PimFit& fit,
                                  const CsvLoadInfo& load, double total_seconds) {
  FitReport report;
  report.config = config;
  report.rows_read = load.rows_read;
  report.rows_dropped = load.rows_dropped;
  report.n_used = fit.n_obs;
  report.method = "full";
  report.n_pieces = 1;
  report.total_seconds = total_seconds;
  const auto wald = wald_test(fit, Eigen::VectorXd::Zero(fit.beta.size()),
                              config.alpha);
  for (const auto& w : wald) {
    CoefficientReportRow row;
    row.name = w.name;
    row.estimate = w.estimate;
    row.se = w.std_error;
    row.z = w.z_statistic;
    row.p = w.p_value;
    row.ci_lower = w.ci_lower;
    row.ci_upper = w.ci_upper;
    report.coefficients.push_back(std::move(row));
  }
  for (const auto& text : config.predict) {
    const Eigen::VectorXd contrast = parse_contrast(text, fit.beta.size());
    const PiPrediction pred = predict_pi(fit, contrast, config.alpha);
    PredictionReportRow row;
    row.contrast.assign(contrast.data(), contrast.data() + contrast.size());
    row.pi = pred.pi_estimate;
    row.ci_lower = pred.ci_lower;
    row.ci_upper = pred.ci_upper;
    report.predictions.push_back(std::move(row));
  }
  if (config.emit_pieces) report.piece_betas.push_back(fit.beta);
  return report;
}

inline FitReport build_fit_report(const FitConfig& config,
                                  const AggregatedFit& agg,
                                  const CsvLoadInfo& load, double total_seconds) {
  FitReport report;
  report.config = config;
  report.rows_read = load.rows_read;
  report.rows_dropped = load.rows_dropped;
  report.n_used = agg.n_total;
  report.method = agg.method.to_string();
  report.n_pieces = agg.per_piece.size();
  report.warnings = agg.warnings;
  report.total_seconds = total_seconds;
  if (!agg.piece_seconds.empty()) {
    double mean = 0.0;
    for (double s : agg.piece_seconds) mean += s;
    mean /= static_cast<double>(agg.piece_seconds.size());
    double ss = 0.0;
    for (double s : agg.piece_seconds) ss += (s - mean) * (s - mean);
    report.piece_mean_seconds = mean;
    report.piece_sd_seconds =
        agg.piece_seconds.size() > 1
            ? std::sqrt(ss / static_cast<double>(agg.piece_seconds.size() - 1))
            : 0.0;
  }

  const auto names = agg.coefficient_names();
  for (Eigen::Index c = 0; c < agg.beta_pooled.size(); ++c) {
    CoefficientReportRow row;
    row.name = static_cast<std::size_t>(c) < names.size()
                   ? names[static_cast<std::size_t>(c)]
                   : "beta" + std::to_string(c);
    row.estimate = agg.beta_pooled[c];
    row.se = std::sqrt(std::max(0.0, agg.var_adjusted[c]));
    row.z = row.se > 0.0 ? row.estimate / row.se : 0.0;
    row.p = row.se > 0.0 ? norm_two_sided_p(row.z) : 1.0;
    row.ci_lower = agg.ci_adjusted[static_cast<std::size_t>(c)].lower;
    row.ci_upper = agg.ci_adjusted[static_cast<std::size_t>(c)].upper;
    row.se_scaled = std::sqrt(std::max(0.0, agg.var_scaled[c]));
    row.ci_scaled_lower = agg.ci_scaled[static_cast<std::size_t>(c)].lower;
    row.ci_scaled_upper = agg.ci_scaled[static_cast<std::size_t>(c)].upper;
    report.coefficients.push_back(std::move(row));
  }
  for (const auto& text : config.predict) {
    const Eigen::VectorXd contrast = parse_contrast(text, agg.beta_pooled.size());
    PimFit pooled;
    pooled.beta = agg.beta_pooled;
    pooled.covariance = agg.pooled_covariance;
    pooled.link = agg.per_piece.front().link;
    const PiPrediction pred = predict_pi(pooled, contrast, agg.alpha);
    PredictionReportRow row;
    row.contrast.assign(contrast.data(), contrast.data() + contrast.size());
    row.pi = pred.pi_estimate;
    row.ci_lower = pred.ci_lower;
    row.ci_upper = pred.ci_upper;
    report.predictions.push_back(std::move(row));
  }
  if (config.emit_pieces) {
    for (const auto& piece : agg.per_piece) report.piece_betas.push_back(piece.beta);
  }
  return report;
}

inline ordered_json to_json(const FitReport& report) {
  ordered_json j;
  j["schema_version"] = report.schema_version;
  ordered_json cfg;
  cfg["input"] = report.config.input_path;
  cfg["response"] = report.config.response;
  cfg["terms"] = report.config.terms;
  cfg["link"] = report.config.link;
  cfg["method"] = report.config.method;
  if (report.config.partitions) cfg["partitions"] = report.config.partitions;
  if (report.config.partition_size)
    cfg["partition_size"] = report.config.partition_size;
  if (report.config.k) cfg["k"] = report.config.k;
  if (report.config.b) cfg["b"] = report.config.b;
  cfg["alpha"] = report.config.alpha;
  cfg["seed"] = report.config.seed;
  cfg["workers"] = report.config.workers;
  cfg["format"] = report.config.output_format;
  j["config"] = std::move(cfg);
  j["data"] = {{"rows_read", report.rows_read},
               {"rows_dropped", report.rows_dropped},
               {"n_used", report.n_used}};
  j["method"] = report.method;
  j["n_pieces"] = report.n_pieces;
  ordered_json coefs = ordered_json::array();
  for (const auto& row : report.coefficients) {
    ordered_json c;
    c["name"] = row.name;
    c["estimate"] = row.estimate;
    c["se"] = row.se;
    c["z"] = row.z;
    c["p"] = row.p;
    c["ci_lower"] = row.ci_lower;
    c["ci_upper"] = row.ci_upper;
    if (row.se_scaled) {
      c["se_scaled"] = *row.se_scaled;
      c["ci_scaled_lower"] = *row.ci_scaled_lower;
      c["ci_scaled_upper"] = *row.ci_scaled_upper;
    }
    coefs.push_back(std::move(c));
  }
  j["coefficients"] = std::move(coefs);
  ordered_json preds = ordered_json::array();
  for (const auto& row : report.predictions) {
    preds.push_back({{"contrast", row.contrast},
                     {"pi", row.pi},
                     {"ci_lower", row.ci_lower},
                     {"ci_upper", row.ci_upper}});
  }
  j["predictions"] = std::move(preds);
  j["warnings"] = report.warnings;
  if (!report.piece_betas.empty()) {
    ordered_json pieces = ordered_json::array();
    for (const auto& beta : report.piece_betas)
      pieces.push_back(detail::json_vector(beta));
    j["piece_estimates"] = std::move(pieces);
  }
  j["timing"] = {{"total_seconds", report.total_seconds},
                 {"piece_mean_seconds", report.piece_mean_seconds},
                 {"piece_sd_seconds", report.piece_sd_seconds}};
  return j;
}

inline std::string to_csv(const FitReport& report) {
  std::ostringstream os;
  os << "name,estimate,se,z,p,ci_lower,ci_upper,se_scaled,ci_scaled_lower,"
        "ci_scaled_upper\n";
  for (const auto& row : report.coefficients) {
    os << row.name << ',' << detail::csv_number(row.estimate) << ','
       << detail::csv_number(row.se) << ',' << detail::csv_number(row.z) << ','
       << detail::csv_number(row.p) << ',' << detail::csv_number(row.ci_lower)
       << ',' << detail::csv_number(row.ci_upper) << ',';
    if (row.se_scaled) {
      os << detail::csv_number(*row.se_scaled) << ','
         << detail::csv_number(*row.ci_scaled_lower) << ','
         << detail::csv_number(*row.ci_scaled_upper);
    } else {
      os << ",,";
    }
    os << '\n';
  }
  return os.str();
}

inline ordered_json to_json(const SimulationReport& report) {
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["model"] = report.model_name;
  j["n"] = report.n;
  j["runs"] = report.runs;
  j["alpha"] = report.alpha;
  j["seed"] = report.seed;
  j["true_beta"] = report.true_beta_value;
  j["tracked_coefficient"] = report.tracked_coefficient;
  ordered_json cells = ordered_json::array();
  for (const auto& cell : report.cells) {
    ordered_json c;
    c["method"] = cell.method.to_string();
    c["mse"] = cell.mse;
    c["ec_scaled"] = cell.ec_scaled;
    c["ec_adjusted"] = cell.ec_adjusted;
    c["mean_var_scaled"] = cell.mean_var_scaled;
    c["mean_var_adjusted"] = cell.mean_var_adjusted;
    c["mean_fit_seconds"] = cell.mean_fit_seconds;
    c["sd_fit_seconds"] = cell.sd_fit_seconds;
    c["estimate_samples"] = cell.estimate_samples;
    c["dataset_hashes"] = cell.dataset_hashes;
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  return j;
}

// Long-format metrics: one row per cell per scalar metric.
inline std::string to_metrics_csv(const SimulationReport& report) {
  std::ostringstream os;
  os << "cell,metric,value\n";
  for (const auto& cell : report.cells) {
    const std::string name = cell.method.to_string();
    const std::pair<const char*, double> metrics[] = {
        {"mse", cell.mse},
        {"ec_scaled", cell.ec_scaled},
        {"ec_adjusted", cell.ec_adjusted},
        {"mean_var_scaled", cell.mean_var_scaled},
        {"mean_var_adjusted", cell.mean_var_adjusted},
        {"mean_fit_seconds", cell.mean_fit_seconds},
        {"sd_fit_seconds", cell.sd_fit_seconds}};
    for (const auto& [metric, value] : metrics)
      os << name << ',' << metric << ',' << detail::csv_number(value) << '\n';
  }
  return os.str();
}

inline std::string to_samples_csv(const SimulationReport& report) {
  std::ostringstream os;
  os << "cell,replicate,estimate\n";
  for (const auto& cell : report.cells) {
    const std::string name = cell.method.to_string();
    for (std::size_t r = 0; r < cell.estimate_samples.size(); ++r)
      os << name << ',' << r << ','
         << detail::csv_number(cell.estimate_samples[r]) << '\n';
  }
  return os.str();
}

inline std::string to_csv(const ResidualSet& residuals) {
  std::ostringstream os;
  os << "pseudo_index,i,j,linear_predictor,residual\n";
  for (const auto& e : residuals.entries) {
    os << e.pseudo_index << ',' << e.i << ',' << e.j << ','
       << detail::csv_number(e.linear_predictor) << ','
       << detail::csv_number(e.residual) << '\n';
  }
  return os.str();
}

inline std::string loess_series_csv(
    const std::vector<std::pair<std::string,
                                std::vector<std::pair<double, double>>>>& series) {
  std::ostringstream os;
  os << "series,x,fitted\n";
  for (const auto& [name, curve] : series) {
    for (const auto& [x, fitted] : curve)
      os << name << ',' << detail::csv_number(x) << ','
         << detail::csv_number(fitted) << '\n';
  }
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("failed while writing '" + path + "'");
}

}  // namespace pimfit
