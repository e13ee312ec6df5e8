#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pimfit/aggregate.hpp"
#include "pimfit/dataset.hpp"
#include "pimfit/design.hpp"
#include "pimfit/distributions.hpp"
#include "pimfit/errors.hpp"
#include "pimfit/pool.hpp"
#include "pimfit/rng.hpp"
#include "pimfit/scalable.hpp"
#include "pimfit/simgen.hpp"

namespace pimfit {

struct McGridSpec {
  GeneratingModel model;
  Eigen::Index n = 0;
  std::size_t runs = 0;
  std::vector<Method> methods;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int workers = 1;  // replicate-level parallelism
  SolverConfig solver;

  void validate() const {
    model.validate();
    if (n < 4) throw ConfigError("simulation sample size too small");
    if (runs < 1) throw ConfigError("at least one Monte Carlo run is required");
    if (methods.empty()) throw ConfigError("method grid is empty");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ConfigError("alpha must lie strictly between 0 and 1");
  }

  // The PIM fitted in every cell: probit link, one linear term per generated
  // column. The tracked coefficient is the predictor slope (index 0).
  DesignSpec design() const {
    DesignSpec spec;
    spec.link = LinkKind::Probit;
    spec.terms.push_back({Term::Kind::Linear, model.x_name, 0.0, 0.0});
    for (const auto& cov : model.covariates)
      spec.terms.push_back({Term::Kind::Linear, cov.name, 0.0, 0.0});
    return spec;
  }
};

struct CellReport {
  Method method;
  double mse = 0.0;
  double ec_scaled = 0.0;
  double ec_adjusted = 0.0;
  double mean_var_scaled = 0.0;
  double mean_var_adjusted = 0.0;
  std::vector<double> estimate_samples;  // pooled slope, replicate order
  double mean_fit_seconds = 0.0;
  double sd_fit_seconds = 0.0;
  // Hash of the dataset each replicate consumed; equal across cells by the
  // shared-data contract.
  std::vector<std::uint64_t> dataset_hashes;
};

struct SimulationReport {
  std::string model_name;
  Eigen::Index n = 0;
  std::size_t runs = 0;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  double true_beta_value = 0.0;
  std::string tracked_coefficient;
  std::vector<CellReport> cells;
};

inline SimulationReport run_mc_study(const McGridSpec& grid) {
  grid.validate();
  const DesignSpec spec = grid.design();
  const double truth = true_beta(grid.model).value;
  const std::size_t cells = grid.methods.size();
  const std::size_t runs = grid.runs;

  struct RunRecord {
    double estimate = 0.0;
    bool covered_scaled = false;
    bool covered_adjusted = false;
    double var_scaled = 0.0;
    double var_adjusted = 0.0;
    double seconds = 0.0;
    std::uint64_t data_hash = 0;
  };
  std::vector<std::vector<RunRecord>> records(
      cells, std::vector<RunRecord>(runs));

  SolverConfig piece_solver = grid.solver;
  piece_solver.threads = 1;  // replicates own the parallelism

  parallel_for(runs, grid.workers, [&](std::size_t r) {
    const Dataset data =
        generate(grid.model, grid.n, derive_seed(grid.seed, 0, r));
    const std::uint64_t hash = dataset_hash(data);
    for (std::size_t m = 0; m < cells; ++m) {
      const Method& method = grid.methods[m];
      const std::uint64_t method_seed = derive_seed(grid.seed, 1, r, m);
      const auto started = std::chrono::steady_clock::now();
      AggregatedFit agg;
      try {
        if (method.kind == Method::Kind::Partition) {
          agg = partition_fit(data, spec,
                              PartitionPlan::by_count(grid.n, method.s, method_seed),
                              grid.alpha, piece_solver, 1);
        } else {
          SubsamplePlan plan;
          plan.k = method.k;
          plan.b = method.b;
          plan.seed = method_seed;
          agg = subsample_fit(data, spec, plan, grid.alpha, piece_solver, 1);
        }
      } catch (const std::exception& e) {
        throw NumericalError("replicate " + std::to_string(r) + ", cell " +
                             method.to_string() + ": " + e.what());
      }
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
              .count();
      RunRecord& rec = records[m][r];
      rec.estimate = agg.beta_pooled[0];
      rec.covered_scaled = agg.ci_scaled[0].lower <= truth &&
                           truth <= agg.ci_scaled[0].upper;
      rec.covered_adjusted = agg.ci_adjusted[0].lower <= truth &&
                             truth <= agg.ci_adjusted[0].upper;
      rec.var_scaled = agg.var_scaled[0];
      rec.var_adjusted = agg.var_adjusted[0];
      rec.seconds = seconds;
      rec.data_hash = hash;
    }
  });

  SimulationReport report;
  report.model_name = grid.model.name();
  report.n = grid.n;
  report.runs = runs;
  report.alpha = grid.alpha;
  report.seed = grid.seed;
  report.true_beta_value = truth;
  report.tracked_coefficient = spec.terms.front().label();
  report.cells.reserve(cells);
  for (std::size_t m = 0; m < cells; ++m) {
    CellReport cell;
    cell.method = grid.methods[m];
    cell.estimate_samples.reserve(runs);
    cell.dataset_hashes.reserve(runs);
    double sum_sq_err = 0.0, sum_vs = 0.0, sum_va = 0.0, sum_sec = 0.0;
    std::size_t n_cov_s = 0, n_cov_a = 0;
    for (const RunRecord& rec : records[m]) {
      cell.estimate_samples.push_back(rec.estimate);
      cell.dataset_hashes.push_back(rec.data_hash);
      const double err = rec.estimate - truth;
      sum_sq_err += err * err;
      sum_vs += rec.var_scaled;
      sum_va += rec.var_adjusted;
      sum_sec += rec.seconds;
      n_cov_s += rec.covered_scaled ? 1 : 0;
      n_cov_a += rec.covered_adjusted ? 1 : 0;
    }
    const auto dr = static_cast<double>(runs);
    cell.mse = sum_sq_err / dr;
    cell.ec_scaled = static_cast<double>(n_cov_s) / dr;
    cell.ec_adjusted = static_cast<double>(n_cov_a) / dr;
    cell.mean_var_scaled = sum_vs / dr;
    cell.mean_var_adjusted = sum_va / dr;
    cell.mean_fit_seconds = sum_sec / dr;
    double ss = 0.0;
    for (const RunRecord& rec : records[m]) {
      const double d = rec.seconds - cell.mean_fit_seconds;
      ss += d * d;
    }
    cell.sd_fit_seconds = runs > 1 ? std::sqrt(ss / (dr - 1.0)) : 0.0;
    report.cells.push_back(std::move(cell));
  }
  return report;
}

// Normal QQ data: standardized order statistics against N(0,1) quantiles at
// plotting positions (k - 0.5)/m. Emitted as data, never rendered here.
inline std::vector<std::pair<double, double>> qq_points(
    const std::vector<double>& samples) {
  const std::size_t m = samples.size();
  if (m < 3) throw ConfigError("qq_points needs at least 3 samples");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(m - 1));
  if (!(sd > 0.0)) throw NumericalError("qq_points: zero sample variance");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> points;
  points.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double prob =
        (static_cast<double>(k) + 0.5) / static_cast<double>(m);
    points.emplace_back(norm_quantile(prob), (sorted[k] - mean) / sd);
  }
  return points;
}

}  // namespace pimfit
