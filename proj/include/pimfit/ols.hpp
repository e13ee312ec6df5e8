#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <cmath>
#include <string>
#include <vector>

#include "pimfit/dataset.hpp"
#include "pimfit/distributions.hpp"
#include "pimfit/errors.hpp"

namespace pimfit {

// Ordinary least squares with an intercept; the comparison fitter and the
// beta = alpha/(sqrt(2) sigma) bridge oracle.
struct OlsFit {
  std::vector<std::string> names;  // "(Intercept)" first
  Eigen::VectorXd alpha_hat;
  Eigen::VectorXd std_errors;
  Eigen::VectorXd t_statistics;
  Eigen::VectorXd p_values;
  double sigma_hat = 0.0;  // residual SD
  Eigen::Index df_residual = 0;
};

inline OlsFit ols_fit(const Dataset& data, const std::vector<std::string>& predictors) {
  data.validate();
  const Eigen::Index n = data.n();
  const Eigen::Index p = static_cast<Eigen::Index>(predictors.size()) + 1;
  if (n <= p) throw DataError("too few rows for OLS with " + std::to_string(p) + " coefficients");

  Eigen::MatrixXd design(n, p);
  design.col(0).setOnes();
  OlsFit out;
  out.names.push_back("(Intercept)");
  for (std::size_t c = 0; c < predictors.size(); ++c) {
    design.col(1 + static_cast<Eigen::Index>(c)) =
        data.x.col(data.column_index(predictors[c]));
    out.names.push_back(predictors[c]);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) throw DesignError("rank-deficient OLS design");
  out.alpha_hat = qr.solve(data.y);

  const Eigen::VectorXd residuals = data.y - design * out.alpha_hat;
  out.df_residual = n - p;
  const double ss_res = residuals.squaredNorm();
  out.sigma_hat = std::sqrt(ss_res / static_cast<double>(out.df_residual));

  const Eigen::MatrixXd xtx_inv =
      (design.transpose() * design).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  out.std_errors = (xtx_inv.diagonal() * ss_res / static_cast<double>(out.df_residual))
                       .cwiseMax(0.0)
                       .cwiseSqrt();
  out.t_statistics.resize(p);
  out.p_values.resize(p);
  for (Eigen::Index c = 0; c < p; ++c) {
    out.t_statistics[c] =
        out.std_errors[c] > 0.0 ? out.alpha_hat[c] / out.std_errors[c] : 0.0;
    out.p_values[c] = out.sigma_hat > 0.0
                          ? t_two_sided_p(out.t_statistics[c],
                                          static_cast<double>(out.df_residual))
                          : 0.0;
  }
  return out;
}

}  // namespace pimfit
