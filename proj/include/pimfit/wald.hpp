#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "pimfit/distributions.hpp"
#include "pimfit/errors.hpp"
#include "pimfit/fit.hpp"

namespace pimfit {

struct WaldResult {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double z_statistic = 0.0;
  double p_value = 1.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double null_value = 0.0;
};

inline std::vector<WaldResult> wald_test(const PimFit& fit,
                                         const Eigen::VectorXd& null_values,
                                         double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("alpha must lie strictly between 0 and 1");
  if (null_values.size() != fit.beta.size())
    throw ConfigError("null value count does not match coefficient count");
  const double zq = norm_quantile(1.0 - alpha / 2.0);
  std::vector<WaldResult> out;
  out.reserve(static_cast<std::size_t>(fit.beta.size()));
  for (Eigen::Index k = 0; k < fit.beta.size(); ++k) {
    WaldResult r;
    if (static_cast<std::size_t>(k) < fit.coefficient_names.size())
      r.name = fit.coefficient_names[static_cast<std::size_t>(k)];
    r.estimate = fit.beta[k];
    const double var = fit.covariance(k, k);
    r.std_error = var > 0.0 ? std::sqrt(var) : 0.0;
    if (r.std_error <= 0.0)
      throw NumericalError("degenerate (zero) standard error for coefficient " +
                           std::to_string(k));
    r.null_value = null_values[k];
    r.z_statistic = (r.estimate - r.null_value) / r.std_error;
    r.p_value = norm_two_sided_p(r.z_statistic);
    r.ci_lower = r.estimate - zq * r.std_error;
    r.ci_upper = r.estimate + zq * r.std_error;
    out.push_back(std::move(r));
  }
  return out;
}

struct PiPrediction {
  double pi_estimate = 0.5;
  double ci_lower = 0.0;
  double ci_upper = 1.0;
};

// PI at a regressor difference z_delta, with the confidence interval taken by
// pushing the Wald interval of the linear predictor through the inverse link
// (monotone, so the interval stays inside (0,1)).
inline PiPrediction predict_pi(const PimFit& fit, const Eigen::VectorXd& z_delta,
                               double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("alpha must lie strictly between 0 and 1");
  if (z_delta.size() != fit.beta.size())
    throw ConfigError("contrast length does not match coefficient count");
  const LinkFunction link(fit.link);
  const double eta = z_delta.dot(fit.beta);
  const double var = z_delta.dot(fit.covariance * z_delta);
  const double se = var > 0.0 ? std::sqrt(var) : 0.0;
  const double zq = norm_quantile(1.0 - alpha / 2.0);
  PiPrediction out;
  out.pi_estimate = link.inverse(eta);
  out.ci_lower = link.inverse(eta - zq * se);
  out.ci_upper = link.inverse(eta + zq * se);
  return out;
}

}  // namespace pimfit
