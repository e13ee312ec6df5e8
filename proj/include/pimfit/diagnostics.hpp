#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "pimfit/dataset.hpp"
#include "pimfit/design.hpp"
#include "pimfit/errors.hpp"
#include "pimfit/fit.hpp"
#include "pimfit/pseudo.hpp"
#include "pimfit/rng.hpp"

namespace pimfit {

// Pseudo-observation residuals I_ij - m(X_i, X_j; beta) on a random subset of
// rows; the cheap model check used when the full pseudo set is out of reach.
struct ResidualSet {
  struct Entry {
    Eigen::Index i = 0;  // original row indices
    Eigen::Index j = 0;
    std::size_t pseudo_index = 0;
    double linear_predictor = 0.0;
    double residual = 0.0;
  };

  std::vector<Entry> entries;
  std::uint64_t subset_seed = 0;
  std::size_t subset_size = 0;
};

inline ResidualSet pim_residuals(const Dataset& data, const DesignSpec& spec,
                                 const PimFit& fit, std::size_t m,
                                 std::uint64_t seed) {
  data.validate();
  spec.validate();
  if (m < 2 || static_cast<Eigen::Index>(m) > data.n())
    throw ConfigError("subset size m must satisfy 2 <= m <= n");
  if (fit.design_fingerprint != spec.fingerprint())
    throw ConfigError("fit was produced under a different design");

  Rng rng(seed);
  std::vector<std::size_t> rows =
      rng.sample_without_replacement(static_cast<std::size_t>(data.n()), m);
  const Dataset subset = data.subset(rows);
  const Eigen::MatrixXd terms = term_matrix(subset, spec);
  const LinkFunction link(spec.link);

  ResidualSet out;
  out.subset_seed = seed;
  out.subset_size = m;
  out.entries.reserve(m * (m - 1) / 2);
  std::size_t ordinal = 0;
  for_each_pseudo(subset.y, terms,
                  [&](Eigen::Index a, Eigen::Index b, double ind, const double* z) {
                    double eta = 0.0;
                    for (Eigen::Index k = 0; k < fit.beta.size(); ++k)
                      eta += z[k] * fit.beta[k];
                    ResidualSet::Entry entry;
                    entry.i = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(a)]);
                    entry.j = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(b)]);
                    entry.pseudo_index = ordinal++;
                    entry.linear_predictor = eta;
                    entry.residual = ind - link.inverse(eta);
                    out.entries.push_back(entry);
                  });
  return out;
}

// Local linear regression with tricube weights (degree 1, no robustness
// iterations), evaluated at every input x. span is the fraction of points in
// each neighborhood.
inline std::vector<std::pair<double, double>> loess_smooth(
    const std::vector<std::pair<double, double>>& points, double span = 0.75) {
  const std::size_t n = points.size();
  if (n < 10) throw ConfigError("loess_smooth needs at least 10 points");
  if (!(span > 0.0 && span <= 1.0))
    throw ConfigError("loess span must lie in (0, 1]");
  const double first_x = points.front().first;
  bool all_equal = true;
  for (const auto& pt : points) {
    if (pt.first != first_x) {
      all_equal = false;
      break;
    }
  }
  if (all_equal) throw NumericalError("loess_smooth: degenerate x (all equal)");

  const std::size_t q = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(span * static_cast<double>(n))));

  std::vector<double> dist(n);
  std::vector<std::pair<double, double>> fitted;
  fitted.reserve(n);
  for (const auto& at : points) {
    const double x0 = at.first;
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::abs(points[i].first - x0);
    std::vector<double> order = dist;
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(q - 1),
                     order.end());
    const double dmax = order[q - 1];

    // Weighted moments of the local linear fit y ~ a + b (x - x0).
    double sw = 0.0, swx = 0.0, swxx = 0.0, swy = 0.0, swxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (dist[i] > dmax) continue;
      const double u = dmax > 0.0 ? dist[i] / dmax : 0.0;
      const double t = 1.0 - u * u * u;
      const double w = t * t * t;
      if (w <= 0.0) continue;
      const double dx = points[i].first - x0;
      sw += w;
      swx += w * dx;
      swxx += w * dx * dx;
      swy += w * points[i].second;
      swxy += w * dx * points[i].second;
    }
    const double det = sw * swxx - swx * swx;
    double value;
    if (std::abs(det) > 1e-12 * (std::abs(sw * swxx) + swx * swx) && sw > 0.0) {
      value = (swxx * swy - swx * swxy) / det;  // intercept at x0
    } else if (sw > 0.0) {
      value = swy / sw;  // slope unidentifiable locally: weighted mean
    } else {
      throw NumericalError("loess_smooth: empty neighborhood");
    }
    fitted.emplace_back(x0, value);
  }
  return fitted;
}

}  // namespace pimfit
