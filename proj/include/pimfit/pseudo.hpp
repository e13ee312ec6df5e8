#pragma once

#include <Eigen/Core>
#include <vector>

#include "pimfit/dataset.hpp"
#include "pimfit/design.hpp"

namespace pimfit {

// Pairwise indicator I(y_i <= y_j) with ties at exactly 0.5. Equality is
// exact floating-point equality: responses in scope are ordinal-coded.
inline double pseudo_indicator(double yi, double yj) {
  if (yi < yj) return 1.0;
  if (yi > yj) return 0.0;
  return 0.5;
}

struct PseudoObservation {
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  double indicator = 0.5;
  Eigen::VectorXd z;
};

// Streams all n(n-1)/2 pairs in lexicographic (i, j) order without
// materializing them. fn receives (i, j, indicator, z pointer) where z has
// p entries valid only during the call.
template <typename Fn>
void for_each_pseudo(const Eigen::VectorXd& y, const Eigen::MatrixXd& terms,
                     Fn&& fn) {
  const Eigen::Index n = y.size();
  const Eigen::Index p = terms.cols();
  std::vector<double> z(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      for (Eigen::Index k = 0; k < p; ++k) z[static_cast<std::size_t>(k)] = terms(j, k) - terms(i, k);
      fn(i, j, pseudo_indicator(y[i], y[j]), z.data());
    }
  }
}

// Materialized expansion, mainly for diagnostics and small-n testing; the
// fitting path streams instead and never holds the full pseudo set.
inline std::vector<PseudoObservation> expand_pseudo_observations(
    const Dataset& data, const DesignSpec& spec) {
  data.validate();
  spec.validate();
  const Eigen::MatrixXd terms = term_matrix(data, spec);
  const Eigen::Index n = data.n();
  std::vector<PseudoObservation> out;
  out.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for_each_pseudo(data.y, terms,
                  [&](Eigen::Index i, Eigen::Index j, double ind, const double* z) {
                    PseudoObservation po;
                    po.i = i;
                    po.j = j;
                    po.indicator = ind;
                    po.z = Eigen::Map<const Eigen::VectorXd>(z, spec.p());
                    out.push_back(std::move(po));
                  });
  return out;
}

}  // namespace pimfit
