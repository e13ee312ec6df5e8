#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "pimfit/fit.hpp"
#include "pimfit/pseudo.hpp"
#include "pimfit/rng.hpp"
#include "pimfit/simgen.hpp"

using namespace pimfit;
using Catch::Matchers::WithinAbs;

namespace {

DesignSpec linear_probit(const std::string& col = "X") {
  DesignSpec spec;
  spec.link = LinkKind::Probit;
  spec.terms.push_back({Term::Kind::Linear, col, 0.0, 0.0});
  return spec;
}

Dataset small_probit_dataset(std::uint64_t seed, Eigen::Index n = 15) {
  // Moderate slope so the score root sits comfortably inside [-10, 10].
  Rng rng(seed);
  Dataset d;
  d.column_names = {"X"};
  d.y.resize(n);
  d.x.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.x(i, 0) = rng.uniform(0.0, 1.0);
    d.y[i] = 1.5 * d.x(i, 0) + rng.normal(0.0, 1.0);
  }
  return d;
}

// Independent oracle: |U(beta)| evaluated on the materialized pseudo set,
// minimized over a dense grid.
double grid_search_root(const Dataset& data, const DesignSpec& spec,
                        double lo = -10.0, double hi = 10.0,
                        double step = 1e-4) {
  const auto pseudo = expand_pseudo_observations(data, spec);
  std::vector<double> z(pseudo.size()), ind(pseudo.size());
  for (std::size_t k = 0; k < pseudo.size(); ++k) {
    z[k] = pseudo[k].z[0];
    ind[k] = pseudo[k].indicator;
  }
  const LinkFunction link(spec.link);
  double best_beta = lo, best_abs = std::numeric_limits<double>::infinity();
  const long steps = std::lround((hi - lo) / step);
  for (long s = 0; s <= steps; ++s) {
    const double beta = lo + static_cast<double>(s) * step;
    double u = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      const LinkPoint pt = link.at(z[k] * beta);
      u += z[k] * (pt.dmu / pt.variance()) * (ind[k] - pt.mu);
    }
    if (std::abs(u) < best_abs) {
      best_abs = std::abs(u);
      best_beta = beta;
    }
  }
  return best_beta;
}

}  // namespace

TEST_CASE("fit_pim matches the dense grid-search score root on small data") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    const Dataset data = small_probit_dataset(seed);
    const DesignSpec spec = linear_probit();
    const PimFit fit = fit_pim(data, spec);
    const double oracle = grid_search_root(data, spec);
    INFO("seed " << seed);
    REQUIRE_THAT(fit.beta[0], WithinAbs(oracle, 1e-3));
  }
}

TEST_CASE("fit satisfies its own bookkeeping invariants") {
  const Dataset data = small_probit_dataset(7, 40);
  const SolverConfig solver;
  const PimFit fit = fit_pim(data, linear_probit(), solver);
  REQUIRE(fit.n_obs == 40);
  REQUIRE(fit.n_pseudo == 40 * 39 / 2);
  REQUIRE(fit.score_norm <= solver.score_tolerance);
  REQUIRE(fit.iterations >= 1);
  REQUIRE(fit.iterations <= solver.max_iterations);
  REQUIRE(fit.covariance.rows() == 1);
  REQUIRE(fit.covariance(0, 0) >= 0.0);
}

TEST_CASE("fitted pairwise probabilities are antisymmetric") {
  const Dataset data = small_probit_dataset(11, 25);
  for (const auto link_kind : {LinkKind::Probit, LinkKind::Logit}) {
    DesignSpec spec = linear_probit();
    spec.link = link_kind;
    const PimFit fit = fit_pim(data, spec);
    const LinkFunction link(link_kind);
    const auto pseudo = expand_pseudo_observations(data, spec);
    for (const auto& po : pseudo) {
      const double eta = po.z[0] * fit.beta[0];
      const double m_ij = link.inverse(eta);
      const double m_ji = link.inverse(-eta);
      REQUIRE_THAT(m_ij + m_ji, WithinAbs(1.0, 1e-12));
    }
  }
}

TEST_CASE("null data keeps the estimate within three standard errors of zero") {
  Rng rng(23);
  Dataset d;
  d.column_names = {"X"};
  const Eigen::Index n = 2000;
  d.y.resize(n);
  d.x.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.x(i, 0) = rng.uniform(0.0, 1.0);
    d.y[i] = rng.normal(0.0, 1.0);  // independent of X
  }
  const PimFit fit = fit_pim(d, linear_probit());
  const double se = std::sqrt(fit.covariance(0, 0));
  REQUIRE(std::abs(fit.beta[0]) < 3.0 * se);
}

TEST_CASE("model 1 data recovers the bridged slope within three SEs") {
  const Dataset data = generate(GeneratingModel::model1(), 2500, 20240501);
  const PimFit fit = fit_pim(data, linear_probit());
  const double se = std::sqrt(fit.covariance(0, 0));
  REQUIRE_THAT(fit.beta[0], WithinAbs(5.0 / std::sqrt(2.0), 3.0 * se));
}

TEST_CASE("non-convergence raises a solver error carrying the last iterate") {
  const Dataset data = small_probit_dataset(3, 30);
  SolverConfig solver;
  solver.max_iterations = 1;
  solver.score_tolerance = 1e-16;
  solver.step_tolerance = 1e-16;
  try {
    fit_pim(data, linear_probit(), solver);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    REQUIRE(e.last_beta.size() == 1);
    REQUIRE(std::isfinite(e.last_beta[0]));
    REQUIRE(e.last_score_norm > 0.0);
  }
}

TEST_CASE("rank-deficient designs are rejected up front") {
  Dataset d = small_probit_dataset(4, 20);
  d.column_names = {"X", "X2"};
  Eigen::MatrixXd x(20, 2);
  x.col(0) = d.x.col(0);
  x.col(1) = 2.0 * d.x.col(0);  // collinear
  d.x = x;
  DesignSpec spec;
  spec.link = LinkKind::Probit;
  spec.terms.push_back({Term::Kind::Linear, "X", 0.0, 0.0});
  spec.terms.push_back({Term::Kind::Linear, "X2", 0.0, 0.0});
  REQUIRE_THROWS_AS(fit_pim(d, spec), DesignError);

  Dataset constant = small_probit_dataset(4, 20);
  constant.x.col(0).setConstant(3.0);
  REQUIRE_THROWS_AS(fit_pim(constant, linear_probit()), DesignError);
}

TEST_CASE("too few rows for the coefficient count is a design error") {
  Dataset d;
  d.column_names = {"X"};
  d.y.resize(2);
  d.y << 1.0, 2.0;
  d.x.resize(2, 1);
  d.x << 0.1, 0.9;
  REQUIRE_THROWS_AS(fit_pim(d, linear_probit()), DesignError);
}

TEST_CASE("extreme linear predictors clamp and flag instead of overflowing") {
  // Strong signal over a wide predictor range: eta passes +-30 near the root
  // but disagreements at short range keep the root finite.
  Rng rng(31);
  Dataset d;
  d.column_names = {"X"};
  const Eigen::Index n = 120;
  d.y.resize(n);
  d.x.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.x(i, 0) = rng.uniform(0.0, 20.0);
    d.y[i] = 2.0 * d.x(i, 0) + rng.normal(0.0, 0.5);
  }
  const PimFit fit = fit_pim(d, linear_probit());
  REQUIRE(fit.clamped);
  REQUIRE(std::isfinite(fit.beta[0]));
  REQUIRE(std::isfinite(fit.covariance(0, 0)));
}

TEST_CASE("thread count does not change the fit beyond float reassociation") {
  const Dataset data = small_probit_dataset(77, 400);
  SolverConfig s1, s4;
  s1.threads = 1;
  s4.threads = 4;
  const PimFit f1 = fit_pim(data, linear_probit(), s1);
  const PimFit f4 = fit_pim(data, linear_probit(), s4);
  REQUIRE_THAT(f4.beta[0], WithinAbs(f1.beta[0], 1e-10));
  REQUIRE_THAT(f4.covariance(0, 0), WithinAbs(f1.covariance(0, 0),
                                              1e-10 * (1.0 + f1.covariance(0, 0))));
  // Same thread count twice: bit identical.
  const PimFit f4b = fit_pim(data, linear_probit(), s4);
  REQUIRE(f4.beta[0] == f4b.beta[0]);
  REQUIRE(f4.covariance(0, 0) == f4b.covariance(0, 0));
}
