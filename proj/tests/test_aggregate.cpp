#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "pimfit/aggregate.hpp"
#include "pimfit/rng.hpp"

using namespace pimfit;
using Catch::Matchers::WithinAbs;

namespace {

PimFit synthetic_piece(double beta, double variance, std::uint64_t fingerprint = 42) {
  PimFit fit;
  fit.beta = Eigen::VectorXd::Constant(1, beta);
  fit.covariance = Eigen::MatrixXd::Constant(1, 1, variance);
  fit.design_fingerprint = fingerprint;
  fit.coefficient_names = {"X"};
  return fit;
}

}  // namespace

TEST_CASE("two pieces pool to the arithmetic mean") {
  const auto agg = aggregate_only({synthetic_piece(1.0, 0.1), synthetic_piece(3.0, 0.1)},
                                  Method::partition(2), 100, 0.05);
  REQUIRE_THAT(agg.beta_pooled[0], WithinAbs(2.0, 1e-15));
}

TEST_CASE("equal piece estimates give zero scaled variance") {
  const auto agg = aggregate_only(
      {synthetic_piece(0.7, 0.2), synthetic_piece(0.7, 0.2), synthetic_piece(0.7, 0.2)},
      Method::partition(3), 90, 0.05);
  // Zero up to the rounding of the mean itself.
  REQUIRE_THAT(agg.var_scaled[0], WithinAbs(0.0, 1e-30));
  REQUIRE_THAT(agg.beta_pooled[0], WithinAbs(0.7, 1e-15));
}

TEST_CASE("equal piece sandwich variances v give adjusted variance v/S") {
  const double v = 0.36;
  const std::size_t s = 6;
  std::vector<PimFit> pieces;
  for (std::size_t i = 0; i < s; ++i)
    pieces.push_back(synthetic_piece(0.1 * static_cast<double>(i), v));
  const auto agg = aggregate_only(std::move(pieces), Method::partition(s), 600, 0.05);
  REQUIRE_THAT(agg.var_adjusted[0], WithinAbs(v / static_cast<double>(s), 1e-15));
}

TEST_CASE("scaled variance matches an independent two-pass computation") {
  Rng rng(12);
  const std::size_t s = 100;
  std::vector<PimFit> pieces;
  std::vector<double> betas;
  for (std::size_t i = 0; i < s; ++i) {
    const double b = rng.normal(1.5, 0.4);
    betas.push_back(b);
    pieces.push_back(synthetic_piece(b, 0.2));
  }
  const auto agg = aggregate_only(std::move(pieces), Method::partition(s), 10000, 0.05);

  double mean = 0.0;
  for (double b : betas) mean += b;
  mean /= static_cast<double>(s);
  double ss = 0.0;
  for (double b : betas) ss += (b - mean) * (b - mean);
  const double sample_var = ss / static_cast<double>(s - 1);
  REQUIRE_THAT(agg.var_scaled[0],
               WithinAbs(sample_var / static_cast<double>(s), 1e-15));
  REQUIRE_THAT(agg.beta_pooled[0], WithinAbs(mean, 1e-13));
}

TEST_CASE("subsample scaling uses K/n instead of 1/S") {
  std::vector<PimFit> pieces{synthetic_piece(1.0, 0.1), synthetic_piece(2.0, 0.1)};
  const auto agg =
      aggregate_only(std::move(pieces), Method::subsample(50, 2), 1000, 0.05);
  // Sample variance of {1,2} is 0.5; scaled by K/n = 0.05.
  REQUIRE_THAT(agg.var_scaled[0], WithinAbs(0.5 * 0.05, 1e-15));
  // Adjusted: (1/B^2) sum of piece variances.
  REQUIRE_THAT(agg.var_adjusted[0], WithinAbs(0.2 / 4.0, 1e-15));
}

TEST_CASE("confidence intervals bracket the pooled estimate symmetrically") {
  const auto agg = aggregate_only(
      {synthetic_piece(1.0, 0.3), synthetic_piece(1.4, 0.2), synthetic_piece(0.9, 0.25)},
      Method::partition(3), 300, 0.05);
  REQUIRE(agg.ci_scaled[0].lower < agg.beta_pooled[0]);
  REQUIRE(agg.beta_pooled[0] < agg.ci_scaled[0].upper);
  REQUIRE(agg.ci_adjusted[0].lower < agg.beta_pooled[0]);
  REQUIRE(agg.beta_pooled[0] < agg.ci_adjusted[0].upper);
  REQUIRE_THAT(0.5 * (agg.ci_scaled[0].lower + agg.ci_scaled[0].upper),
               WithinAbs(agg.beta_pooled[0], 1e-12));
}

TEST_CASE("mismatched design fingerprints refuse to pool") {
  REQUIRE_THROWS_AS(
      aggregate_only({synthetic_piece(1.0, 0.1, 1), synthetic_piece(1.1, 0.1, 2)},
                     Method::partition(2), 100, 0.05),
      ConfigError);
}

TEST_CASE("a single piece cannot support variance estimation") {
  REQUIRE_THROWS_AS(aggregate_only({synthetic_piece(1.0, 0.1)},
                                   Method::subsample(10, 1), 100, 0.05),
                    ConfigError);
}

TEST_CASE("pooling is invariant under piece permutation") {
  Rng rng(5);
  std::vector<PimFit> pieces;
  for (int i = 0; i < 12; ++i)
    pieces.push_back(synthetic_piece(rng.normal(0.0, 1.0), rng.uniform(0.1, 0.5)));
  auto shuffled = pieces;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto a = aggregate_only(pieces, Method::partition(12), 1200, 0.05);
  const auto b = aggregate_only(shuffled, Method::partition(12), 1200, 0.05);
  REQUIRE_THAT(a.beta_pooled[0], WithinAbs(b.beta_pooled[0], 1e-13));
  REQUIRE_THAT(a.var_scaled[0], WithinAbs(b.var_scaled[0], 1e-13));
  REQUIRE_THAT(a.var_adjusted[0], WithinAbs(b.var_adjusted[0], 1e-13));
}

TEST_CASE("oversampling warning appears exactly when B*K exceeds n") {
  const auto warned = aggregate_only(
      {synthetic_piece(1.0, 0.1), synthetic_piece(1.2, 0.1), synthetic_piece(0.8, 0.1)},
      Method::subsample(40, 3), 100, 0.05);
  REQUIRE_FALSE(warned.warnings.empty());
  const auto quiet = aggregate_only(
      {synthetic_piece(1.0, 0.1), synthetic_piece(1.2, 0.1)},
      Method::subsample(40, 2), 100, 0.05);
  REQUIRE(quiet.warnings.empty());
}

TEST_CASE("method strings round-trip") {
  for (const std::string text : {"partition:10", "subsample:230:1000"}) {
    REQUIRE(Method::parse(text).to_string() == text);
  }
  REQUIRE_THROWS_AS(Method::parse("subsample:10"), ConfigError);
  REQUIRE_THROWS_AS(Method::parse("bootstrap:5"), ConfigError);
}
