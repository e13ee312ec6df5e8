#include <catch2/catch_amalgamated.hpp>
#include <Eigen/QR>
#include <cmath>

#include "pimfit/diagnostics.hpp"
#include "pimfit/rng.hpp"
#include "pimfit/simgen.hpp"

using namespace pimfit;
using Catch::Matchers::WithinAbs;

namespace {

DesignSpec linear_probit() {
  DesignSpec spec;
  spec.link = LinkKind::Probit;
  spec.terms.push_back({Term::Kind::Linear, "X", 0.0, 0.0});
  return spec;
}

PimFit fake_fit(const DesignSpec& spec, double beta) {
  PimFit fit;
  fit.beta = Eigen::VectorXd::Constant(1, beta);
  fit.covariance = Eigen::MatrixXd::Constant(1, 1, 0.01);
  fit.link = spec.link;
  fit.design_fingerprint = spec.fingerprint();
  fit.coefficient_names = spec.coefficient_names();
  return fit;
}

}  // namespace

TEST_CASE("50 subset rows give 1225 residuals") {
  const Dataset data = generate(GeneratingModel::model1(), 200, 55);
  const DesignSpec spec = linear_probit();
  const PimFit fit = fake_fit(spec, 3.0);
  const ResidualSet rs = pim_residuals(data, spec, fit, 50, 9);
  REQUIRE(rs.entries.size() == 1225);
  REQUIRE(rs.subset_size == 50);
  for (const auto& e : rs.entries) {
    REQUIRE(e.residual >= -1.0);
    REQUIRE(e.residual <= 1.0);
  }
  // Ordinals are consecutive from zero.
  REQUIRE(rs.entries.front().pseudo_index == 0);
  REQUIRE(rs.entries.back().pseudo_index == 1224);
}

TEST_CASE("null fit residuals live on the half-integer lattice") {
  const Dataset data = generate(GeneratingModel::model1(), 60, 3);
  const DesignSpec spec = linear_probit();
  const PimFit fit = fake_fit(spec, 0.0);
  const ResidualSet rs = pim_residuals(data, spec, fit, 20, 4);
  for (const auto& e : rs.entries) {
    const bool lattice = e.residual == -0.5 || e.residual == 0.0 || e.residual == 0.5;
    REQUIRE(lattice);
  }
}

TEST_CASE("m = 2 yields exactly one residual") {
  const Dataset data = generate(GeneratingModel::model1(), 30, 3);
  const DesignSpec spec = linear_probit();
  const ResidualSet rs = pim_residuals(data, spec, fake_fit(spec, 1.0), 2, 8);
  REQUIRE(rs.entries.size() == 1);
}

TEST_CASE("m beyond n and design mismatches are rejected") {
  const Dataset data = generate(GeneratingModel::model1(), 30, 3);
  const DesignSpec spec = linear_probit();
  REQUIRE_THROWS_AS(pim_residuals(data, spec, fake_fit(spec, 1.0), 31, 8),
                    ConfigError);
  DesignSpec other = spec;
  other.link = LinkKind::Logit;
  REQUIRE_THROWS_AS(pim_residuals(data, other, fake_fit(spec, 1.0), 10, 8),
                    ConfigError);
}

TEST_CASE("subset residuals agree with the hand computation on m = 4") {
  const Dataset data = generate(GeneratingModel::model1(), 40, 21);
  const DesignSpec spec = linear_probit();
  const PimFit fit = fake_fit(spec, 2.5);
  const std::uint64_t seed = 77;
  const ResidualSet rs = pim_residuals(data, spec, fit, 4, seed);
  REQUIRE(rs.entries.size() == 6);

  // Replicate the draw, then compute each residual from first principles.
  Rng rng(seed);
  const auto rows = rng.sample_without_replacement(40, 4);
  const LinkFunction link(spec.link);
  std::size_t at = 0;
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b, ++at) {
      const double yi = data.y[static_cast<Eigen::Index>(rows[a])];
      const double yj = data.y[static_cast<Eigen::Index>(rows[b])];
      const double ind = yi < yj ? 1.0 : (yi > yj ? 0.0 : 0.5);
      const double z = data.x(static_cast<Eigen::Index>(rows[b]), 0) -
                       data.x(static_cast<Eigen::Index>(rows[a]), 0);
      const double expected = ind - link.inverse(z * 2.5);
      REQUIRE_THAT(rs.entries[at].residual, WithinAbs(expected, 1e-14));
      REQUIRE(rs.entries[at].i == static_cast<Eigen::Index>(rows[a]));
      REQUIRE(rs.entries[at].j == static_cast<Eigen::Index>(rows[b]));
    }
  }
}

TEST_CASE("loess reproduces constants") {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 40; ++i) pts.emplace_back(0.1 * i, 3.0);
  for (const auto& [x, fitted] : loess_smooth(pts, 0.75))
    REQUIRE_THAT(fitted, WithinAbs(3.0, 1e-12));
}

TEST_CASE("loess reproduces straight lines exactly") {
  std::vector<std::pair<double, double>> pts;
  Rng rng(4);
  for (int i = 0; i < 60; ++i) {
    const double x = rng.uniform(-2.0, 5.0);
    pts.emplace_back(x, 2.0 * x + 1.0);
  }
  for (const auto& [x, fitted] : loess_smooth(pts, 0.6))
    REQUIRE_THAT(fitted, WithinAbs(2.0 * x + 1.0, 1e-8));
}

TEST_CASE("loess matches a per-point weighted least squares oracle") {
  Rng rng(11);
  std::vector<std::pair<double, double>> pts;
  const int n = 500;
  for (int i = 0; i < n; ++i) {
    const double x = 6.283 * i / n;
    pts.emplace_back(x, std::sin(x) + rng.normal(0.0, 0.2));
  }
  const double span = 0.3;
  const auto smooth = loess_smooth(pts, span);

  const auto q = static_cast<std::size_t>(std::ceil(span * n));
  for (std::size_t at = 0; at < pts.size(); at += 17) {
    const double x0 = pts[at].first;
    std::vector<double> dist(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
      dist[i] = std::abs(pts[i].first - x0);
    std::vector<double> sorted = dist;
    std::sort(sorted.begin(), sorted.end());
    const double dmax = sorted[q - 1];
    // Weighted linear fit solved through an orthogonal decomposition.
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (dist[i] <= dmax) keep.push_back(static_cast<Eigen::Index>(i));
    Eigen::MatrixXd design(keep.size(), 2);
    Eigen::VectorXd rhs(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) {
      const auto i = static_cast<std::size_t>(keep[r]);
      const double u = dist[i] / dmax;
      const double t = 1.0 - u * u * u;
      const double w = std::sqrt(t * t * t);
      design(static_cast<Eigen::Index>(r), 0) = w;
      design(static_cast<Eigen::Index>(r), 1) = w * (pts[i].first - x0);
      rhs[static_cast<Eigen::Index>(r)] = w * pts[i].second;
    }
    const Eigen::Vector2d coef =
        design.colPivHouseholderQr().solve(rhs);
    REQUIRE_THAT(smooth[at].second, WithinAbs(coef[0], 1e-10));
  }
}

TEST_CASE("loess rejects degenerate inputs") {
  std::vector<std::pair<double, double>> constant_x;
  for (int i = 0; i < 20; ++i) constant_x.emplace_back(1.0, static_cast<double>(i));
  REQUIRE_THROWS_AS(loess_smooth(constant_x, 0.5), NumericalError);

  std::vector<std::pair<double, double>> few{{0, 0}, {1, 1}, {2, 2}};
  REQUIRE_THROWS_AS(loess_smooth(few, 0.5), ConfigError);

  std::vector<std::pair<double, double>> fine;
  for (int i = 0; i < 20; ++i) fine.emplace_back(i, i);
  REQUIRE_THROWS_AS(loess_smooth(fine, 0.0), ConfigError);
  REQUIRE_THROWS_AS(loess_smooth(fine, 1.5), ConfigError);
}
