#include <catch2/catch_amalgamated.hpp>
#include <limits>

#include "pimfit/design.hpp"

using namespace pimfit;

namespace {

Dataset likert_dataset() {
  // Nine distinct usage levels, as in an ANOVA-style coding.
  Dataset d;
  d.column_names = {"HOURS", "OTHER"};
  const Eigen::Index n = 18;
  d.y.resize(n);
  d.x.resize(n, 2);
  const double levels[] = {0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0};
  for (Eigen::Index i = 0; i < n; ++i) {
    d.y[i] = static_cast<double>(i % 4);
    d.x(i, 0) = levels[i % 9];
    d.x(i, 1) = static_cast<double>(i);
  }
  return d;
}

}  // namespace

TEST_CASE("dataset validation rejects malformed tables") {
  Dataset d = likert_dataset();
  d.validate();

  Dataset one_row = d;
  one_row.y.resize(1);
  one_row.x.resize(1, 2);
  REQUIRE_THROWS_AS(one_row.validate(), DataError);

  Dataset nan_cell = d;
  nan_cell.x(3, 1) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(nan_cell.validate(), DataError);

  Dataset inf_y = d;
  inf_y.y[0] = std::numeric_limits<double>::infinity();
  REQUIRE_THROWS_AS(inf_y.validate(), DataError);

  Dataset bad_names = d;
  bad_names.column_names.pop_back();
  REQUIRE_THROWS_AS(bad_names.validate(), DataError);
}

TEST_CASE("term DSL round-trips through parse and to_dsl") {
  for (const std::string text : {"linear:SMART", "quad:SMART", "factor:HOURS@0"}) {
    const TermExpr expr = parse_term_expr(text);
    REQUIRE(expr.to_dsl() == text);
  }
  REQUIRE_THROWS_AS(parse_term_expr("spline:X"), ConfigError);
  REQUIRE_THROWS_AS(parse_term_expr("factor:X"), ConfigError);
  REQUIRE_THROWS_AS(parse_term_expr("linear:"), ConfigError);
}

TEST_CASE("a 9-level factor expands to 8 dummies against the baseline") {
  const auto data = likert_dataset();
  const auto spec = resolve_design({parse_term_expr("factor:HOURS@0")},
                                   LinkKind::Probit, data);
  REQUIRE(spec.p() == 8);
  for (const auto& term : spec.terms) {
    REQUIRE(term.kind == Term::Kind::FactorDummy);
    REQUIRE(term.baseline_level == 0.0);
    REQUIRE(term.level != 0.0);
  }
  // Dummy value is exact membership.
  REQUIRE(spec.terms[0].value(spec.terms[0].level) == 1.0);
  REQUIRE(spec.terms[0].value(0.0) == 0.0);
}

TEST_CASE("missing baseline level is rejected") {
  const auto data = likert_dataset();
  REQUIRE_THROWS_AS(resolve_design({parse_term_expr("factor:HOURS@9")},
                                   LinkKind::Probit, data),
                    ConfigError);
}

TEST_CASE("duplicate terms are rejected") {
  const auto data = likert_dataset();
  REQUIRE_THROWS_AS(
      resolve_design({parse_term_expr("linear:HOURS"), parse_term_expr("linear:HOURS")},
                     LinkKind::Probit, data),
      ConfigError);
}

TEST_CASE("a column may carry both linear and quadratic terms") {
  const auto data = likert_dataset();
  const auto spec = resolve_design(
      {parse_term_expr("linear:HOURS"), parse_term_expr("quad:HOURS")},
      LinkKind::Probit, data);
  REQUIRE(spec.p() == 2);
  const auto terms = term_matrix(data, spec);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    REQUIRE(terms(i, 0) == data.x(i, 0));
    REQUIRE(terms(i, 1) == data.x(i, 0) * data.x(i, 0));
  }
}

TEST_CASE("fingerprint tracks terms and link") {
  const auto data = likert_dataset();
  const auto a = resolve_design({parse_term_expr("linear:HOURS")},
                                LinkKind::Probit, data);
  const auto b = resolve_design({parse_term_expr("linear:HOURS")},
                                LinkKind::Logit, data);
  const auto c = resolve_design({parse_term_expr("quad:HOURS")},
                                LinkKind::Probit, data);
  const auto a2 = resolve_design({parse_term_expr("linear:HOURS")},
                                 LinkKind::Probit, data);
  REQUIRE(a.fingerprint() == a2.fingerprint());
  REQUIRE(a.fingerprint() != b.fingerprint());
  REQUIRE(a.fingerprint() != c.fingerprint());
}
