#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pimfit/dataset.hpp"
#include "pimfit/errors.hpp"
#include "pimfit/link.hpp"

namespace pimfit {

// One column of the PIM regressor. The regressor for a pair (i, j) is always
// the difference of the per-row term value, Z = t(row_j) - t(row_i).
struct Term {
  enum class Kind { Linear, Quadratic, FactorDummy };

  Kind kind = Kind::Linear;
  std::string column;
  double level = 0.0;           // FactorDummy only
  double baseline_level = 0.0;  // FactorDummy only

  // Per-row value before pairwise differencing.
  double value(double x) const {
    switch (kind) {
      case Kind::Linear: return x;
      case Kind::Quadratic: return x * x;
      case Kind::FactorDummy: return x == level ? 1.0 : 0.0;
    }
    return 0.0;
  }

  std::string label() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::Linear: os << column; break;
      case Kind::Quadratic: os << column << "^2"; break;
      case Kind::FactorDummy:
        os << column << "==" << format_level(level);
        break;
    }
    return os.str();
  }

  std::string to_dsl() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::Linear: os << "linear:" << column; break;
      case Kind::Quadratic: os << "quad:" << column; break;
      case Kind::FactorDummy:
        os << "factor:" << column << "@" << format_level(baseline_level)
           << "=" << format_level(level);
        break;
    }
    return os.str();
  }

  bool operator==(const Term& o) const {
    return kind == o.kind && column == o.column && level == o.level &&
           baseline_level == o.baseline_level;
  }

  static std::string format_level(double v) {
    std::ostringstream os;
    os.precision(15);
    os << v;
    return os.str();
  }
};

struct DesignSpec {
  std::vector<Term> terms;
  LinkKind link = LinkKind::Probit;

  Eigen::Index p() const { return static_cast<Eigen::Index>(terms.size()); }

  void validate() const {
    if (terms.empty()) throw ConfigError("design needs at least one term");
    for (std::size_t a = 0; a < terms.size(); ++a) {
      for (std::size_t b = a + 1; b < terms.size(); ++b) {
        if (terms[a] == terms[b])
          throw ConfigError("duplicate design term '" + terms[a].to_dsl() + "'");
      }
    }
  }

  std::vector<std::string> coefficient_names() const {
    std::vector<std::string> out;
    out.reserve(terms.size());
    for (const auto& t : terms) out.push_back(t.label());
    return out;
  }

  // Stable identity used to refuse pooling fits from different designs.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    const std::string link_name = to_string(link);
    h = fnv1a_bytes(h, link_name.data(), link_name.size());
    for (const auto& t : terms) {
      const std::string s = t.to_dsl();
      h = fnv1a_bytes(h, s.data(), s.size());
    }
    return h;
  }
};

// Raw (pre-resolution) term as written in configs: factor terms stand for one
// dummy per observed non-baseline level and need data to expand.
struct TermExpr {
  enum class Kind { Linear, Quadratic, Factor };
  Kind kind = Kind::Linear;
  std::string column;
  double baseline = 0.0;
  bool has_baseline = false;

  std::string to_dsl() const {
    switch (kind) {
      case Kind::Linear: return "linear:" + column;
      case Kind::Quadratic: return "quad:" + column;
      case Kind::Factor:
        return "factor:" + column + "@" + Term::format_level(baseline);
    }
    return {};
  }
};

// Parses `linear:COL`, `quad:COL`, `factor:COL@BASELINE`.
inline TermExpr parse_term_expr(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ConfigError("bad term '" + text +
                      "' (expected linear:COL, quad:COL or factor:COL@BASE)");
  const std::string kind = text.substr(0, colon);
  std::string rest = text.substr(colon + 1);
  TermExpr expr;
  if (kind == "linear") {
    expr.kind = TermExpr::Kind::Linear;
  } else if (kind == "quad") {
    expr.kind = TermExpr::Kind::Quadratic;
  } else if (kind == "factor") {
    expr.kind = TermExpr::Kind::Factor;
    const auto at = rest.find('@');
    if (at == std::string::npos)
      throw ConfigError("factor term '" + text + "' needs @BASELINE");
    try {
      expr.baseline = std::stod(rest.substr(at + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad baseline level in '" + text + "'");
    }
    expr.has_baseline = true;
    rest = rest.substr(0, at);
  } else {
    throw ConfigError("unknown term kind '" + kind + "' in '" + text + "'");
  }
  if (rest.empty()) throw ConfigError("empty column name in term '" + text + "'");
  expr.column = rest;
  return expr;
}

// Expands term expressions against a dataset: factors enumerate every
// observed non-baseline level exactly once, in ascending order.
inline DesignSpec resolve_design(const std::vector<TermExpr>& exprs,
                                 LinkKind link, const Dataset& data) {
  DesignSpec spec;
  spec.link = link;
  for (const auto& e : exprs) {
    const Eigen::Index col = data.column_index(e.column);
    switch (e.kind) {
      case TermExpr::Kind::Linear:
        spec.terms.push_back({Term::Kind::Linear, e.column, 0.0, 0.0});
        break;
      case TermExpr::Kind::Quadratic:
        spec.terms.push_back({Term::Kind::Quadratic, e.column, 0.0, 0.0});
        break;
      case TermExpr::Kind::Factor: {
        std::set<double> levels;
        for (Eigen::Index i = 0; i < data.n(); ++i) levels.insert(data.x(i, col));
        if (levels.count(e.baseline) == 0)
          throw ConfigError("baseline level " + Term::format_level(e.baseline) +
                            " not observed in column '" + e.column + "'");
        for (double lvl : levels) {
          if (lvl == e.baseline) continue;
          spec.terms.push_back(
              {Term::Kind::FactorDummy, e.column, lvl, e.baseline});
        }
        break;
      }
    }
  }
  spec.validate();
  return spec;
}

// n x p matrix of per-row term values; pseudo-observation regressors are row
// differences of this matrix.
inline Eigen::MatrixXd term_matrix(const Dataset& data, const DesignSpec& spec) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = spec.p();
  Eigen::MatrixXd t(n, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const Eigen::Index col = data.column_index(spec.terms[k].column);
    for (Eigen::Index i = 0; i < n; ++i)
      t(i, k) = spec.terms[k].value(data.x(i, col));
  }
  return t;
}

}  // namespace pimfit
