#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "pimfit/distributions.hpp"
#include "pimfit/errors.hpp"
#include "pimfit/fit.hpp"

namespace pimfit {

// Which large-n algorithm produced a pooled fit.
struct Method {
  enum class Kind { Partition, Subsample };

  Kind kind = Kind::Partition;
  std::size_t s = 0;  // partition count
  std::size_t k = 0;  // subsample size
  std::size_t b = 0;  // subsample iterations

  static Method partition(std::size_t s) {
    Method m;
    m.kind = Kind::Partition;
    m.s = s;
    return m;
  }

  static Method subsample(std::size_t k, std::size_t b) {
    Method m;
    m.kind = Kind::Subsample;
    m.k = k;
    m.b = b;
    return m;
  }

  std::size_t piece_count() const { return kind == Kind::Partition ? s : b; }

  // Multiplier turning the sample variance of piece estimates into the
  // scaled variance of the pooled estimate: 1/S for partitioning, K/n for
  // uniform subsampling.
  double scaled_variance_factor(Eigen::Index n_total) const {
    if (kind == Kind::Partition) return 1.0 / static_cast<double>(s);
    return static_cast<double>(k) / static_cast<double>(n_total);
  }

  std::string to_string() const {
    std::ostringstream os;
    if (kind == Kind::Partition) {
      os << "partition:" << s;
    } else {
      os << "subsample:" << k << ":" << b;
    }
    return os.str();
  }

  static Method parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    try {
      if (head == "partition" && colon != std::string::npos) {
        return partition(std::stoul(text.substr(colon + 1)));
      }
      if (head == "subsample" && colon != std::string::npos) {
        const std::string rest = text.substr(colon + 1);
        const auto sep = rest.find(':');
        if (sep == std::string::npos)
          throw ConfigError("subsample method needs K and B");
        return subsample(std::stoul(rest.substr(0, sep)),
                         std::stoul(rest.substr(sep + 1)));
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad method '" + text + "'");
    }
    throw ConfigError("bad method '" + text +
                      "' (expected partition:S or subsample:K:B)");
  }
};

struct CoefficientInterval {
  double lower = 0.0;
  double upper = 0.0;
};

struct AggregatedFit {
  Eigen::VectorXd beta_pooled;
  std::vector<PimFit> per_piece;
  Eigen::VectorXd var_scaled;    // diagonal, scaled construction
  Eigen::VectorXd var_adjusted;  // diagonal, adjusted sandwich construction
  std::vector<CoefficientInterval> ci_scaled;
  std::vector<CoefficientInterval> ci_adjusted;
  // Full pooled covariance (1/S^2) sum of piece sandwiches, for consumers
  // needing joint inference; the interval constructions are coefficientwise.
  Eigen::MatrixXd pooled_covariance;
  Method method;
  double alpha = 0.05;
  Eigen::Index n_total = 0;
  std::vector<double> piece_seconds;
  std::vector<std::string> warnings;

  std::vector<std::string> coefficient_names() const {
    return per_piece.empty() ? std::vector<std::string>{}
                             : per_piece.front().coefficient_names;
  }
};

// Pools externally produced piece fits: the arithmetic shared by
// partition_fit and subsample_fit, usable on its own for distributed pieces.
inline AggregatedFit aggregate_only(std::vector<PimFit> per_piece, Method method,
                                    Eigen::Index n_total, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("alpha must lie strictly between 0 and 1");
  const std::size_t pieces = per_piece.size();
  if (pieces < 2) {
    throw ConfigError(
        "aggregation needs at least 2 piece fits for variance estimation (got " +
        std::to_string(pieces) +
        (method.kind == Method::Kind::Subsample ? "); B >= 2 is required" : ")"));
  }
  if (method.piece_count() != pieces)
    throw ConfigError("method declares " + std::to_string(method.piece_count()) +
                      " pieces but " + std::to_string(pieces) + " were supplied");
  const Eigen::Index p = per_piece.front().beta.size();
  const std::uint64_t fp = per_piece.front().design_fingerprint;
  for (std::size_t s = 1; s < pieces; ++s) {
    if (per_piece[s].beta.size() != p || per_piece[s].design_fingerprint != fp)
      throw ConfigError("piece " + std::to_string(s) +
                        " has a mismatched design fingerprint");
  }

  AggregatedFit out;
  out.method = method;
  out.alpha = alpha;
  out.n_total = n_total;

  out.beta_pooled = Eigen::VectorXd::Zero(p);
  for (const auto& piece : per_piece) out.beta_pooled += piece.beta;
  out.beta_pooled /= static_cast<double>(pieces);

  // Two-pass sample variance of the piece estimates.
  Eigen::VectorXd sample_var = Eigen::VectorXd::Zero(p);
  for (const auto& piece : per_piece)
    sample_var += (piece.beta - out.beta_pooled).cwiseAbs2();
  sample_var /= static_cast<double>(pieces - 1);
  out.var_scaled = sample_var * method.scaled_variance_factor(n_total);

  out.pooled_covariance = Eigen::MatrixXd::Zero(p, p);
  for (const auto& piece : per_piece) out.pooled_covariance += piece.covariance;
  out.pooled_covariance /= static_cast<double>(pieces) * static_cast<double>(pieces);
  out.var_adjusted = out.pooled_covariance.diagonal();

  const double zq = norm_quantile(1.0 - alpha / 2.0);
  out.ci_scaled.resize(static_cast<std::size_t>(p));
  out.ci_adjusted.resize(static_cast<std::size_t>(p));
  for (Eigen::Index c = 0; c < p; ++c) {
    const double se_s = std::sqrt(std::max(0.0, out.var_scaled[c]));
    const double se_a = std::sqrt(std::max(0.0, out.var_adjusted[c]));
    out.ci_scaled[static_cast<std::size_t>(c)] = {out.beta_pooled[c] - zq * se_s,
                                                  out.beta_pooled[c] + zq * se_s};
    out.ci_adjusted[static_cast<std::size_t>(c)] = {
        out.beta_pooled[c] - zq * se_a, out.beta_pooled[c] + zq * se_a};
  }

  if (method.kind == Method::Kind::Subsample &&
      static_cast<double>(method.b) * static_cast<double>(method.k) >
          static_cast<double>(n_total)) {
    out.warnings.push_back(
        "B*K exceeds n: iterations reuse observations, so the adjusted "
        "sandwich variance ignores their covariance and will understate "
        "uncertainty");
  }

  out.per_piece = std::move(per_piece);
  return out;
}

}  // namespace pimfit
