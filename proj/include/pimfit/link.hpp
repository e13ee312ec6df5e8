#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pimfit/distributions.hpp"

namespace pimfit {

enum class LinkKind { Logit, Probit };

inline std::string to_string(LinkKind k) {
  return k == LinkKind::Logit ? "logit" : "probit";
}

inline LinkKind link_from_string(const std::string& s) {
  if (s == "logit") return LinkKind::Logit;
  if (s == "probit") return LinkKind::Probit;
  throw std::invalid_argument("unknown link '" + s + "' (expected logit|probit)");
}

// Everything the solver needs about the mean at one linear-predictor value.
// mu and one_minus_mu are each computed on their own accurate side, so the
// variance mu*(1-mu) stays meaningful deep in the tails.
struct LinkPoint {
  double mu;
  double one_minus_mu;
  double dmu;  // d mu / d eta

  double variance() const { return mu * one_minus_mu; }
};

class LinkFunction {
public:
  explicit LinkFunction(LinkKind kind) : kind_(kind) {}

  LinkKind kind() const { return kind_; }

  double inverse(double eta) const {
    if (kind_ == LinkKind::Logit) return 1.0 / (1.0 + std::exp(-eta));
    return norm_cdf(eta);
  }

  // Forward link g: (0,1) -> R; +-inf at the saturated endpoints.
  double forward(double mu) const {
    if (mu <= 0.0) return -std::numeric_limits<double>::infinity();
    if (mu >= 1.0) return std::numeric_limits<double>::infinity();
    if (kind_ == LinkKind::Logit) return std::log(mu / (1.0 - mu));
    return norm_quantile(mu);
  }

  double derivative(double eta) const {
    if (kind_ == LinkKind::Logit) {
      const double t = std::exp(-std::abs(eta));
      const double s = 1.0 + t;
      return t / (s * s);
    }
    return norm_pdf(eta);
  }

  // V(mu) = mu (1 - mu), evaluated from eta so both factors are accurate.
  double variance_at(double eta) const { return at(eta).variance(); }

  LinkPoint at(double eta) const {
    LinkPoint p;
    if (kind_ == LinkKind::Logit) {
      const double t = std::exp(-std::abs(eta));
      const double small = t / (1.0 + t);
      const double big = 1.0 / (1.0 + t);
      p.mu = eta >= 0.0 ? big : small;
      p.one_minus_mu = eta >= 0.0 ? small : big;
      p.dmu = small * big;
    } else {
      const double tail = 0.5 * std::erfc(std::abs(eta) * kInvSqrt2);
      const double body = 1.0 - tail;
      p.mu = eta >= 0.0 ? body : tail;
      p.one_minus_mu = eta >= 0.0 ? tail : body;
      p.dmu = norm_pdf(eta);
    }
    return p;
  }

private:
  LinkKind kind_;
};

}  // namespace pimfit
