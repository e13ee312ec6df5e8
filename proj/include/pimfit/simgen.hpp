#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pimfit/dataset.hpp"
#include "pimfit/errors.hpp"
#include "pimfit/rng.hpp"

namespace pimfit {

// Linear data-generating models for the Monte Carlo studies:
//   y = mu + alpha x + gamma . covariates + eps,  eps ~ N(0, sigma^2).
// Model 3 adds three Bernoulli covariates calibrated to the survey data the
// benchmarks imitate; its predictor is integer-coded 0..7.
struct GeneratingModel {
  enum class Kind { Model1, Model2, Model3, Custom };

  struct Covariate {
    std::string name;
    double coefficient = 0.0;
    double probability = 0.0;  // Bernoulli P(value = 1)
  };

  Kind kind = Kind::Custom;
  double intercept = 0.0;
  double slope = 0.0;
  double sigma = 1.0;
  double x_low = 0.0;
  double x_high = 1.0;
  bool x_integer = false;
  std::string x_name = "X";
  std::string y_name = "Y";
  std::vector<Covariate> covariates;

  static GeneratingModel model1() {
    GeneratingModel m;
    m.kind = Kind::Model1;
    m.slope = 5.0;
    m.sigma = 1.0;
    m.x_low = 0.1;
    m.x_high = 1.0;
    return m;
  }

  static GeneratingModel model2() {
    GeneratingModel m;
    m.kind = Kind::Model2;
    m.slope = 1.0;
    m.sigma = 5.0;
    m.x_low = 0.1;
    m.x_high = 10.0;
    return m;
  }

  static GeneratingModel model3() {
    GeneratingModel m;
    m.kind = Kind::Model3;
    m.intercept = 46.717;
    m.slope = -0.432;
    m.sigma = 9.51;
    m.x_low = 0.0;
    m.x_high = 7.0;
    m.x_integer = true;
    m.x_name = "SMART";
    m.y_name = "MWBI";
    m.covariates = {{"GENDER", 4.550, 0.48},
                    {"MINORITY", 0.305, 0.24},
                    {"DEPRIVED", -0.451, 0.43}};
    return m;
  }

  static GeneratingModel by_name(const std::string& name) {
    if (name == "model1") return model1();
    if (name == "model2") return model2();
    if (name == "model3") return model3();
    throw ConfigError("unknown generating model '" + name + "'");
  }

  std::string name() const {
    switch (kind) {
      case Kind::Model1: return "model1";
      case Kind::Model2: return "model2";
      case Kind::Model3: return "model3";
      case Kind::Custom: return "custom";
    }
    return "custom";
  }

  void validate() const {
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (!(x_high >= x_low)) throw ConfigError("empty predictor range");
  }
};

// Probit-link PIM slope implied by the linear model: beta = alpha/(sqrt(2) sigma).
struct TrueBeta {
  double value = 0.0;
};

inline TrueBeta true_beta(const GeneratingModel& model) {
  model.validate();
  return TrueBeta{model.slope / (std::sqrt(2.0) * model.sigma)};
}

inline Dataset generate(const GeneratingModel& model, Eigen::Index n,
                        std::uint64_t seed) {
  model.validate();
  if (n < 1) throw ConfigError("sample size must be positive");
  Rng rng(seed);
  Dataset data;
  data.column_names.push_back(model.x_name);
  for (const auto& cov : model.covariates) data.column_names.push_back(cov.name);
  data.y.resize(n);
  data.x.resize(n, 1 + static_cast<Eigen::Index>(model.covariates.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    double x;
    if (model.x_integer) {
      x = static_cast<double>(rng.uniform_int(
          static_cast<std::int64_t>(std::llround(model.x_low)),
          static_cast<std::int64_t>(std::llround(model.x_high))));
    } else {
      x = rng.uniform(model.x_low, model.x_high);
    }
    data.x(i, 0) = x;
    double mean = model.intercept + model.slope * x;
    for (std::size_t c = 0; c < model.covariates.size(); ++c) {
      const double v = rng.bernoulli(model.covariates[c].probability);
      data.x(i, 1 + static_cast<Eigen::Index>(c)) = v;
      mean += model.covariates[c].coefficient * v;
    }
    data.y[i] = mean + rng.normal(0.0, model.sigma);
  }
  return data;
}

}  // namespace pimfit
