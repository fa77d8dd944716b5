#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cvforge/numerics.hpp"
#include "cvforge/transform.hpp"

namespace cvforge {

struct ModelSpec {
  std::string name;  // dummy, linear_reg, ridge, logistic, linear_svm
  ProblemType problem_type = ProblemType::regression;
  Json params = Json::object();
};

bool is_model_kind(const std::string& name);
void validate_model_spec(const ModelSpec& spec);

/// A trained estimator. Regression models answer predict_values; classifiers
/// answer predict_labels. Immutable after fit.
class FittedModel {
 public:
  virtual ~FittedModel() = default;
  virtual const std::string& name() const = 0;
  virtual ProblemType problem_type() const = 0;
  virtual std::size_t n_inputs() const = 0;
  virtual std::vector<double> predict_values(const numerics::Matrix& x) const;
  virtual std::vector<std::string> predict_labels(const numerics::Matrix& x) const;
  virtual Json summary() const = 0;
};

std::unique_ptr<FittedModel> fit_model(const ModelSpec& spec, const numerics::Matrix& x,
                                       const TargetView& y, numerics::RngStream rng);

}  // namespace cvforge
