#include "cvforge/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace cvforge {

using numerics::Matrix;
using numerics::RngStream;

std::vector<double> FittedModel::predict_values(const Matrix&) const {
  throw Error(name() + ": not a regression model");
}

std::vector<std::string> FittedModel::predict_labels(const Matrix&) const {
  throw Error(name() + ": not a classification model");
}

bool is_model_kind(const std::string& name) {
  return name == "dummy" || name == "linear_reg" || name == "ridge" ||
         name == "logistic" || name == "linear_svm";
}

namespace {

void check_keys(const Json& params, const std::set<std::string>& allowed,
                const std::string& name) {
  for (auto it = params.begin(); it != params.end(); ++it)
    if (!allowed.count(it.key()))
      throw Error(name + ": unknown parameter \"" + it.key() + "\"");
}

void check_inputs(const Matrix& x, std::size_t ylen) {
  x.validate();
  if (x.rows() != ylen) throw Error("fit: rows(X) != len(y)");
  if (x.rows() == 0) throw Error("fit: empty training data");
}

std::vector<std::string> sorted_classes(const std::vector<std::string>& labels) {
  std::vector<std::string> c(labels.begin(), labels.end());
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

// ---------------------------------------------------------------------------

class DummyRegressor final : public FittedModel {
 public:
  DummyRegressor(double mean, std::size_t p) : mean_(mean), p_(p) {}
  const std::string& name() const override {
    static const std::string n = "dummy";
    return n;
  }
  ProblemType problem_type() const override { return ProblemType::regression; }
  std::size_t n_inputs() const override { return p_; }
  std::vector<double> predict_values(const Matrix& x) const override {
    if (x.cols() != p_) throw Error("dummy: dimension mismatch");
    return std::vector<double>(x.rows(), mean_);
  }
  Json summary() const override { return Json{{"train_mean", mean_}}; }

 private:
  double mean_;
  std::size_t p_;
};

class DummyClassifier final : public FittedModel {
 public:
  DummyClassifier(std::string majority, std::size_t p)
      : majority_(std::move(majority)), p_(p) {}
  const std::string& name() const override {
    static const std::string n = "dummy";
    return n;
  }
  ProblemType problem_type() const override { return ProblemType::classification; }
  std::size_t n_inputs() const override { return p_; }
  std::vector<std::string> predict_labels(const Matrix& x) const override {
    if (x.cols() != p_) throw Error("dummy: dimension mismatch");
    return std::vector<std::string>(x.rows(), majority_);
  }
  Json summary() const override { return Json{{"majority_class", majority_}}; }

 private:
  std::string majority_;
  std::size_t p_;
};

// ---------------------------------------------------------------------------

class LinearRegressor final : public FittedModel {
 public:
  LinearRegressor(std::string name, std::vector<double> coef, double intercept, Json hyper)
      : name_(std::move(name)), coef_(std::move(coef)), intercept_(intercept),
        hyper_(std::move(hyper)) {}
  const std::string& name() const override { return name_; }
  ProblemType problem_type() const override { return ProblemType::regression; }
  std::size_t n_inputs() const override { return coef_.size(); }
  std::vector<double> predict_values(const Matrix& x) const override {
    if (x.cols() != coef_.size()) throw Error(name_ + ": dimension mismatch");
    std::vector<double> out(x.rows(), intercept_);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < coef_.size(); ++j) out[i] += x(i, j) * coef_[j];
    return out;
  }
  Json summary() const override {
    Json j{{"coefficients", coef_}, {"intercept", intercept_}};
    for (auto it = hyper_.begin(); it != hyper_.end(); ++it) j[it.key()] = it.value();
    return j;
  }

 private:
  std::string name_;
  std::vector<double> coef_;
  double intercept_;
  Json hyper_;
};

// One weight vector (plus bias) per class; binary problems store a single
// vector for the lexicographically larger class.
class LinearClassifier final : public FittedModel {
 public:
  LinearClassifier(std::string name, std::vector<std::string> classes,
                   std::vector<std::vector<double>> weights, std::vector<double> biases,
                   std::size_t p, Json hyper)
      : name_(std::move(name)), classes_(std::move(classes)), weights_(std::move(weights)),
        biases_(std::move(biases)), p_(p), hyper_(std::move(hyper)) {}

  const std::string& name() const override { return name_; }
  ProblemType problem_type() const override { return ProblemType::classification; }
  std::size_t n_inputs() const override { return p_; }

  std::vector<std::string> predict_labels(const Matrix& x) const override {
    if (x.cols() != p_) throw Error(name_ + ": dimension mismatch");
    std::vector<std::string> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (classes_.size() == 2) {
        double s = biases_[0];
        for (std::size_t j = 0; j < p_; ++j) s += x(i, j) * weights_[0][j];
        out[i] = s > 0.0 ? classes_[1] : classes_[0];
      } else {
        std::size_t best = 0;
        double best_score = -1e300;
        for (std::size_t k = 0; k < classes_.size(); ++k) {
          double s = biases_[k];
          for (std::size_t j = 0; j < p_; ++j) s += x(i, j) * weights_[k][j];
          if (s > best_score) {
            best_score = s;
            best = k;
          }
        }
        out[i] = classes_[best];
      }
    }
    return out;
  }

  Json summary() const override {
    Json w = Json::array();
    for (const auto& v : weights_) w.push_back(v);
    Json j{{"classes", classes_}, {"weights", w}, {"biases", biases_}};
    for (auto it = hyper_.begin(); it != hyper_.end(); ++it) j[it.key()] = it.value();
    return j;
  }

 private:
  std::string name_;
  std::vector<std::string> classes_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> biases_;
  std::size_t p_;
  Json hyper_;
};

// ---------------------------------------------------------------------------

// L2-regularized logistic regression by Newton/IRLS; the intercept is
// unpenalized. Stops when the gradient infinity-norm drops below 1e-8.
void fit_logistic_binary(const Matrix& x, const std::vector<double>& y01, double lambda,
                         std::vector<double>& w, double& b) {
  const std::size_t n = x.rows(), p = x.cols();
  w.assign(p, 0.0);
  b = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<double> mu(n), wt(n);
    for (std::size_t i = 0; i < n; ++i) {
      double eta = b;
      for (std::size_t j = 0; j < p; ++j) eta += x(i, j) * w[j];
      double m = 1.0 / (1.0 + std::exp(-eta));
      mu[i] = m;
      wt[i] = std::max(m * (1.0 - m), 1e-10);
    }
    std::vector<double> grad(p + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double r = mu[i] - y01[i];
      for (std::size_t j = 0; j < p; ++j) grad[j] += x(i, j) * r;
      grad[p] += r;
    }
    for (std::size_t j = 0; j < p; ++j) grad[j] += lambda * w[j];
    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    if (gmax <= 1e-8) break;

    Matrix h(p + 1, p + 1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < p; ++a) {
        double xa = x(i, a) * wt[i];
        for (std::size_t c = a; c < p; ++c) h(a, c) += xa * x(i, c);
        h(a, p) += xa;
      }
      h(p, p) += wt[i];
    }
    for (std::size_t a = 0; a < p; ++a) {
      h(a, a) += lambda > 0 ? lambda : 1e-10;
      for (std::size_t c = a + 1; c <= p; ++c) h(c, a) = h(a, c);
    }
    std::vector<double> delta = numerics::solve_spd(h, grad);
    for (std::size_t j = 0; j < p; ++j) w[j] -= delta[j];
    b -= delta[p];
  }
}

// Pegasos-style primal subgradient descent with a fixed 2000-epoch budget,
// step 1/(lambda*t), rng-driven shuffling, and an averaged iterate output.
// Returns the averaged weights (bias last) and the averaged-iterate objective
// sampled every 200 epochs.
struct SvmFit {
  std::vector<double> w_avg;  // p + 1, bias last
  std::vector<double> objective_trace;
};

SvmFit fit_svm_subgradient(const Matrix& x, const std::vector<double>& y, double c_param,
                           double epsilon, bool classification, RngStream rng) {
  const std::size_t n = x.rows(), p = x.cols();
  const double lambda = 1.0 / (c_param * static_cast<double>(n));
  const int epochs = 2000;

  std::vector<double> w(p + 1, 0.0), w_sum(p + 1, 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  auto objective = [&](const std::vector<double>& wv) {
    double reg = 0.0;
    for (std::size_t j = 0; j <= p; ++j) reg += wv[j] * wv[j];
    reg *= 0.5 * lambda;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = wv[p];
      for (std::size_t j = 0; j < p; ++j) s += x(i, j) * wv[j];
      if (classification)
        loss += std::max(0.0, 1.0 - y[i] * s);
      else
        loss += std::max(0.0, std::abs(s - y[i]) - epsilon);
    }
    return reg + loss / static_cast<double>(n);
  };

  SvmFit fit;
  long long t = 0;
  for (int e = 0; e < epochs; ++e) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      ++t;
      double eta = 1.0 / (lambda * static_cast<double>(t));
      double s = w[p];
      for (std::size_t j = 0; j < p; ++j) s += x(idx, j) * w[j];

      double shrink = 1.0 - eta * lambda;
      for (std::size_t j = 0; j <= p; ++j) w[j] *= shrink;
      if (classification) {
        if (y[idx] * s < 1.0) {
          double f = eta * y[idx];
          for (std::size_t j = 0; j < p; ++j) w[j] += f * x(idx, j);
          w[p] += f;
        }
      } else {
        double diff = s - y[idx];
        if (std::abs(diff) > epsilon) {
          double sign = diff > 0 ? 1.0 : -1.0;
          for (std::size_t j = 0; j < p; ++j) w[j] -= eta * sign * x(idx, j);
          w[p] -= eta * sign;
        }
      }
    }
    for (std::size_t j = 0; j <= p; ++j) w_sum[j] += w[j];
    if ((e + 1) % 200 == 0) {
      std::vector<double> avg(p + 1);
      for (std::size_t j = 0; j <= p; ++j)
        avg[j] = w_sum[j] / static_cast<double>(e + 1);
      fit.objective_trace.push_back(objective(avg));
    }
  }
  fit.w_avg.resize(p + 1);
  for (std::size_t j = 0; j <= p; ++j)
    fit.w_avg[j] = w_sum[j] / static_cast<double>(epochs);
  return fit;
}

}  // namespace

void validate_model_spec(const ModelSpec& spec) {
  if (!is_model_kind(spec.name)) throw Error("unknown model: " + spec.name);
  bool regression = spec.problem_type == ProblemType::regression;
  if ((spec.name == "linear_reg" || spec.name == "ridge") && !regression)
    throw Error(spec.name + " is regression-only");
  if (spec.name == "logistic" && regression)
    throw Error("logistic is classification-only");

  if (spec.name == "dummy" || spec.name == "linear_reg") {
    check_keys(spec.params, {}, spec.name);
  } else if (spec.name == "ridge" || spec.name == "logistic") {
    check_keys(spec.params, {"lambda"}, spec.name);
    if (spec.params.contains("lambda")) {
      if (!spec.params["lambda"].is_number() || spec.params["lambda"].get<double>() < 0)
        throw Error(spec.name + ": lambda must be >= 0");
    }
  } else if (spec.name == "linear_svm") {
    check_keys(spec.params, {"C", "epsilon"}, spec.name);
    if (spec.params.contains("C")) {
      if (!spec.params["C"].is_number() || spec.params["C"].get<double>() <= 0)
        throw Error("linear_svm: C must be > 0");
    }
    if (spec.params.contains("epsilon")) {
      if (!spec.params["epsilon"].is_number() || spec.params["epsilon"].get<double>() < 0)
        throw Error("linear_svm: epsilon must be >= 0");
    }
  }
}

std::unique_ptr<FittedModel> fit_model(const ModelSpec& spec, const Matrix& x,
                                       const TargetView& y, RngStream rng) {
  validate_model_spec(spec);
  const bool classification = spec.problem_type == ProblemType::classification;
  check_inputs(x, classification ? y.labels.size() : y.numeric.size());
  if (!classification)
    for (double v : y.numeric)
      if (!std::isfinite(v)) throw Error("fit: non-finite target value");

  std::vector<std::string> classes;
  if (classification) {
    classes = sorted_classes(y.labels);
    if (classes.size() < 2 && spec.name != "dummy")
      throw Error(spec.name + ": single-class training fold");
  }

  if (spec.name == "dummy") {
    if (!classification)
      return std::make_unique<DummyRegressor>(numerics::mean(y.numeric), x.cols());
    // Majority class; lexicographic tie-break comes free from the sorted map.
    std::map<std::string, std::size_t> counts;
    for (const auto& l : y.labels) ++counts[l];
    std::string best;
    std::size_t best_n = 0;
    for (const auto& [label, cnt] : counts)
      if (cnt > best_n) {
        best = label;
        best_n = cnt;
      }
    return std::make_unique<DummyClassifier>(best, x.cols());
  }

  if (spec.name == "linear_reg") {
    std::vector<double> beta = numerics::least_squares(x, y.numeric, true);
    double intercept = beta.back();
    beta.pop_back();
    return std::make_unique<LinearRegressor>("linear_reg", std::move(beta), intercept,
                                             Json::object());
  }

  if (spec.name == "ridge") {
    double lambda = spec.params.value("lambda", 1.0);
    const std::size_t n = x.rows(), p = x.cols();
    std::vector<double> xmean(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t i = 0; i < n; ++i) xmean[j] += x(i, j);
      xmean[j] /= static_cast<double>(n);
    }
    double ymean = numerics::mean(y.numeric);

    // Unpenalized intercept via centering; solved as an augmented least
    // squares [Xc; sqrt(lambda) I] so rank deficiency stays harmless.
    std::size_t extra = lambda > 0.0 ? p : 0;
    Matrix aug(n + extra, p);
    std::vector<double> yc(n + extra, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < p; ++j) aug(i, j) = x(i, j) - xmean[j];
      yc[i] = y.numeric[i] - ymean;
    }
    double sl = std::sqrt(lambda);
    for (std::size_t j = 0; j < extra; ++j) aug(n + j, j) = sl;
    std::vector<double> beta = numerics::least_squares(aug, yc, false);
    double intercept = ymean;
    for (std::size_t j = 0; j < p; ++j) intercept -= xmean[j] * beta[j];
    return std::make_unique<LinearRegressor>("ridge", std::move(beta), intercept,
                                             Json{{"lambda", lambda}});
  }

  if (spec.name == "logistic") {
    double lambda = spec.params.value("lambda", 1.0);
    const std::size_t p = x.cols();
    std::vector<std::vector<double>> weights;
    std::vector<double> biases;
    if (classes.size() == 2) {
      std::vector<double> y01(y.labels.size());
      for (std::size_t i = 0; i < y.labels.size(); ++i)
        y01[i] = y.labels[i] == classes[1] ? 1.0 : 0.0;
      std::vector<double> w;
      double b;
      fit_logistic_binary(x, y01, lambda, w, b);
      weights.push_back(std::move(w));
      biases.push_back(b);
    } else {
      for (const auto& cls : classes) {
        std::vector<double> y01(y.labels.size());
        for (std::size_t i = 0; i < y.labels.size(); ++i)
          y01[i] = y.labels[i] == cls ? 1.0 : 0.0;
        std::vector<double> w;
        double b;
        fit_logistic_binary(x, y01, lambda, w, b);
        weights.push_back(std::move(w));
        biases.push_back(b);
      }
    }
    return std::make_unique<LinearClassifier>("logistic", std::move(classes),
                                              std::move(weights), std::move(biases), p,
                                              Json{{"lambda", lambda}});
  }

  if (spec.name == "linear_svm") {
    double c_param = spec.params.value("C", 1.0);
    double epsilon = spec.params.value("epsilon", 0.1);
    const std::size_t p = x.cols();
    if (!classification) {
      SvmFit fit = fit_svm_subgradient(x, y.numeric, c_param, epsilon, false, rng);
      double bias = fit.w_avg.back();
      fit.w_avg.pop_back();
      return std::make_unique<LinearRegressor>(
          "linear_svm", std::move(fit.w_avg), bias,
          Json{{"C", c_param}, {"epsilon", epsilon},
               {"objective_trace", fit.objective_trace}});
    }
    std::vector<std::vector<double>> weights;
    std::vector<double> biases;
    Json traces = Json::array();
    if (classes.size() == 2) {
      std::vector<double> ypm(y.labels.size());
      for (std::size_t i = 0; i < y.labels.size(); ++i)
        ypm[i] = y.labels[i] == classes[1] ? 1.0 : -1.0;
      SvmFit fit = fit_svm_subgradient(x, ypm, c_param, 0.0, true, rng);
      traces.push_back(fit.objective_trace);
      biases.push_back(fit.w_avg.back());
      fit.w_avg.pop_back();
      weights.push_back(std::move(fit.w_avg));
    } else {
      for (std::size_t k = 0; k < classes.size(); ++k) {
        std::vector<double> ypm(y.labels.size());
        for (std::size_t i = 0; i < y.labels.size(); ++i)
          ypm[i] = y.labels[i] == classes[k] ? 1.0 : -1.0;
        SvmFit fit = fit_svm_subgradient(x, ypm, c_param, 0.0, true,
                                         numerics::split_rng(rng, k));
        traces.push_back(fit.objective_trace);
        biases.push_back(fit.w_avg.back());
        fit.w_avg.pop_back();
        weights.push_back(std::move(fit.w_avg));
      }
    }
    return std::make_unique<LinearClassifier>(
        "linear_svm", std::move(classes), std::move(weights), std::move(biases), p,
        Json{{"C", c_param}, {"objective_trace", traces}});
  }

  throw Error("unknown model: " + spec.name);
}

}  // namespace cvforge
