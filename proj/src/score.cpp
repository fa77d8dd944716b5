#include "cvforge/score.hpp"

#include <cmath>
#include <map>

#include "cvforge/numerics.hpp"

namespace cvforge {

namespace {

const std::map<std::string, ProblemType> kMetrics = {
    {"neg_mean_absolute_error", ProblemType::regression},
    {"neg_mean_squared_error", ProblemType::regression},
    {"r2", ProblemType::regression},
    {"pearson_r_score", ProblemType::regression},
    {"accuracy", ProblemType::classification},
    {"balanced_accuracy", ProblemType::classification},
};

}  // namespace

bool is_metric_name(const std::string& name) { return kMetrics.count(name) > 0; }

bool metric_valid_for(const std::string& name, ProblemType pt) {
  auto it = kMetrics.find(name);
  return it != kMetrics.end() && it->second == pt;
}

double score_regression(const std::string& metric, const std::vector<double>& y_true,
                        const std::vector<double>& y_pred) {
  if (!metric_valid_for(metric, ProblemType::regression))
    throw Error("metric not defined for regression: " + metric);
  if (y_true.size() != y_pred.size()) throw Error("score: length mismatch");
  const std::size_t n = y_true.size();
  if (n == 0) throw Error("score: empty inputs");

  if (metric == "neg_mean_absolute_error") {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(y_true[i] - y_pred[i]);
    return -s / static_cast<double>(n);
  }
  if (metric == "neg_mean_squared_error") {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = y_true[i] - y_pred[i];
      s += d * d;
    }
    return -s / static_cast<double>(n);
  }
  if (metric == "r2") {
    if (n < 2) throw Error("r2: need at least 2 samples");
    double m = numerics::mean(y_true);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double dr = y_true[i] - y_pred[i];
      double dt = y_true[i] - m;
      ss_res += dr * dr;
      ss_tot += dt * dt;
    }
    if (ss_tot <= 0.0) throw Error("r2: constant y_true");
    return 1.0 - ss_res / ss_tot;
  }
  if (metric == "pearson_r_score") {
    return numerics::pearson_r(y_true, y_pred);
  }
  throw Error("unknown metric: " + metric);
}

double score_classification(const std::string& metric,
                            const std::vector<std::string>& y_true,
                            const std::vector<std::string>& y_pred) {
  if (!metric_valid_for(metric, ProblemType::classification))
    throw Error("metric not defined for classification: " + metric);
  if (y_true.size() != y_pred.size()) throw Error("score: length mismatch");
  const std::size_t n = y_true.size();
  if (n == 0) throw Error("score: empty inputs");

  if (metric == "accuracy") {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (y_true[i] == y_pred[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(n);
  }
  if (metric == "balanced_accuracy") {
    // Mean per-class recall over the classes present in y_true.
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;  // hits, total
    for (std::size_t i = 0; i < n; ++i) {
      auto& [hits, total] = per_class[y_true[i]];
      ++total;
      if (y_true[i] == y_pred[i]) ++hits;
    }
    double s = 0.0;
    for (const auto& [cls, ht] : per_class)
      s += static_cast<double>(ht.first) / static_cast<double>(ht.second);
    return s / static_cast<double>(per_class.size());
  }
  throw Error("unknown metric: " + metric);
}

}  // namespace cvforge
