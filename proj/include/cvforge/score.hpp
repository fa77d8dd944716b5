#pragma once

#include <string>
#include <vector>

#include "cvforge/common.hpp"

namespace cvforge {

/// Metric names accepted in `scoring` lists. All metrics are oriented
/// higher-is-better (error metrics are negated).
bool is_metric_name(const std::string& name);
bool metric_valid_for(const std::string& name, ProblemType pt);

double score_regression(const std::string& metric, const std::vector<double>& y_true,
                        const std::vector<double>& y_pred);

double score_classification(const std::string& metric,
                            const std::vector<std::string>& y_true,
                            const std::vector<std::string>& y_pred);

}  // namespace cvforge
