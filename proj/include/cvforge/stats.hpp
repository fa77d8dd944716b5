#pragma once

#include <string>
#include <vector>

#include "cvforge/cv.hpp"

namespace cvforge {

/// Corrected resampled t-test outcome for one pipeline pair.
struct TestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double mean_diff = 0.0;
  int k = 0;              // number of paired folds
  double correction = 0;  // 1/k + n_test/n_train
  bool degenerate = false;
};

/// True when two results were produced from the same fold plan (identical
/// (repeat, fold, n_train, n_test) records, test indices and train hashes).
bool fold_plans_match(const std::vector<FoldInfo>& a, const std::vector<FoldInfo>& b);

/// Core corrected resampled t-test: paired fold scores with variance inflated
/// by (1/k + test/train proportion) to compensate for overlapping training
/// sets. Two-sided p via the t distribution with k-1 degrees of freedom.
TestResult corrected_ttest_scores(const std::vector<double>& a, const std::vector<double>& b,
                                  double test_train_ratio);

/// Same-plan wrapper over two CVResults. The correction uses the mean fold
/// sizes (kfold folds may differ by one sample).
TestResult corrected_ttest(const CVResult& a, const CVResult& b, const std::string& metric);

struct ComparisonRow {
  std::string name_a;
  std::string name_b;
  TestResult test;
  double mean_a = 0.0;
  double mean_b = 0.0;
};

struct ComparisonTable {
  std::string metric;
  std::vector<ComparisonRow> rows;
  /// Plot-ready long format: one record per (pipeline, repeat, fold) score.
  Json long_scores = Json::array();
};

/// All unordered pairs in input order; every result must share one fold plan.
ComparisonTable compare_all(const std::vector<std::pair<std::string, const CVResult*>>& results,
                            const std::string& metric);

/// Welch two-sample t-test (unequal variances); two-sided p.
TestResult welch_ttest(const std::vector<double>& a, const std::vector<double>& b);

std::string render_comparison_text(const ComparisonTable& table);

}  // namespace cvforge
