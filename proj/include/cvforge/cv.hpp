#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvforge/pipeline.hpp"
#include "cvforge/table.hpp"

namespace cvforge {

struct CVScheme {
  enum class Kind { kfold, repeated_kfold, stratified_kfold, group_kfold, leave_one_out };
  Kind kind = Kind::kfold;
  int k = 5;
  int repeats = 1;
  bool shuffle = false;
  std::string group_column;  // group_kfold only

  static CVScheme kfold(int k, bool shuffle = false);
  static CVScheme repeated_kfold(int k, int repeats);
  static CVScheme stratified_kfold(int k, bool shuffle = false);
  static CVScheme group_kfold(int k, std::string group_column);
  static CVScheme leave_one_out();

  Json to_json() const;
  static CVScheme from_json(const Json& j);
};

struct Fold {
  int repeat = 0;
  int fold = 0;
  std::vector<int> train_idx;
  std::vector<int> test_idx;
};

using FoldPlan = std::vector<Fold>;

/// Concrete fold plan for n samples. Deterministic given the rng; stratified
/// folds preserve class proportions within one sample per class per fold;
/// group folds never place one group on both sides of a split.
FoldPlan make_splits(const CVScheme& scheme, int n,
                     const std::vector<std::string>* y_labels,
                     const std::vector<std::string>* groups, numerics::RngStream rng);

struct TuningConfig {
  std::optional<CVScheme> inner;      // default: k=5, stratified for classification
  std::string objective;              // default: first scoring metric
};

struct ScoreRecord {
  int repeat = 0;
  int fold = 0;
  std::string metric;
  double value = 0.0;
  int n_train = 0;
  int n_test = 0;
};

struct FoldInfo {
  int repeat = 0;
  int fold = 0;
  int n_train = 0;
  int n_test = 0;
  std::vector<int> test_idx;
  std::uint64_t train_hash = 0;  // FNV-1a over the train indices
};

struct CVResult {
  ProblemType problem_type = ProblemType::regression;
  std::vector<std::string> metrics;
  std::uint64_t seed = 0;

  std::vector<FoldInfo> plan;
  std::vector<ScoreRecord> scores;
  std::vector<Json> chosen_params;                  // per fold, plan order
  std::vector<std::vector<double>> pred_values;     // per fold (regression)
  std::vector<std::vector<std::string>> pred_labels;  // per fold (classification)
  std::vector<double> y_true_values;                // full-dataset target snapshot
  std::vector<std::string> y_true_labels;
  std::vector<FittedPipeline> pipelines;            // only when retained
  std::vector<std::string> warnings;

  double mean_score(const std::string& metric) const;
  /// Scores for one metric ordered by (repeat, fold).
  std::vector<double> metric_scores(const std::string& metric) const;
};

std::uint64_t fnv1a_hash(const std::vector<int>& idx);

struct RunOptions {
  int jobs = 1;
  bool retain_pipelines = false;
};

/// The core entry point: leakage-free (nested) cross-validation of one
/// pipeline. Hyperparameters are tuned per outer fold on the training part
/// only; per-fold seeds derive from split_rng so results are independent of
/// execution order and worker count.
CVResult run_cross_validation(const Table& data, const std::vector<std::string>& features,
                              const std::string& target, const FeatureTypeMap& types,
                              const PipelineSpec& spec, const CVScheme& scheme,
                              const std::vector<std::string>& scoring,
                              const TuningConfig* tuning, std::uint64_t seed,
                              const RunOptions& opts = RunOptions{});

struct TuneOutcome {
  PipelineSpec resolved;
  Json chosen = Json::object();
  Json inner_table = Json::array();  // one row per combination: params + mean score
};

/// Grid search over the Cartesian product of all step grids, evaluated by an
/// inner CV on the given training data only. Ties break toward the first
/// combination in declaration order (row-major). Grid size 1 short-circuits.
TuneOutcome tune_grid(const PipelineSpec& spec, const DataState& train,
                      const TargetView& target, const CVScheme* inner_scheme,
                      const std::string& objective, numerics::RngStream rng);

}  // namespace cvforge
