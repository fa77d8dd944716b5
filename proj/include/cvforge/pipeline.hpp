#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cvforge/model.hpp"
#include "cvforge/transform.hpp"

namespace cvforge {

/// One pipeline step: a transformer or (as the final step) a model. Scalar
/// hyperparameters live in `params`; per-step grids in `grids` as
/// param -> candidate list.
struct StepSpec {
  std::string name;
  std::string kind;
  Json params = Json::object();
  Json grids = Json::object();
  ColumnSelector apply_to = ColumnSelector::all_features();
  bool is_model = false;
};

/// Declarative ordered pipeline ending in exactly one model step.
struct PipelineSpec {
  ProblemType problem_type = ProblemType::regression;
  std::vector<StepSpec> steps;

  /// Appends a step. Array-valued entries of `params` become hyperparameter
  /// grids; scalars are fixed. A step added after the model step, an unknown
  /// kind, an invalid param, or an empty grid list all throw. Step names
  /// default to the kind, suffixed on collision.
  PipelineSpec& add_step(const std::string& kind, const Json& params = Json::object(),
                         const ColumnSelector& apply_to = ColumnSelector::all_features(),
                         std::string name = "");

  bool has_model() const { return !steps.empty() && steps.back().is_model; }
  /// Throws unless the pipeline is complete and well-formed.
  void validate() const;
  /// Total Cartesian grid size across all steps (1 when fully scalar).
  std::size_t grid_size() const;

  Json to_json() const;
};

/// One grid dimension in deterministic enumeration order (declaration order,
/// row-major with the last axis varying fastest).
struct GridAxis {
  std::size_t step_index;
  std::string param;
  Json values;  // array
};

std::vector<GridAxis> grid_axes(const PipelineSpec& spec);

/// The spec with grid axes pinned to the given candidate indices.
PipelineSpec resolve_combination(const PipelineSpec& spec, const std::vector<GridAxis>& axes,
                                 const std::vector<std::size_t>& choice);

/// Flat "step.param" -> value map describing a combination.
Json combination_json(const PipelineSpec& spec, const std::vector<GridAxis>& axes,
                      const std::vector<std::size_t>& choice);

/// A trained pipeline: fitted transformers in declaration order plus the
/// fitted model. Immutable and shareable.
class FittedPipeline {
 public:
  FittedPipeline() = default;
  FittedPipeline(FittedPipeline&&) = default;
  FittedPipeline& operator=(FittedPipeline&&) = default;

  std::vector<double> predict_values(const Table& data) const;
  std::vector<std::string> predict_labels(const Table& data) const;

  /// Intermediate table after the named (non-model) step.
  Table preprocess_until(const Table& data, const std::string& step_name) const;

  /// Per-step fitted parameter snapshots plus the chosen hyperparameters.
  Json params_summary() const;

  const Json& chosen_params() const { return chosen_; }
  /// Recorded once by the trainer right after grid resolution.
  void set_chosen_params(Json chosen) { chosen_ = std::move(chosen); }
  ProblemType problem_type() const { return problem_type_; }

 private:
  friend FittedPipeline fit_pipeline(const PipelineSpec&, const DataState&,
                                     const TargetView&, numerics::RngStream,
                                     std::vector<std::string>&);
  DataState run_transforms(const Table& data, std::size_t until_step) const;

  ProblemType problem_type_ = ProblemType::regression;
  std::vector<std::string> initial_features_;
  FeatureTypeMap initial_types_;
  std::vector<std::pair<std::string, std::unique_ptr<FittedTransformer>>> transformers_;
  std::string model_step_name_;
  std::unique_ptr<FittedModel> model_;
  std::vector<std::string> model_inputs_;
  Json chosen_ = Json::object();
};

/// Fits every step in order on the training data only (grids must already be
/// resolved to scalars). Selectors re-resolve after each step; the model
/// receives all surviving numeric feature columns in table order.
FittedPipeline fit_pipeline(const PipelineSpec& spec, const DataState& train,
                            const TargetView& target, numerics::RngStream rng,
                            std::vector<std::string>& warnings);

}  // namespace cvforge
