#include "cvforge/pipeline.hpp"

#include <algorithm>
#include <set>

namespace cvforge {

using numerics::Matrix;
using numerics::RngStream;

PipelineSpec& PipelineSpec::add_step(const std::string& kind, const Json& params,
                                     const ColumnSelector& apply_to, std::string name) {
  if (has_model()) throw Error("model must be final step; cannot add \"" + kind + "\"");
  bool model = is_model_kind(kind);
  if (!model && !is_transformer_kind(kind)) throw Error("unknown step kind: " + kind);
  if (!params.is_object()) throw Error(kind + ": params must be a JSON object");

  StepSpec step;
  step.kind = kind;
  step.is_model = model;
  step.apply_to = apply_to;
  for (auto it = params.begin(); it != params.end(); ++it) {
    if (it.value().is_array()) {
      if (it.value().empty())
        throw Error(kind + ": empty hyperparameter grid for \"" + it.key() + "\"");
      step.grids[it.key()] = it.value();
    } else {
      step.params[it.key()] = it.value();
    }
  }

  if (name.empty()) {
    name = kind;
    int suffix = 2;
    auto taken = [&](const std::string& n) {
      return std::any_of(steps.begin(), steps.end(),
                         [&](const StepSpec& s) { return s.name == n; });
    };
    while (taken(name)) name = kind + "_" + std::to_string(suffix++);
  } else {
    for (const auto& s : steps)
      if (s.name == name) throw Error("duplicate step name: " + name);
  }
  step.name = std::move(name);

  // Type-check scalar params and every grid candidate now, not at fit time.
  auto check = [&](const Json& p) {
    if (model) {
      ModelSpec ms{kind, problem_type, p};
      validate_model_spec(ms);
    } else {
      validate_transformer_params(kind, p);
    }
  };
  check(step.params);
  for (auto it = step.grids.begin(); it != step.grids.end(); ++it) {
    for (const auto& candidate : it.value()) {
      Json p = step.params;
      p[it.key()] = candidate;
      check(p);
    }
  }

  steps.push_back(std::move(step));
  return *this;
}

void PipelineSpec::validate() const {
  if (steps.empty()) throw Error("pipeline has no steps");
  if (!steps.back().is_model) throw Error("pipeline must end in a model step");
  for (std::size_t i = 0; i + 1 < steps.size(); ++i)
    if (steps[i].is_model) throw Error("model must be final step");
}

std::size_t PipelineSpec::grid_size() const {
  std::size_t total = 1;
  for (const auto& s : steps)
    for (auto it = s.grids.begin(); it != s.grids.end(); ++it)
      total *= it.value().size();
  return total;
}

Json PipelineSpec::to_json() const {
  Json arr = Json::array();
  for (const auto& s : steps) {
    Json j{{"name", s.name}, {"kind", s.kind}};
    Json params = s.params;
    for (auto it = s.grids.begin(); it != s.grids.end(); ++it) params[it.key()] = it.value();
    j["params"] = params;
    if (!s.is_model) j["apply_to"] = s.apply_to.to_json();
    arr.push_back(j);
  }
  return arr;
}

std::vector<GridAxis> grid_axes(const PipelineSpec& spec) {
  std::vector<GridAxis> axes;
  for (std::size_t i = 0; i < spec.steps.size(); ++i)
    for (auto it = spec.steps[i].grids.begin(); it != spec.steps[i].grids.end(); ++it)
      axes.push_back(GridAxis{i, it.key(), it.value()});
  return axes;
}

PipelineSpec resolve_combination(const PipelineSpec& spec, const std::vector<GridAxis>& axes,
                                 const std::vector<std::size_t>& choice) {
  PipelineSpec out = spec;
  for (auto& s : out.steps) s.grids = Json::object();
  for (std::size_t a = 0; a < axes.size(); ++a)
    out.steps[axes[a].step_index].params[axes[a].param] = axes[a].values[choice[a]];
  return out;
}

Json combination_json(const PipelineSpec& spec, const std::vector<GridAxis>& axes,
                      const std::vector<std::size_t>& choice) {
  Json j = Json::object();
  for (std::size_t a = 0; a < axes.size(); ++a)
    j[spec.steps[axes[a].step_index].name + "." + axes[a].param] = axes[a].values[choice[a]];
  return j;
}

FittedPipeline fit_pipeline(const PipelineSpec& spec, const DataState& train,
                            const TargetView& target, RngStream rng,
                            std::vector<std::string>& warnings) {
  spec.validate();
  if (spec.grid_size() != 1)
    throw Error("fit_pipeline requires grids resolved to scalars (use tune_grid)");

  FittedPipeline fp;
  fp.problem_type_ = spec.problem_type;
  fp.initial_features_ = train.features;
  fp.initial_types_ = train.types;

  DataState state = train;
  for (std::size_t i = 0; i + 1 < spec.steps.size(); ++i) {
    const StepSpec& step = spec.steps[i];
    try {
      TransformerSpec ts{step.kind, step.params, step.apply_to};
      auto fitted = fit_transformer(ts, state, target, warnings);
      state = fitted->apply(state);
      fp.transformers_.emplace_back(step.name, std::move(fitted));
    } catch (const Error& e) {
      throw Error("step \"" + step.name + "\": " + e.what());
    }
  }

  const StepSpec& mstep = spec.steps.back();
  fp.model_step_name_ = mstep.name;
  for (const auto& f : state.active_features()) {
    if (!state.table.is_numeric(f))
      throw Error("step \"" + mstep.name + "\": categorical feature \"" + f +
                  "\" reached the model without encoding");
    fp.model_inputs_.push_back(f);
  }
  if (fp.model_inputs_.empty())
    throw Error("step \"" + mstep.name + "\": no feature columns reached the model");

  Matrix x(state.table.n_rows(), fp.model_inputs_.size());
  for (std::size_t j = 0; j < fp.model_inputs_.size(); ++j) {
    const auto& col = state.table.numeric(fp.model_inputs_[j]);
    for (std::size_t i = 0; i < col.size(); ++i) x(i, j) = col[i];
  }
  try {
    ModelSpec ms{mstep.kind, spec.problem_type, mstep.params};
    fp.model_ = fit_model(ms, x, target, rng);
  } catch (const Error& e) {
    throw Error("step \"" + mstep.name + "\": " + e.what());
  }
  return fp;
}

DataState FittedPipeline::run_transforms(const Table& data, std::size_t until_step) const {
  for (const auto& f : initial_features_)
    if (!data.has_column(f)) throw Error("missing input column: " + f);
  DataState state{data, initial_features_, initial_types_};
  for (std::size_t i = 0; i < until_step; ++i) state = transformers_[i].second->apply(state);
  return state;
}

namespace {

Matrix build_matrix(const DataState& state, const std::vector<std::string>& cols) {
  Matrix x(state.table.n_rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const auto& col = state.table.numeric(cols[j]);
    for (std::size_t i = 0; i < col.size(); ++i) x(i, j) = col[i];
  }
  return x;
}

}  // namespace

std::vector<double> FittedPipeline::predict_values(const Table& data) const {
  DataState state = run_transforms(data, transformers_.size());
  return model_->predict_values(build_matrix(state, model_inputs_));
}

std::vector<std::string> FittedPipeline::predict_labels(const Table& data) const {
  DataState state = run_transforms(data, transformers_.size());
  return model_->predict_labels(build_matrix(state, model_inputs_));
}

Table FittedPipeline::preprocess_until(const Table& data, const std::string& step_name) const {
  if (step_name == model_step_name_)
    throw Error("model step not preprocessable: " + step_name);
  for (std::size_t i = 0; i < transformers_.size(); ++i)
    if (transformers_[i].first == step_name)
      return run_transforms(data, i + 1).table;
  throw Error("unknown step: " + step_name);
}

Json FittedPipeline::params_summary() const {
  Json j = Json::object();
  for (const auto& [name, t] : transformers_) j[name] = t->summary();
  j[model_step_name_] = model_->summary();
  if (!chosen_.empty()) j["chosen_hyperparameters"] = chosen_;
  return j;
}

}  // namespace cvforge
