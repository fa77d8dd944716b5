#include "cvforge/inspect.hpp"

namespace cvforge::inspect {

Table fold_predictions(const CVResult& result) {
  bool classification = result.problem_type == ProblemType::classification;
  bool has_preds = false;
  for (std::size_t i = 0; i < result.plan.size(); ++i)
    if ((classification && !result.pred_labels[i].empty()) ||
        (!classification && !result.pred_values[i].empty()))
      has_preds = true;
  if (!has_preds) throw Error("predictions were not retained in this result");

  NumericColumn sample, repeat_col, fold_col;
  NumericColumn y_true_num, y_pred_num;
  CategoricalColumn y_true_lab, y_pred_lab;
  for (std::size_t i = 0; i < result.plan.size(); ++i) {
    const FoldInfo& f = result.plan[i];
    for (std::size_t j = 0; j < f.test_idx.size(); ++j) {
      int idx = f.test_idx[j];
      sample.push_back(idx);
      repeat_col.push_back(f.repeat);
      fold_col.push_back(f.fold);
      if (classification) {
        y_true_lab.push_back(result.y_true_labels[static_cast<std::size_t>(idx)]);
        y_pred_lab.push_back(result.pred_labels[i][j]);
      } else {
        y_true_num.push_back(result.y_true_values[static_cast<std::size_t>(idx)]);
        y_pred_num.push_back(result.pred_values[i][j]);
      }
    }
  }

  Table t;
  t.add_numeric("sample_index", std::move(sample));
  t.add_numeric("repeat", std::move(repeat_col));
  t.add_numeric("fold", std::move(fold_col));
  if (classification) {
    t.add_categorical("y_true", std::move(y_true_lab));
    t.add_categorical("y_pred", std::move(y_pred_lab));
  } else {
    t.add_numeric("y_true", std::move(y_true_num));
    t.add_numeric("y_pred", std::move(y_pred_num));
  }
  return t;
}

Json fitted_params(const CVResult& result, int repeat, int fold) {
  if (result.pipelines.empty())
    throw Error("pipelines were not retained in this result");
  for (std::size_t i = 0; i < result.plan.size(); ++i) {
    if (result.plan[i].repeat == repeat && result.plan[i].fold == fold) {
      Json j = result.pipelines[i].params_summary();
      j["chosen_hyperparameters"] = result.chosen_params[i];
      return j;
    }
  }
  throw Error("fold (repeat " + std::to_string(repeat) + ", fold " + std::to_string(fold) +
              ") out of range");
}

}  // namespace cvforge::inspect
