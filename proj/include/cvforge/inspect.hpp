#pragma once

#include "cvforge/cv.hpp"

namespace cvforge {

/// Read-only accessors over a finished CVResult.
namespace inspect {

/// Long-format fold-wise predictions: one row per test-set prediction with
/// columns (sample_index, repeat, fold, y_true, y_pred). Requires retained
/// predictions.
Table fold_predictions(const CVResult& result);

/// Per-step fitted parameter snapshot for one (repeat, fold), including the
/// grid-search winner. Requires retained pipelines.
Json fitted_params(const CVResult& result, int repeat, int fold);

}  // namespace inspect

}  // namespace cvforge
