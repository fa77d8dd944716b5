#pragma once

#include "cvforge/cv.hpp"

namespace cvforge {

/// Stable result schema (v1): {schema_version, config_echo, fold_plan,
/// scores, chosen_params, predictions, warnings}. Train indices are stored
/// as a content hash (reconstructible from config + seed); test indices are
/// explicit.
Json result_to_json(const CVResult& result, const Json& config_echo);

/// Reconstructs the comparison/inspection-relevant parts of a CVResult from
/// a result file (fold plan, scores, chosen params, predictions). Fitted
/// pipelines are never serialized.
CVResult result_from_json(const Json& j);

void save_json(const Json& j, const std::string& path);
Json load_json(const std::string& path);

}  // namespace cvforge
