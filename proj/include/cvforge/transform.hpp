#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cvforge/numerics.hpp"
#include "cvforge/table.hpp"

namespace cvforge {

/// The data a pipeline threads through its steps: the current table, the
/// current feature columns (in table order), and the evolving type map.
struct DataState {
  Table table;
  std::vector<std::string> features;
  FeatureTypeMap types;

  /// Feature columns visible to selectors and the model: everything except
  /// columns retagged out of the flow after confound removal.
  std::vector<std::string> active_features() const;
};

/// Target column snapshot. For classification, `numeric` holds the index of
/// each label in the sorted set of unique labels (used for correlations).
struct TargetView {
  std::string name;
  bool is_classification = false;
  std::vector<double> numeric;
  std::vector<std::string> labels;

  static TargetView from_table(const Table& table, const std::string& target,
                               ProblemType pt);
  TargetView take_rows(const std::vector<int>& idx) const;
};

struct TransformerSpec {
  std::string kind;
  Json params = Json::object();
  ColumnSelector apply_to = ColumnSelector::all_features();
};

/// A trained transformer. Learned state is frozen at fit time; apply consumes
/// exactly the columns recorded then and is pure.
class FittedTransformer {
 public:
  virtual ~FittedTransformer() = default;
  virtual const std::string& kind() const = 0;
  virtual DataState apply(const DataState& in) const = 0;
  /// Read-only snapshot of learned parameters for inspection.
  virtual Json summary() const = 0;
};

bool is_transformer_kind(const std::string& kind);

/// Validates kind-specific params (throws on out-of-range values or unknown
/// keys).
void validate_transformer_params(const std::string& kind, const Json& params);

/// Fits a transformer on training data only. Non-fatal events (e.g. an empty
/// CBPM sign group) are appended to `warnings`.
std::unique_ptr<FittedTransformer> fit_transformer(const TransformerSpec& spec,
                                                   const DataState& train,
                                                   const TargetView& target,
                                                   std::vector<std::string>& warnings);

}  // namespace cvforge
