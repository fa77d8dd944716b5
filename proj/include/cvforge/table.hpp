#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "cvforge/common.hpp"

namespace cvforge {

using NumericColumn = std::vector<double>;
using CategoricalColumn = std::vector<std::string>;
using Column = std::variant<NumericColumn, CategoricalColumn>;

/// Column-major tabular dataset with named columns. Immutable in spirit:
/// pipeline code copies a Table before modifying it, and shared instances are
/// never mutated.
class Table {
 public:
  Table() = default;

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return names_.size(); }
  const std::vector<std::string>& column_names() const { return names_; }

  bool has_column(const std::string& name) const;
  bool is_numeric(const std::string& name) const;
  std::size_t column_index(const std::string& name) const;

  const NumericColumn& numeric(const std::string& name) const;
  const CategoricalColumn& categorical(const std::string& name) const;

  void add_numeric(const std::string& name, NumericColumn values);
  void add_categorical(const std::string& name, CategoricalColumn values);
  void replace_numeric(const std::string& name, NumericColumn values);
  void drop_column(const std::string& name);

  /// New table holding the given rows (in the given order). Indices may repeat.
  Table take_rows(const std::vector<int>& idx) const;

 private:
  void add_column(const std::string& name, Column col);

  std::vector<std::string> names_;
  std::vector<Column> cols_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t n_rows_ = 0;
};

/// Declared column roles for CSV ingestion: "numeric" or "categorical".
using CsvSchema = std::map<std::string, std::string>;

/// RFC-4180 CSV reader. The first row is the header. Columns not covered by
/// the schema are numeric when every field parses as a finite float,
/// categorical otherwise. A non-parsable or empty field in a column declared
/// numeric is an error, as are ragged rows and duplicate header names.
Table read_csv(const std::string& path, const CsvSchema* schema = nullptr);

/// Writes RFC-4180 CSV; numeric values use shortest round-trip formatting.
void write_csv(const Table& table, const std::string& path);
void write_csv(const Table& table, std::ostream& out);

/// Feature-type assignments. Unassigned feature columns default to
/// "continuous". Reserved names: continuous, confound, categorical.
class FeatureTypeMap {
 public:
  FeatureTypeMap() = default;

  /// Validates that each column is assigned at most once and that every
  /// assigned column exists in the table.
  static FeatureTypeMap from_assignments(
      const std::map<std::string, std::vector<std::string>>& assignments,
      const Table& table);

  std::string type_of(const std::string& column) const;
  bool is_known_type(const std::string& type) const;
  void retag(const std::string& column, const std::string& type);

  const std::map<std::string, std::string>& assignments() const { return col_to_type_; }

 private:
  std::map<std::string, std::string> col_to_type_;
  std::set<std::string> known_types_{"continuous", "confound", "categorical"};
};

struct ColumnSelector {
  enum class Mode { by_type, by_name, all_features, wildcard };
  Mode mode = Mode::all_features;
  std::string type_name;
  std::vector<std::string> names;

  static ColumnSelector by_type(std::string type);
  static ColumnSelector by_name(std::vector<std::string> cols);
  static ColumnSelector all_features();
  static ColumnSelector wildcard();

  Json to_json() const;
  static ColumnSelector from_json(const Json& j);
};

/// Resolve a selector against the current feature columns (a subset of the
/// table's columns, in table order). Returns a non-empty, duplicate-free list
/// in order of appearance in the table, or throws.
std::vector<std::string> resolve_selector(const ColumnSelector& sel, const Table& table,
                                          const FeatureTypeMap& types,
                                          const std::vector<std::string>& feature_cols);

}  // namespace cvforge
