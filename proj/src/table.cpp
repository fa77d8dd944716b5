#include "cvforge/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cvforge {

bool Table::has_column(const std::string& name) const {
  return index_.find(name) != index_.end();
}

std::size_t Table::column_index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown column: " + name);
  return it->second;
}

bool Table::is_numeric(const std::string& name) const {
  return std::holds_alternative<NumericColumn>(cols_[column_index(name)]);
}

const NumericColumn& Table::numeric(const std::string& name) const {
  const Column& c = cols_[column_index(name)];
  if (!std::holds_alternative<NumericColumn>(c))
    throw Error("column is not numeric: " + name);
  return std::get<NumericColumn>(c);
}

const CategoricalColumn& Table::categorical(const std::string& name) const {
  const Column& c = cols_[column_index(name)];
  if (!std::holds_alternative<CategoricalColumn>(c))
    throw Error("column is not categorical: " + name);
  return std::get<CategoricalColumn>(c);
}

void Table::add_column(const std::string& name, Column col) {
  if (name.empty()) throw Error("column name must be non-empty");
  if (has_column(name)) throw Error("duplicate column name: " + name);
  std::size_t len = std::visit([](const auto& v) { return v.size(); }, col);
  if (!names_.empty() && len != n_rows_)
    throw Error("column length mismatch for: " + name);
  n_rows_ = len;
  index_[name] = names_.size();
  names_.push_back(name);
  cols_.push_back(std::move(col));
}

void Table::add_numeric(const std::string& name, NumericColumn values) {
  for (double v : values)
    if (std::isnan(v)) throw Error("NaN in numeric column: " + name);
  add_column(name, Column(std::move(values)));
}

void Table::add_categorical(const std::string& name, CategoricalColumn values) {
  add_column(name, Column(std::move(values)));
}

void Table::replace_numeric(const std::string& name, NumericColumn values) {
  std::size_t i = column_index(name);
  if (values.size() != n_rows_) throw Error("column length mismatch for: " + name);
  cols_[i] = Column(std::move(values));
}

void Table::drop_column(const std::string& name) {
  std::size_t i = column_index(name);
  names_.erase(names_.begin() + static_cast<std::ptrdiff_t>(i));
  cols_.erase(cols_.begin() + static_cast<std::ptrdiff_t>(i));
  index_.clear();
  for (std::size_t j = 0; j < names_.size(); ++j) index_[names_[j]] = j;
}

Table Table::take_rows(const std::vector<int>& idx) const {
  for (int i : idx)
    if (i < 0 || static_cast<std::size_t>(i) >= n_rows_)
      throw Error("row index out of range");
  Table out;
  for (std::size_t c = 0; c < names_.size(); ++c) {
    if (std::holds_alternative<NumericColumn>(cols_[c])) {
      const auto& src = std::get<NumericColumn>(cols_[c]);
      NumericColumn v;
      v.reserve(idx.size());
      for (int i : idx) v.push_back(src[static_cast<std::size_t>(i)]);
      out.add_column(names_[c], Column(std::move(v)));
    } else {
      const auto& src = std::get<CategoricalColumn>(cols_[c]);
      CategoricalColumn v;
      v.reserve(idx.size());
      for (int i : idx) v.push_back(src[static_cast<std::size_t>(i)]);
      out.add_column(names_[c], Column(std::move(v)));
    }
  }
  if (out.names_.empty()) out.n_rows_ = idx.size();
  return out;
}

namespace {

// RFC-4180 record reader: handles quoted fields, embedded commas/newlines,
// doubled quotes, and CRLF line endings. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
  fields.clear();
  int c = in.peek();
  if (c == EOF) return false;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  while (true) {
    c = in.get();
    if (c == EOF) {
      if (!any && field.empty() && fields.empty()) return false;
      fields.push_back(field);
      return true;
    }
    any = true;
    char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line_no;
        field.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get();
      ++line_no;
      fields.push_back(field);
      return true;
    } else if (ch == '\n') {
      ++line_no;
      fields.push_back(field);
      return true;
    } else {
      field.push_back(ch);
    }
  }
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

Table read_csv(const std::string& path, const CsvSchema* schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);

  std::size_t line_no = 1;
  std::vector<std::string> header;
  if (!read_record(in, header, line_no)) throw Error("no header in: " + path);
  if (header.size() == 1 && header[0].empty()) throw Error("no header in: " + path);
  {
    std::set<std::string> seen;
    for (const auto& h : header) {
      if (h.empty()) throw Error("empty header name in: " + path);
      if (!seen.insert(h).second) throw Error("duplicate header name: " + h);
    }
  }

  std::vector<std::vector<std::string>> raw(header.size());
  std::vector<std::string> fields;
  std::size_t row_line = line_no;  // line the upcoming record starts on
  while (read_record(in, fields, line_no)) {
    std::size_t this_line = row_line;
    row_line = line_no;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank trailing line
    if (fields.size() != header.size()) {
      std::ostringstream os;
      os << "ragged row at line " << this_line << " in " << path << " (expected "
         << header.size() << " fields, got " << fields.size() << ")";
      throw Error(os.str());
    }
    for (std::size_t c = 0; c < header.size(); ++c) raw[c].push_back(fields[c]);
  }

  Table t;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::string declared;
    if (schema) {
      auto it = schema->find(header[c]);
      if (it != schema->end()) declared = it->second;
    }
    NumericColumn nums(raw[c].size());
    bool all_numeric = true;
    for (std::size_t i = 0; i < raw[c].size(); ++i) {
      if (!parse_double(raw[c][i], nums[i])) {
        all_numeric = false;
        break;
      }
    }
    if (declared == "numeric") {
      if (!all_numeric)
        throw Error("non-numeric or empty cell in column declared numeric: " + header[c]);
      t.add_numeric(header[c], std::move(nums));
    } else if (declared == "categorical") {
      t.add_categorical(header[c], std::move(raw[c]));
    } else if (all_numeric) {
      t.add_numeric(header[c], std::move(nums));
    } else {
      t.add_categorical(header[c], std::move(raw[c]));
    }
  }
  return t;
}

void write_csv(const Table& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  write_csv(table, out);
}

void write_csv(const Table& table, std::ostream& out) {
  const auto& names = table.column_names();
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (c) out << ',';
    out << csv_escape(names[c]);
  }
  out << '\n';
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (c) out << ',';
      if (table.is_numeric(names[c]))
        out << format_double(table.numeric(names[c])[r]);
      else
        out << csv_escape(table.categorical(names[c])[r]);
    }
    out << '\n';
  }
}

FeatureTypeMap FeatureTypeMap::from_assignments(
    const std::map<std::string, std::vector<std::string>>& assignments,
    const Table& table) {
  FeatureTypeMap m;
  for (const auto& [type, cols] : assignments) {
    if (type.empty()) throw Error("feature type name must be non-empty");
    m.known_types_.insert(type);
    for (const auto& col : cols) {
      if (!table.has_column(col))
        throw Error("feature type assignment references unknown column: " + col);
      auto [it, inserted] = m.col_to_type_.emplace(col, type);
      if (!inserted && it->second != type)
        throw Error("column assigned to two feature types: " + col);
    }
  }
  return m;
}

std::string FeatureTypeMap::type_of(const std::string& column) const {
  auto it = col_to_type_.find(column);
  return it == col_to_type_.end() ? "continuous" : it->second;
}

bool FeatureTypeMap::is_known_type(const std::string& type) const {
  return known_types_.count(type) > 0 || type == "removed_confound";
}

void FeatureTypeMap::retag(const std::string& column, const std::string& type) {
  col_to_type_[column] = type;
  known_types_.insert(type);
}

ColumnSelector ColumnSelector::by_type(std::string type) {
  ColumnSelector s;
  s.mode = Mode::by_type;
  s.type_name = std::move(type);
  return s;
}

ColumnSelector ColumnSelector::by_name(std::vector<std::string> cols) {
  ColumnSelector s;
  s.mode = Mode::by_name;
  s.names = std::move(cols);
  return s;
}

ColumnSelector ColumnSelector::all_features() {
  ColumnSelector s;
  s.mode = Mode::all_features;
  return s;
}

ColumnSelector ColumnSelector::wildcard() {
  ColumnSelector s;
  s.mode = Mode::wildcard;
  return s;
}

Json ColumnSelector::to_json() const {
  switch (mode) {
    case Mode::by_type:
      return Json(type_name);
    case Mode::by_name:
      return Json(names);
    case Mode::wildcard:
    case Mode::all_features:
      return Json("*");
  }
  return Json("*");
}

ColumnSelector ColumnSelector::from_json(const Json& j) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "*") return wildcard();
    return by_type(s);
  }
  if (j.is_array()) {
    std::vector<std::string> cols;
    for (const auto& e : j) {
      if (!e.is_string()) throw Error("apply_to list entries must be strings");
      cols.push_back(e.get<std::string>());
    }
    return by_name(cols);
  }
  throw Error("apply_to must be a type name, \"*\", or a list of column names");
}

std::vector<std::string> resolve_selector(const ColumnSelector& sel, const Table& table,
                                          const FeatureTypeMap& types,
                                          const std::vector<std::string>& feature_cols) {
  std::vector<std::string> out;
  switch (sel.mode) {
    case ColumnSelector::Mode::by_type: {
      if (!types.is_known_type(sel.type_name))
        throw Error("unknown feature type: " + sel.type_name);
      for (const auto& col : feature_cols)
        if (types.type_of(col) == sel.type_name) out.push_back(col);
      break;
    }
    case ColumnSelector::Mode::by_name: {
      std::set<std::string> feature_set(feature_cols.begin(), feature_cols.end());
      std::set<std::string> wanted;
      for (const auto& name : sel.names) {
        if (!table.has_column(name)) throw Error("selector references unknown column: " + name);
        if (!feature_set.count(name))
          throw Error("selector references non-feature column: " + name);
        wanted.insert(name);
      }
      for (const auto& col : feature_cols)
        if (wanted.count(col)) out.push_back(col);
      break;
    }
    case ColumnSelector::Mode::all_features:
    case ColumnSelector::Mode::wildcard:
      out = feature_cols;
      break;
  }
  if (out.empty()) throw Error("selector resolved to an empty column set");
  return out;
}

}  // namespace cvforge
