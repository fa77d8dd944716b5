#include "cvforge/transform.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

namespace cvforge {

using numerics::Matrix;

std::vector<std::string> DataState::active_features() const {
  std::vector<std::string> out;
  for (const auto& f : features)
    if (types.type_of(f) != "removed_confound") out.push_back(f);
  return out;
}

TargetView TargetView::from_table(const Table& table, const std::string& target,
                                  ProblemType pt) {
  TargetView tv;
  tv.name = target;
  tv.is_classification = (pt == ProblemType::classification);
  if (!tv.is_classification) {
    tv.numeric = table.numeric(target);
    return tv;
  }
  // Classification targets may arrive as numeric columns (e.g. 0/1); values
  // are treated as labels.
  if (table.is_numeric(target)) {
    char buf[32];
    for (double v : table.numeric(target)) {
      auto res = std::to_chars(buf, buf + sizeof(buf), v);
      tv.labels.emplace_back(buf, res.ptr);
    }
  } else {
    tv.labels = table.categorical(target);
  }
  std::vector<std::string> uniq(tv.labels.begin(), tv.labels.end());
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  tv.numeric.resize(tv.labels.size());
  for (std::size_t i = 0; i < tv.labels.size(); ++i) {
    auto it = std::lower_bound(uniq.begin(), uniq.end(), tv.labels[i]);
    tv.numeric[i] = static_cast<double>(it - uniq.begin());
  }
  return tv;
}

TargetView TargetView::take_rows(const std::vector<int>& idx) const {
  TargetView out;
  out.name = name;
  out.is_classification = is_classification;
  out.numeric.reserve(idx.size());
  for (int i : idx) out.numeric.push_back(numeric[static_cast<std::size_t>(i)]);
  if (is_classification) {
    out.labels.reserve(idx.size());
    for (int i : idx) out.labels.push_back(labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

namespace {

void require_numeric(const Table& t, const std::vector<std::string>& cols,
                     const std::string& kind) {
  for (const auto& c : cols)
    if (!t.is_numeric(c))
      throw Error(kind + ": transformer requires numeric columns, but \"" + c +
                  "\" is categorical");
}

void check_keys(const Json& params, const std::set<std::string>& allowed,
                const std::string& kind) {
  for (auto it = params.begin(); it != params.end(); ++it)
    if (!allowed.count(it.key()))
      throw Error(kind + ": unknown parameter \"" + it.key() + "\"");
}

double col_mean(const NumericColumn& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double col_sample_variance(const NumericColumn& v) {
  if (v.size() < 2) return 0.0;
  double m = col_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// ---------------------------------------------------------------------------

class ZScore final : public FittedTransformer {
 public:
  ZScore(std::vector<std::string> cols, std::vector<double> means, std::vector<double> stds)
      : cols_(std::move(cols)), means_(std::move(means)), stds_(std::move(stds)) {}

  const std::string& kind() const override {
    static const std::string k = "zscore";
    return k;
  }

  DataState apply(const DataState& in) const override {
    DataState out = in;
    for (std::size_t c = 0; c < cols_.size(); ++c) {
      NumericColumn v = out.table.numeric(cols_[c]);
      for (double& x : v)
        x = stds_[c] < 1e-12 ? 0.0 : (x - means_[c]) / stds_[c];
      out.table.replace_numeric(cols_[c], std::move(v));
    }
    return out;
  }

  Json summary() const override {
    return Json{{"columns", cols_}, {"means", means_}, {"stds", stds_}};
  }

 private:
  std::vector<std::string> cols_;
  std::vector<double> means_;
  std::vector<double> stds_;
};

// ---------------------------------------------------------------------------

class VarianceThreshold final : public FittedTransformer {
 public:
  VarianceThreshold(std::vector<std::string> dropped, double threshold)
      : dropped_(std::move(dropped)), threshold_(threshold) {}

  const std::string& kind() const override {
    static const std::string k = "variance_threshold";
    return k;
  }

  DataState apply(const DataState& in) const override {
    DataState out = in;
    for (const auto& c : dropped_) {
      out.table.drop_column(c);
      out.features.erase(std::remove(out.features.begin(), out.features.end(), c),
                         out.features.end());
    }
    return out;
  }

  Json summary() const override {
    return Json{{"threshold", threshold_}, {"dropped", dropped_}};
  }

 private:
  std::vector<std::string> dropped_;
  double threshold_;
};

// ---------------------------------------------------------------------------

class Pca final : public FittedTransformer {
 public:
  Pca(std::vector<std::string> cols, std::vector<double> means, Matrix components)
      : cols_(std::move(cols)), means_(std::move(means)), components_(std::move(components)) {}

  const std::string& kind() const override {
    static const std::string k = "pca";
    return k;
  }

  DataState apply(const DataState& in) const override {
    DataState out = in;
    const std::size_t n = in.table.n_rows();
    const std::size_t p = cols_.size();
    const std::size_t k = components_.cols();

    std::vector<const NumericColumn*> src(p);
    for (std::size_t j = 0; j < p; ++j) src[j] = &in.table.numeric(cols_[j]);

    std::vector<NumericColumn> proj(k, NumericColumn(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j)
          s += ((*src[j])[i] - means_[j]) * components_(j, c);
        proj[c][i] = s;
      }
    }

    for (const auto& c : cols_) {
      out.table.drop_column(c);
      out.features.erase(std::remove(out.features.begin(), out.features.end(), c),
                         out.features.end());
    }
    for (std::size_t c = 0; c < k; ++c) {
      std::string name = "pca_" + std::to_string(c);
      out.table.add_numeric(name, std::move(proj[c]));
      out.features.push_back(name);
    }
    return out;
  }

  Json summary() const override {
    return Json{{"columns", cols_},
                {"n_components", components_.cols()},
                {"means", means_}};
  }

  std::size_t n_components() const { return components_.cols(); }

 private:
  std::vector<std::string> cols_;
  std::vector<double> means_;
  Matrix components_;  // p x k, column c is component c
};

// ---------------------------------------------------------------------------

class ConfoundRemover final : public FittedTransformer {
 public:
  ConfoundRemover(std::vector<std::string> feature_cols, std::vector<std::string> confound_cols,
                  std::vector<std::vector<double>> coefs, bool intercept)
      : feature_cols_(std::move(feature_cols)),
        confound_cols_(std::move(confound_cols)),
        coefs_(std::move(coefs)),
        intercept_(intercept) {}

  const std::string& kind() const override {
    static const std::string k = "confound_remover";
    return k;
  }

  DataState apply(const DataState& in) const override {
    DataState out = in;
    const std::size_t n = in.table.n_rows();
    const std::size_t q = confound_cols_.size();
    std::vector<const NumericColumn*> conf(q);
    for (std::size_t j = 0; j < q; ++j) conf[j] = &in.table.numeric(confound_cols_[j]);

    for (std::size_t f = 0; f < feature_cols_.size(); ++f) {
      NumericColumn v = in.table.numeric(feature_cols_[f]);
      const auto& beta = coefs_[f];
      for (std::size_t i = 0; i < n; ++i) {
        double fit = intercept_ ? beta[q] : 0.0;
        for (std::size_t j = 0; j < q; ++j) fit += beta[j] * (*conf[j])[i];
        v[i] -= fit;
      }
      out.table.replace_numeric(feature_cols_[f], std::move(v));
    }
    // Confounds stay in the table for inspection but leave the feature flow.
    for (const auto& c : confound_cols_) out.types.retag(c, "removed_confound");
    return out;
  }

  Json summary() const override {
    Json co = Json::array();
    for (const auto& b : coefs_) co.push_back(b);
    return Json{{"features", feature_cols_},
                {"confounds", confound_cols_},
                {"intercept", intercept_},
                {"coefficients", co}};
  }

 private:
  std::vector<std::string> feature_cols_;
  std::vector<std::string> confound_cols_;
  std::vector<std::vector<double>> coefs_;  // per feature: q (+1 intercept last)
  bool intercept_;
};

// ---------------------------------------------------------------------------

class Cbpm final : public FittedTransformer {
 public:
  Cbpm(std::vector<std::string> selected_input, std::vector<std::string> pos,
       std::vector<std::string> neg, std::string sign_mode, std::string aggregation,
       double alpha)
      : input_cols_(std::move(selected_input)),
        pos_(std::move(pos)),
        neg_(std::move(neg)),
        sign_mode_(std::move(sign_mode)),
        aggregation_(std::move(aggregation)),
        alpha_(alpha) {}

  const std::string& kind() const override {
    static const std::string k = "cbpm";
    return k;
  }

  DataState apply(const DataState& in) const override {
    DataState out = in;
    const std::size_t n = in.table.n_rows();

    auto aggregate = [&](const std::vector<std::string>& members) {
      NumericColumn agg(n, 0.0);
      if (members.empty()) return agg;
      for (const auto& m : members) {
        const auto& col = in.table.numeric(m);
        for (std::size_t i = 0; i < n; ++i) agg[i] += col[i];
      }
      if (aggregation_ == "mean")
        for (double& x : agg) x /= static_cast<double>(members.size());
      return agg;
    };

    std::vector<std::pair<std::string, NumericColumn>> outputs;
    bool want_pos = sign_mode_ == "positive" || sign_mode_ == "both";
    bool want_neg = sign_mode_ == "negative" || sign_mode_ == "both";
    std::size_t total = (want_pos ? pos_.size() : 0) + (want_neg ? neg_.size() : 0);
    if (total == 0) {
      outputs.emplace_back("cbpm_zero", NumericColumn(n, 0.0));
    } else {
      if (want_pos) outputs.emplace_back("cbpm_pos", aggregate(pos_));
      if (want_neg) outputs.emplace_back("cbpm_neg", aggregate(neg_));
    }

    for (const auto& c : input_cols_) {
      out.table.drop_column(c);
      out.features.erase(std::remove(out.features.begin(), out.features.end(), c),
                         out.features.end());
    }
    for (auto& [name, col] : outputs) {
      out.table.add_numeric(name, std::move(col));
      out.features.push_back(name);
    }
    return out;
  }

  Json summary() const override {
    return Json{{"alpha", alpha_},
                {"sign_mode", sign_mode_},
                {"aggregation", aggregation_},
                {"positive", pos_},
                {"negative", neg_}};
  }

  const std::vector<std::string>& positive_set() const { return pos_; }
  const std::vector<std::string>& negative_set() const { return neg_; }

 private:
  std::vector<std::string> input_cols_;
  std::vector<std::string> pos_;
  std::vector<std::string> neg_;
  std::string sign_mode_;
  std::string aggregation_;
  double alpha_;
};

}  // namespace

bool is_transformer_kind(const std::string& kind) {
  return kind == "zscore" || kind == "variance_threshold" || kind == "pca" ||
         kind == "confound_remover" || kind == "cbpm";
}

void validate_transformer_params(const std::string& kind, const Json& params) {
  if (!params.is_object()) throw Error(kind + ": params must be a JSON object");
  if (kind == "zscore") {
    check_keys(params, {}, kind);
  } else if (kind == "variance_threshold") {
    check_keys(params, {"threshold"}, kind);
    if (params.contains("threshold")) {
      if (!params["threshold"].is_number() || params["threshold"].get<double>() < 0)
        throw Error("variance_threshold: threshold must be >= 0");
    }
  } else if (kind == "pca") {
    check_keys(params, {"retain"}, kind);
    if (params.contains("retain")) {
      const Json& r = params["retain"];
      if (r.is_number_integer()) {
        if (r.get<long long>() < 1) throw Error("pca: retain count must be >= 1");
      } else if (r.is_number()) {
        double v = r.get<double>();
        if (!(v > 0.0 && v <= 1.0))
          throw Error("pca: retain must be a variance fraction in (0,1] or a positive integer");
      } else {
        throw Error("pca: retain must be a number");
      }
    }
  } else if (kind == "confound_remover") {
    check_keys(params, {"confounds", "subgroup_column", "subgroup_value", "intercept"}, kind);
    if (params.contains("intercept") && !params["intercept"].is_boolean())
      throw Error("confound_remover: intercept must be a boolean");
    if (params.contains("subgroup_column") != params.contains("subgroup_value"))
      throw Error("confound_remover: subgroup_column and subgroup_value must be set together");
  } else if (kind == "cbpm") {
    check_keys(params, {"alpha", "sign_mode", "aggregation"}, kind);
    if (params.contains("alpha")) {
      if (!params["alpha"].is_number()) throw Error("cbpm: alpha must be a number");
      double a = params["alpha"].get<double>();
      if (!(a > 0.0 && a < 1.0)) throw Error("cbpm: alpha must be in (0,1)");
    }
    if (params.contains("sign_mode")) {
      std::string m = params["sign_mode"].get<std::string>();
      if (m != "positive" && m != "negative" && m != "both")
        throw Error("cbpm: sign_mode must be positive, negative or both");
    }
    if (params.contains("aggregation")) {
      std::string a = params["aggregation"].get<std::string>();
      if (a != "sum" && a != "mean")
        throw Error("cbpm: aggregation must be sum or mean");
    }
  } else {
    throw Error("unknown transformer kind: " + kind);
  }
}

std::unique_ptr<FittedTransformer> fit_transformer(const TransformerSpec& spec,
                                                   const DataState& train,
                                                   const TargetView& target,
                                                   std::vector<std::string>& warnings) {
  validate_transformer_params(spec.kind, spec.params);
  const Table& t = train.table;
  std::vector<std::string> active = train.active_features();
  std::vector<std::string> sel = resolve_selector(spec.apply_to, t, train.types, active);

  if (spec.kind == "zscore") {
    require_numeric(t, sel, spec.kind);
    std::vector<double> means, stds;
    for (const auto& c : sel) {
      const auto& v = t.numeric(c);
      means.push_back(col_mean(v));
      stds.push_back(std::sqrt(col_sample_variance(v)));
    }
    return std::make_unique<ZScore>(sel, std::move(means), std::move(stds));
  }

  if (spec.kind == "variance_threshold") {
    require_numeric(t, sel, spec.kind);
    double threshold = spec.params.value("threshold", 0.0);
    std::vector<std::string> dropped;
    for (const auto& c : sel)
      if (col_sample_variance(t.numeric(c)) <= threshold) dropped.push_back(c);
    std::set<std::string> gone(dropped.begin(), dropped.end());
    bool any_left = false;
    for (const auto& f : active)
      if (!gone.count(f)) any_left = true;
    if (!any_left) throw Error("variance_threshold: no features remain");
    return std::make_unique<VarianceThreshold>(std::move(dropped), threshold);
  }

  if (spec.kind == "pca") {
    require_numeric(t, sel, spec.kind);
    const std::size_t n = t.n_rows();
    const std::size_t p = sel.size();
    if (n < 2) throw Error("pca: need at least 2 training rows");

    std::vector<double> means(p);
    std::vector<const NumericColumn*> cols(p);
    for (std::size_t j = 0; j < p; ++j) {
      cols[j] = &t.numeric(sel[j]);
      means[j] = col_mean(*cols[j]);
    }
    Matrix cov(p, p);
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a; b < p; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          s += ((*cols[a])[i] - means[a]) * ((*cols[b])[i] - means[b]);
        s /= static_cast<double>(n - 1);
        cov(a, b) = s;
        cov(b, a) = s;
      }
    auto eig = numerics::sym_eigen(cov);
    double trace = 0.0;
    for (double v : eig.values) trace += std::max(v, 0.0);

    std::size_t k = 0;
    const Json& retain = spec.params.contains("retain") ? spec.params["retain"] : Json(1.0);
    if (retain.is_number_integer()) {
      long long want = retain.get<long long>();
      if (static_cast<std::size_t>(want) > p)
        throw Error("pca: retain count exceeds number of selected columns");
      k = static_cast<std::size_t>(want);
    } else {
      double frac = retain.get<double>();
      if (frac >= 1.0 || trace <= 0.0) {
        for (double v : eig.values)
          if (v > 1e-12 * std::max(trace, 1e-300)) ++k;
        if (k == 0) k = 1;
      } else {
        double acc = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
          acc += std::max(eig.values[j], 0.0);
          ++k;
          if (acc / trace >= frac) break;
        }
      }
    }
    Matrix comp(p, k);
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t c = 0; c < k; ++c) comp(j, c) = eig.vectors(j, c);
    return std::make_unique<Pca>(sel, std::move(means), std::move(comp));
  }

  if (spec.kind == "confound_remover") {
    ColumnSelector conf_sel = spec.params.contains("confounds")
                                  ? ColumnSelector::from_json(spec.params["confounds"])
                                  : ColumnSelector::by_type("confound");
    std::vector<std::string> confounds = resolve_selector(conf_sel, t, train.types, active);
    require_numeric(t, confounds, spec.kind);

    // Confound columns never deconfound themselves: drop them from the
    // feature selection unless explicitly requested by name.
    std::set<std::string> conf_set(confounds.begin(), confounds.end());
    std::vector<std::string> feats;
    for (const auto& c : sel) {
      if (conf_set.count(c)) {
        if (spec.apply_to.mode == ColumnSelector::Mode::by_name)
          throw Error("confound_remover: feature selection overlaps confounds: " + c);
        continue;
      }
      feats.push_back(c);
    }
    if (feats.empty()) throw Error("confound_remover: no feature columns to residualize");
    require_numeric(t, feats, spec.kind);
    bool intercept = spec.params.value("intercept", true);

    std::vector<int> fit_rows;
    if (spec.params.contains("subgroup_column")) {
      std::string col = spec.params["subgroup_column"].get<std::string>();
      std::string val = spec.params["subgroup_value"].get<std::string>();
      if (!t.has_column(col)) throw Error("confound_remover: unknown subgroup column: " + col);
      if (t.is_numeric(col))
        throw Error("confound_remover: subgroup column must be categorical: " + col);
      if (std::find(active.begin(), active.end(), col) != active.end())
        throw Error("confound_remover: subgroup column must not be a feature: " + col);
      const auto& g = t.categorical(col);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] == val) fit_rows.push_back(static_cast<int>(i));
      if (fit_rows.empty())
        throw Error("confound_remover: subgroup value \"" + val +
                    "\" absent from training fold");
      if (fit_rows.size() < confounds.size() + 2)
        throw Error("confound_remover: subgroup too small to fit confound regression");
    } else {
      fit_rows.resize(t.n_rows());
      for (std::size_t i = 0; i < fit_rows.size(); ++i) fit_rows[i] = static_cast<int>(i);
    }

    Matrix design(fit_rows.size(), confounds.size());
    for (std::size_t j = 0; j < confounds.size(); ++j) {
      const auto& c = t.numeric(confounds[j]);
      for (std::size_t i = 0; i < fit_rows.size(); ++i)
        design(i, j) = c[static_cast<std::size_t>(fit_rows[i])];
    }
    std::vector<std::vector<double>> coefs;
    coefs.reserve(feats.size());
    for (const auto& f : feats) {
      const auto& col = t.numeric(f);
      std::vector<double> y(fit_rows.size());
      for (std::size_t i = 0; i < fit_rows.size(); ++i)
        y[i] = col[static_cast<std::size_t>(fit_rows[i])];
      coefs.push_back(numerics::least_squares(design, y, intercept));
    }
    return std::make_unique<ConfoundRemover>(std::move(feats), std::move(confounds),
                                             std::move(coefs), intercept);
  }

  if (spec.kind == "cbpm") {
    require_numeric(t, sel, spec.kind);
    if (t.n_rows() < 3) throw Error("cbpm: need at least 3 training rows");
    if (target.numeric.size() != t.n_rows()) throw Error("cbpm: target length mismatch");
    double ty = 0.0;
    for (double v : target.numeric) ty += (v - target.numeric[0]) * (v - target.numeric[0]);
    if (ty == 0.0) throw Error("cbpm: training target is constant");

    double alpha = spec.params.value("alpha", 0.01);
    std::string sign_mode = spec.params.value("sign_mode", "both");
    std::string aggregation = spec.params.value("aggregation", "sum");

    std::vector<std::string> pos, neg;
    for (const auto& c : sel) {
      const auto& v = t.numeric(c);
      double r;
      try {
        r = numerics::pearson_r(v, target.numeric);
      } catch (const Error&) {
        continue;  // constant feature: never selected
      }
      double p = numerics::pearson_p(r, v.size());
      if (p < alpha) {
        if (r > 0.0) pos.push_back(c);
        else if (r < 0.0) neg.push_back(c);
        // r == 0 exactly joins neither sign group
      }
    }

    bool want_pos = sign_mode == "positive" || sign_mode == "both";
    bool want_neg = sign_mode == "negative" || sign_mode == "both";
    std::size_t total = (want_pos ? pos.size() : 0) + (want_neg ? neg.size() : 0);
    if (total == 0) {
      warnings.push_back("cbpm: no features passed the significance threshold; "
                         "emitting a constant zero column");
    } else {
      if (want_pos && pos.empty())
        warnings.push_back("cbpm: positive sign group is empty; its column is all zeros");
      if (want_neg && neg.empty())
        warnings.push_back("cbpm: negative sign group is empty; its column is all zeros");
    }
    return std::make_unique<Cbpm>(sel, std::move(pos), std::move(neg),
                                  std::move(sign_mode), std::move(aggregation), alpha);
  }

  throw Error("unknown transformer kind: " + spec.kind);
}

}  // namespace cvforge
