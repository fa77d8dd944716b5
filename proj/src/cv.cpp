#include "cvforge/cv.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "cvforge/score.hpp"

namespace cvforge {

using numerics::RngStream;
using numerics::split_rng;

CVScheme CVScheme::kfold(int k, bool shuffle) {
  CVScheme s;
  s.kind = Kind::kfold;
  s.k = k;
  s.shuffle = shuffle;
  return s;
}

CVScheme CVScheme::repeated_kfold(int k, int repeats) {
  CVScheme s;
  s.kind = Kind::repeated_kfold;
  s.k = k;
  s.repeats = repeats;
  s.shuffle = true;
  return s;
}

CVScheme CVScheme::stratified_kfold(int k, bool shuffle) {
  CVScheme s;
  s.kind = Kind::stratified_kfold;
  s.k = k;
  s.shuffle = shuffle;
  return s;
}

CVScheme CVScheme::group_kfold(int k, std::string group_column) {
  CVScheme s;
  s.kind = Kind::group_kfold;
  s.k = k;
  s.group_column = std::move(group_column);
  return s;
}

CVScheme CVScheme::leave_one_out() {
  CVScheme s;
  s.kind = Kind::leave_one_out;
  return s;
}

namespace {

std::string kind_name(CVScheme::Kind k) {
  switch (k) {
    case CVScheme::Kind::kfold: return "kfold";
    case CVScheme::Kind::repeated_kfold: return "repeated_kfold";
    case CVScheme::Kind::stratified_kfold: return "stratified_kfold";
    case CVScheme::Kind::group_kfold: return "group_kfold";
    case CVScheme::Kind::leave_one_out: return "leave_one_out";
  }
  return "?";
}

}  // namespace

Json CVScheme::to_json() const {
  Json j{{"kind", kind_name(kind)}};
  if (kind != Kind::leave_one_out) j["k"] = k;
  if (kind == Kind::repeated_kfold) j["repeats"] = repeats;
  if (kind == Kind::kfold || kind == Kind::stratified_kfold) j["shuffle"] = shuffle;
  if (kind == Kind::group_kfold) j["group_column"] = group_column;
  return j;
}

CVScheme CVScheme::from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind")) throw Error("cv: missing \"kind\"");
  std::string kind = j["kind"].get<std::string>();
  static const std::set<std::string> allowed = {"kind", "k", "repeats", "shuffle",
                                                "group_column"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw Error("cv: unknown key \"" + it.key() + "\"");

  auto get_k = [&]() {
    if (!j.contains("k")) throw Error("cv: missing \"k\"");
    int k = j["k"].get<int>();
    if (k < 2) throw Error("cv: \"k\" must be at least 2");
    return k;
  };
  if (kind == "kfold") return CVScheme::kfold(get_k(), j.value("shuffle", false));
  if (kind == "repeated_kfold") {
    if (!j.contains("repeats")) throw Error("cv: repeated_kfold requires \"repeats\"");
    return CVScheme::repeated_kfold(get_k(), j["repeats"].get<int>());
  }
  if (kind == "stratified_kfold")
    return CVScheme::stratified_kfold(get_k(), j.value("shuffle", false));
  if (kind == "group_kfold") {
    if (!j.contains("group_column")) throw Error("cv: group_kfold requires \"group_column\"");
    return CVScheme::group_kfold(get_k(), j["group_column"].get<std::string>());
  }
  if (kind == "leave_one_out") return CVScheme::leave_one_out();
  throw Error("cv: unknown scheme kind \"" + kind + "\"");
}

namespace {

// Contiguous chunks of `order`: the first n % k folds take one extra sample.
std::vector<Fold> chunked_folds(const std::vector<int>& order, int k, int repeat) {
  const int n = static_cast<int>(order.size());
  std::vector<Fold> folds;
  int base = n / k, extra = n % k, pos = 0;
  for (int f = 0; f < k; ++f) {
    int size = base + (f < extra ? 1 : 0);
    Fold fold;
    fold.repeat = repeat;
    fold.fold = f;
    fold.test_idx.assign(order.begin() + pos, order.begin() + pos + size);
    pos += size;
    folds.push_back(std::move(fold));
  }
  return folds;
}

void fill_train_from_test(std::vector<Fold>& folds, int n) {
  for (auto& fold : folds) {
    std::vector<char> is_test(static_cast<std::size_t>(n), 0);
    for (int i : fold.test_idx) is_test[static_cast<std::size_t>(i)] = 1;
    fold.train_idx.clear();
    for (int i = 0; i < n; ++i)
      if (!is_test[static_cast<std::size_t>(i)]) fold.train_idx.push_back(i);
    std::sort(fold.test_idx.begin(), fold.test_idx.end());
  }
}

std::vector<Fold> kfold_once(int n, int k, bool shuffle, int repeat, RngStream rng) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) rng.shuffle(order);
  return chunked_folds(order, k, repeat);
}

}  // namespace

FoldPlan make_splits(const CVScheme& scheme, int n, const std::vector<std::string>* y_labels,
                     const std::vector<std::string>* groups, RngStream rng) {
  if (n < 1) throw Error("make_splits: n must be >= 1");
  FoldPlan plan;

  switch (scheme.kind) {
    case CVScheme::Kind::leave_one_out: {
      for (int i = 0; i < n; ++i) {
        Fold f;
        f.repeat = 0;
        f.fold = i;
        f.test_idx = {i};
        plan.push_back(std::move(f));
      }
      break;
    }
    case CVScheme::Kind::kfold:
    case CVScheme::Kind::repeated_kfold: {
      if (scheme.k < 2 || scheme.k > n) throw Error("make_splits: need 2 <= k <= n");
      if (scheme.repeats < 1) throw Error("make_splits: repeats must be >= 1");
      int repeats = scheme.kind == CVScheme::Kind::repeated_kfold ? scheme.repeats : 1;
      for (int r = 0; r < repeats; ++r) {
        bool shuffle = scheme.shuffle || scheme.kind == CVScheme::Kind::repeated_kfold;
        auto folds = kfold_once(n, scheme.k, shuffle, r, split_rng(rng, static_cast<std::uint64_t>(r)));
        for (auto& f : folds) plan.push_back(std::move(f));
      }
      break;
    }
    case CVScheme::Kind::stratified_kfold: {
      if (scheme.k < 2 || scheme.k > n) throw Error("make_splits: need 2 <= k <= n");
      if (!y_labels || static_cast<int>(y_labels->size()) != n)
        throw Error("make_splits: stratified requires categorical y");
      // Members per class in appearance order; classes in sorted order.
      std::map<std::string, std::vector<int>> members;
      for (int i = 0; i < n; ++i) members[(*y_labels)[static_cast<std::size_t>(i)]].push_back(i);
      for (const auto& [cls, m] : members)
        if (static_cast<int>(m.size()) < scheme.k)
          throw Error("make_splits: class \"" + cls + "\" has fewer members than k");

      std::vector<Fold> folds(static_cast<std::size_t>(scheme.k));
      for (int f = 0; f < scheme.k; ++f) {
        folds[static_cast<std::size_t>(f)].repeat = 0;
        folds[static_cast<std::size_t>(f)].fold = f;
      }
      // Each class deals its members cyclically; the starting fold advances
      // by the previous remainders so overall fold sizes stay within one.
      int offset = 0;
      for (auto& [cls, m] : members) {
        std::vector<int> idx = m;
        if (scheme.shuffle) rng.shuffle(idx);
        for (std::size_t j = 0; j < idx.size(); ++j)
          folds[static_cast<std::size_t>((offset + static_cast<int>(j)) % scheme.k)]
              .test_idx.push_back(idx[j]);
        offset = (offset + static_cast<int>(idx.size() % static_cast<std::size_t>(scheme.k))) %
                 scheme.k;
      }
      plan = std::move(folds);
      break;
    }
    case CVScheme::Kind::group_kfold: {
      if (scheme.k < 2 || scheme.k > n) throw Error("make_splits: need 2 <= k <= n");
      if (!groups || static_cast<int>(groups->size()) != n)
        throw Error("make_splits: group_kfold requires a group column");
      std::vector<std::string> group_order;
      std::map<std::string, std::vector<int>> members;
      for (int i = 0; i < n; ++i) {
        const std::string& g = (*groups)[static_cast<std::size_t>(i)];
        if (!members.count(g)) group_order.push_back(g);
        members[g].push_back(i);
      }
      if (static_cast<int>(group_order.size()) < scheme.k)
        throw Error("make_splits: fewer groups than k");
      // Largest group first, ties by first appearance; greedy to the
      // lightest fold.
      std::stable_sort(group_order.begin(), group_order.end(),
                       [&](const std::string& a, const std::string& b) {
                         return members[a].size() > members[b].size();
                       });
      std::vector<Fold> folds(static_cast<std::size_t>(scheme.k));
      std::vector<std::size_t> load(static_cast<std::size_t>(scheme.k), 0);
      for (int f = 0; f < scheme.k; ++f) {
        folds[static_cast<std::size_t>(f)].repeat = 0;
        folds[static_cast<std::size_t>(f)].fold = f;
      }
      for (const auto& g : group_order) {
        std::size_t best = 0;
        for (std::size_t f = 1; f < load.size(); ++f)
          if (load[f] < load[best]) best = f;
        for (int i : members[g]) folds[best].test_idx.push_back(i);
        load[best] += members[g].size();
      }
      plan = std::move(folds);
      break;
    }
  }

  fill_train_from_test(plan, n);
  for (const auto& f : plan)
    if (f.train_idx.empty() || f.test_idx.empty())
      throw Error("make_splits: degenerate fold (empty train or test)");
  return plan;
}

std::uint64_t fnv1a_hash(const std::vector<int>& idx) {
  std::uint64_t h = 14695981039346656037ull;
  for (int v : idx) {
    std::uint32_t u = static_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) {
      h ^= (u >> (8 * b)) & 0xFFu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

double CVResult::mean_score(const std::string& metric) const {
  auto v = metric_scores(metric);
  return numerics::mean(v);
}

std::vector<double> CVResult::metric_scores(const std::string& metric) const {
  std::vector<double> out;
  for (const auto& r : scores)
    if (r.metric == metric) out.push_back(r.value);
  if (out.empty()) throw Error("metric absent from result: " + metric);
  return out;
}

namespace {

std::vector<std::string> stringify_numeric(const NumericColumn& col) {
  std::vector<std::string> out;
  char buf[32];
  for (double v : col) {
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.emplace_back(buf, res.ptr);
  }
  return out;
}

CVScheme default_inner_scheme(ProblemType pt) {
  return pt == ProblemType::classification ? CVScheme::stratified_kfold(5, false)
                                           : CVScheme::kfold(5, false);
}

}  // namespace

TuneOutcome tune_grid(const PipelineSpec& spec, const DataState& train,
                      const TargetView& target, const CVScheme* inner_scheme,
                      const std::string& objective, RngStream rng) {
  spec.validate();
  TuneOutcome out;
  std::vector<GridAxis> axes = grid_axes(spec);
  std::vector<std::size_t> choice(axes.size(), 0);

  if (spec.grid_size() <= 1) {
    out.resolved = resolve_combination(spec, axes, choice);
    out.chosen = combination_json(spec, axes, choice);
    return out;
  }

  CVScheme inner = inner_scheme ? *inner_scheme : default_inner_scheme(spec.problem_type);
  const int n = static_cast<int>(train.table.n_rows());
  const std::vector<std::string>* y_for_strat =
      target.is_classification ? &target.labels : nullptr;
  const std::vector<std::string>* groups = nullptr;
  std::vector<std::string> group_vals;
  if (inner.kind == CVScheme::Kind::group_kfold) {
    group_vals = train.table.is_numeric(inner.group_column)
                     ? stringify_numeric(train.table.numeric(inner.group_column))
                     : train.table.categorical(inner.group_column);
    groups = &group_vals;
  }
  FoldPlan inner_plan = make_splits(inner, n, y_for_strat, groups, split_rng(rng, 0));

  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_choice;
  bool first = true;

  std::uint64_t combo_id = 0;
  while (true) {
    PipelineSpec candidate = resolve_combination(spec, axes, choice);
    double sum = 0.0;
    for (std::size_t f = 0; f < inner_plan.size(); ++f) {
      const Fold& fold = inner_plan[f];
      DataState inner_train{train.table.take_rows(fold.train_idx), train.features,
                            train.types};
      TargetView y_train = target.take_rows(fold.train_idx);
      TargetView y_test = target.take_rows(fold.test_idx);
      std::vector<std::string> discard;
      RngStream fold_rng = split_rng(split_rng(rng, 1 + combo_id), f);
      FittedPipeline fp = fit_pipeline(candidate, inner_train, y_train, fold_rng, discard);
      Table test_table = train.table.take_rows(fold.test_idx);
      if (spec.problem_type == ProblemType::classification)
        sum += score_classification(objective, y_test.labels, fp.predict_labels(test_table));
      else
        sum += score_regression(objective, y_test.numeric, fp.predict_values(test_table));
    }
    double mean_obj = sum / static_cast<double>(inner_plan.size());
    Json row = Json::object();
    row["params"] = combination_json(spec, axes, choice);
    row["mean_score"] = mean_obj;
    row["n_folds"] = inner_plan.size();
    out.inner_table.push_back(row);

    if (first || mean_obj > best_score) {
      best_score = mean_obj;
      best_choice = choice;
      first = false;
    }

    // Row-major advance, last axis fastest.
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++choice[a] < axes[a].values.size()) break;
      choice[a] = 0;
      if (a == 0) {
        choice.clear();
        break;
      }
    }
    if (choice.empty()) break;
    ++combo_id;
  }

  out.resolved = resolve_combination(spec, axes, best_choice);
  out.chosen = combination_json(spec, axes, best_choice);
  return out;
}

CVResult run_cross_validation(const Table& data, const std::vector<std::string>& features,
                              const std::string& target, const FeatureTypeMap& types,
                              const PipelineSpec& spec, const CVScheme& scheme,
                              const std::vector<std::string>& scoring,
                              const TuningConfig* tuning, std::uint64_t seed,
                              const RunOptions& opts) {
  spec.validate();
  if (!data.has_column(target)) throw Error("target column not found: " + target);
  if (features.empty()) throw Error("no feature columns given");
  std::set<std::string> seen;
  for (const auto& f : features) {
    if (f == target) throw Error("target must not be among the features: " + f);
    if (!data.has_column(f)) throw Error("feature column not found: " + f);
    if (!seen.insert(f).second) throw Error("duplicate feature column: " + f);
  }
  if (scoring.empty()) throw Error("scoring list must not be empty");
  for (const auto& m : scoring)
    if (!metric_valid_for(m, spec.problem_type))
      throw Error("metric \"" + m + "\" not valid for " + to_string(spec.problem_type));

  // Feature list in table column order so downstream behavior is independent
  // of how the caller ordered the names.
  std::vector<std::string> ordered_features;
  for (const auto& c : data.column_names())
    if (seen.count(c)) ordered_features.push_back(c);

  TargetView tv = TargetView::from_table(data, target, spec.problem_type);
  const int n = static_cast<int>(data.n_rows());

  const std::vector<std::string>* y_for_strat = nullptr;
  if (scheme.kind == CVScheme::Kind::stratified_kfold) {
    if (!tv.is_classification)
      throw Error("stratified_kfold requires a classification target");
    y_for_strat = &tv.labels;
  }
  std::vector<std::string> group_vals;
  const std::vector<std::string>* groups = nullptr;
  if (scheme.kind == CVScheme::Kind::group_kfold) {
    if (!data.has_column(scheme.group_column))
      throw Error("group column not found: " + scheme.group_column);
    group_vals = data.is_numeric(scheme.group_column)
                     ? stringify_numeric(data.numeric(scheme.group_column))
                     : data.categorical(scheme.group_column);
    groups = &group_vals;
  }

  RngStream base(seed);
  FoldPlan plan = make_splits(scheme, n, y_for_strat, groups, split_rng(base, 0));

  CVResult result;
  result.problem_type = spec.problem_type;
  result.metrics = scoring;
  result.seed = seed;
  result.y_true_values = tv.numeric;
  result.y_true_labels = tv.labels;
  result.plan.resize(plan.size());
  result.chosen_params.resize(plan.size());
  result.pred_values.resize(plan.size());
  result.pred_labels.resize(plan.size());
  if (opts.retain_pipelines) result.pipelines.resize(plan.size());

  std::vector<std::vector<ScoreRecord>> fold_scores(plan.size());
  std::vector<std::vector<std::string>> fold_warnings(plan.size());

  TuningConfig tuning_cfg;
  if (tuning) tuning_cfg = *tuning;
  if (tuning_cfg.objective.empty()) tuning_cfg.objective = scoring[0];

  auto run_fold = [&](std::size_t i) {
    const Fold& fold = plan[i];
    try {
      DataState train_state{data.take_rows(fold.train_idx), ordered_features, types};
      TargetView y_train = tv.take_rows(fold.train_idx);
      TargetView y_test = tv.take_rows(fold.test_idx);
      RngStream fold_rng = split_rng(base, 1 + static_cast<std::uint64_t>(i));

      TuneOutcome tuned =
          tune_grid(spec, train_state, y_train,
                    tuning_cfg.inner ? &*tuning_cfg.inner : nullptr,
                    tuning_cfg.objective, split_rng(fold_rng, 0));

      FittedPipeline fp = fit_pipeline(tuned.resolved, train_state, y_train,
                                       split_rng(fold_rng, 1), fold_warnings[i]);
      fp.set_chosen_params(tuned.chosen);

      Table test_table = data.take_rows(fold.test_idx);
      if (spec.problem_type == ProblemType::classification)
        result.pred_labels[i] = fp.predict_labels(test_table);
      else
        result.pred_values[i] = fp.predict_values(test_table);

      for (const auto& metric : scoring) {
        ScoreRecord rec;
        rec.repeat = fold.repeat;
        rec.fold = fold.fold;
        rec.metric = metric;
        rec.n_train = static_cast<int>(fold.train_idx.size());
        rec.n_test = static_cast<int>(fold.test_idx.size());
        rec.value = spec.problem_type == ProblemType::classification
                        ? score_classification(metric, y_test.labels, result.pred_labels[i])
                        : score_regression(metric, y_test.numeric, result.pred_values[i]);
        fold_scores[i].push_back(std::move(rec));
      }

      FoldInfo info;
      info.repeat = fold.repeat;
      info.fold = fold.fold;
      info.n_train = static_cast<int>(fold.train_idx.size());
      info.n_test = static_cast<int>(fold.test_idx.size());
      info.test_idx = fold.test_idx;
      info.train_hash = fnv1a_hash(fold.train_idx);
      result.plan[i] = std::move(info);
      result.chosen_params[i] = tuned.chosen;
      if (opts.retain_pipelines) result.pipelines[i] = std::move(fp);
    } catch (const Error& e) {
      throw Error("fold (repeat " + std::to_string(fold.repeat) + ", fold " +
                  std::to_string(fold.fold) + "): " + e.what());
    }
  };

  int jobs = std::max(1, opts.jobs);
  if (jobs == 1 || plan.size() <= 1) {
    for (std::size_t i = 0; i < plan.size(); ++i) run_fold(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(plan.size());
    auto worker = [&]() {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= plan.size()) return;
        try {
          run_fold(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min<int>(jobs, static_cast<int>(plan.size())); ++t)
      pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // Deterministic merge in plan order, independent of worker scheduling.
  for (std::size_t i = 0; i < plan.size(); ++i) {
    for (auto& rec : fold_scores[i]) result.scores.push_back(std::move(rec));
    for (auto& w : fold_warnings[i])
      result.warnings.push_back("repeat " + std::to_string(plan[i].repeat) + " fold " +
                                std::to_string(plan[i].fold) + ": " + w);
  }
  return result;
}

}  // namespace cvforge
