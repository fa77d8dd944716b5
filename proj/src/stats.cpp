#include "cvforge/stats.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace cvforge {

bool fold_plans_match(const std::vector<FoldInfo>& a, const std::vector<FoldInfo>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].repeat != b[i].repeat || a[i].fold != b[i].fold ||
        a[i].n_train != b[i].n_train || a[i].n_test != b[i].n_test ||
        a[i].test_idx != b[i].test_idx || a[i].train_hash != b[i].train_hash)
      return false;
  }
  return true;
}

TestResult corrected_ttest_scores(const std::vector<double>& a, const std::vector<double>& b,
                                  double test_train_ratio) {
  if (a.size() != b.size()) throw Error("corrected_ttest: score count mismatch");
  const std::size_t k = a.size();
  if (k < 2) throw Error("corrected_ttest: need at least 2 paired folds");

  std::vector<double> d(k);
  for (std::size_t i = 0; i < k; ++i) d[i] = a[i] - b[i];
  double md = numerics::mean(d);
  double var = numerics::sample_variance(d);

  TestResult res;
  res.k = static_cast<int>(k);
  res.df = static_cast<double>(k - 1);
  res.mean_diff = md;
  res.correction = 1.0 / static_cast<double>(k) + test_train_ratio;

  if (var <= 0.0) {
    // Zero-variance differences: identical fold-wise gaps.
    res.t = 0.0;
    if (md == 0.0) {
      res.p = 1.0;
    } else {
      res.p = 0.0;
      res.degenerate = true;
      res.t = md > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
    }
    return res;
  }
  res.t = md / std::sqrt(res.correction * var);
  res.p = 2.0 * numerics::t_sf(std::abs(res.t), res.df);
  if (res.p > 1.0) res.p = 1.0;
  return res;
}

namespace {

double mean_ratio(const std::vector<FoldInfo>& plan) {
  double tr = 0.0, te = 0.0;
  for (const auto& f : plan) {
    tr += f.n_train;
    te += f.n_test;
  }
  return te / tr;
}

}  // namespace

TestResult corrected_ttest(const CVResult& a, const CVResult& b, const std::string& metric) {
  if (!fold_plans_match(a.plan, b.plan))
    throw Error("corrected_ttest: results come from different fold plans");
  std::vector<double> sa = a.metric_scores(metric);
  std::vector<double> sb = b.metric_scores(metric);
  return corrected_ttest_scores(sa, sb, mean_ratio(a.plan));
}

ComparisonTable compare_all(const std::vector<std::pair<std::string, const CVResult*>>& results,
                            const std::string& metric) {
  if (results.size() < 2) throw Error("compare_all: need at least 2 results");
  for (std::size_t i = 1; i < results.size(); ++i)
    if (!fold_plans_match(results[0].second->plan, results[i].second->plan))
      throw Error("compare_all: result \"" + results[i].first +
                  "\" has a different fold plan");

  ComparisonTable table;
  table.metric = metric;
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (std::size_t j = i + 1; j < results.size(); ++j) {
      ComparisonRow row;
      row.name_a = results[i].first;
      row.name_b = results[j].first;
      row.test = corrected_ttest(*results[i].second, *results[j].second, metric);
      row.mean_a = results[i].second->mean_score(metric);
      row.mean_b = results[j].second->mean_score(metric);
      table.rows.push_back(std::move(row));
    }
  }
  for (const auto& [name, res] : results) {
    for (const auto& rec : res->scores) {
      if (rec.metric != metric) continue;
      Json row = Json::object();
      row["pipeline"] = name;
      row["repeat"] = rec.repeat;
      row["fold"] = rec.fold;
      row["metric"] = rec.metric;
      row["value"] = rec.value;
      table.long_scores.push_back(std::move(row));
    }
  }
  return table;
}

TestResult welch_ttest(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw Error("welch_ttest: need >= 2 samples per group");
  double ma = numerics::mean(a), mb = numerics::mean(b);
  double va = numerics::sample_variance(a) / static_cast<double>(a.size());
  double vb = numerics::sample_variance(b) / static_cast<double>(b.size());
  TestResult res;
  res.k = static_cast<int>(a.size() + b.size());
  res.mean_diff = ma - mb;
  double denom = va + vb;
  if (denom <= 0.0) {
    res.t = 0.0;
    res.df = 1.0;
    res.p = ma == mb ? 1.0 : 0.0;
    res.degenerate = true;
    return res;
  }
  res.t = (ma - mb) / std::sqrt(denom);
  res.df = denom * denom /
           (va * va / (static_cast<double>(a.size()) - 1.0) +
            vb * vb / (static_cast<double>(b.size()) - 1.0));
  res.p = 2.0 * numerics::t_sf(std::abs(res.t), res.df);
  if (res.p > 1.0) res.p = 1.0;
  return res;
}

std::string render_comparison_text(const ComparisonTable& table) {
  std::ostringstream os;
  os << "metric: " << table.metric << "\n";
  os << std::left << std::setw(16) << "pipeline_a" << std::setw(16) << "pipeline_b"
     << std::right << std::setw(12) << "mean_a" << std::setw(12) << "mean_b"
     << std::setw(12) << "t" << std::setw(6) << "df" << std::setw(14) << "p" << "\n";
  for (const auto& row : table.rows) {
    os << std::left << std::setw(16) << row.name_a << std::setw(16) << row.name_b
       << std::right << std::fixed << std::setprecision(4) << std::setw(12) << row.mean_a
       << std::setw(12) << row.mean_b << std::setw(12) << row.test.t << std::setw(6)
       << std::setprecision(0) << row.test.df << std::scientific << std::setprecision(3)
       << std::setw(14) << row.test.p << "\n";
    os.unsetf(std::ios::floatfield);
  }
  return os.str();
}

}  // namespace cvforge
