#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "cvforge/pipeline.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cvforge;
using numerics::RngStream;

namespace {

DataState make_state(Table table, std::vector<std::string> features,
                     const std::map<std::string, std::vector<std::string>>& x_types = {}) {
  FeatureTypeMap types = FeatureTypeMap::from_assignments(x_types, table);
  return DataState{std::move(table), std::move(features), types};
}

FittedPipeline fit(const PipelineSpec& spec, const DataState& state, const TargetView& y) {
  std::vector<std::string> warnings;
  return fit_pipeline(spec, state, y, RngStream(0), warnings);
}

}  // namespace

TEST_CASE("step ordering and grid validation") {
  PipelineSpec spec;
  spec.problem_type = ProblemType::regression;
  spec.add_step("linear_reg");
  CHECK_THROWS_WITH_AS(spec.add_step("zscore"), doctest::Contains("model must be final"),
                       Error);

  PipelineSpec empty_grid;
  CHECK_THROWS_WITH_AS(empty_grid.add_step("ridge", {{"lambda", Json::array()}}),
                       doctest::Contains("empty hyperparameter grid"), Error);

  PipelineSpec unknown;
  CHECK_THROWS(unknown.add_step("pls"));

  PipelineSpec incomplete;
  incomplete.add_step("zscore");
  CHECK_THROWS(incomplete.validate());
}

TEST_CASE("step names default to the kind and deduplicate") {
  PipelineSpec spec;
  spec.add_step("zscore");
  spec.add_step("zscore");
  spec.add_step("dummy");
  CHECK(spec.steps[0].name == "zscore");
  CHECK(spec.steps[1].name == "zscore_2");
  CHECK(spec.steps[2].name == "dummy");
}

TEST_CASE("grid size and enumeration order") {
  PipelineSpec spec;
  spec.add_step("cbpm", {{"alpha", Json::array({0.01, 0.05, 0.1})}});
  spec.add_step("ridge", {{"lambda", Json::array({0.1, 1.0})}});
  CHECK(spec.grid_size() == 6);
  auto axes = grid_axes(spec);
  REQUIRE(axes.size() == 2);
  CHECK(axes[0].param == "alpha");
  CHECK(axes[1].param == "lambda");
  Json combo = combination_json(spec, axes, {2, 0});
  CHECK(combo["cbpm.alpha"].get<double>() == 0.1);
  CHECK(combo["ridge.lambda"].get<double>() == 0.1);
  PipelineSpec resolved = resolve_combination(spec, axes, {2, 0});
  CHECK(resolved.grid_size() == 1);
  CHECK(resolved.steps[0].params["alpha"].get<double>() == 0.1);
}

TEST_CASE("zscore then dummy predicts the train mean") {
  std::mt19937_64 gen(2);
  Table t = testutil::gaussian_table(gen, 10, 3);
  std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  Table full = t;
  full.add_numeric("y", y);
  auto state = make_state(full, t.column_names());
  auto target = TargetView::from_table(full, "y", ProblemType::regression);

  PipelineSpec spec;
  spec.add_step("zscore");
  spec.add_step("dummy");
  auto fitted = fit(spec, state, target);
  for (double p : fitted.predict_values(full)) CHECK(p == doctest::Approx(5.5));
}

TEST_CASE("confound removal inside a pipeline matches the two-stage oracle") {
  std::mt19937_64 gen(13);
  std::normal_distribution<double> z(0.0, 1.0);
  int n = 40;
  std::vector<double> conf(n), sig(n), feat(n), y(n);
  for (int i = 0; i < n; ++i) {
    conf[i] = z(gen);
    sig[i] = z(gen);
    feat[i] = sig[i] + 2.0 * conf[i];
    y[i] = 3.0 * sig[i] + 0.05 * z(gen);
  }
  Table t;
  t.add_numeric("feat", feat);
  t.add_numeric("c", conf);
  t.add_numeric("y", y);
  auto state = make_state(t, {"feat", "c"}, {{"confound", {"c"}}});
  auto target = TargetView::from_table(t, "y", ProblemType::regression);

  PipelineSpec spec;
  spec.add_step("confound_remover");
  spec.add_step("linear_reg");
  auto fitted = fit(spec, state, target);

  // Oracle: residualize manually, then fit a line.
  numerics::Matrix xc(n, 1);
  for (int i = 0; i < n; ++i) xc(i, 0) = conf[i];
  auto beta = numerics::least_squares(xc, feat, true);
  std::vector<double> resid(n);
  for (int i = 0; i < n; ++i) resid[i] = feat[i] - beta[0] * conf[i] - beta[1];
  numerics::Matrix xr(n, 1);
  for (int i = 0; i < n; ++i) xr(i, 0) = resid[i];
  auto line = numerics::least_squares(xr, y, true);

  Json s = fitted.params_summary();
  double coef = s["linear_reg"]["coefficients"][0].get<double>();
  double intercept = s["linear_reg"]["intercept"].get<double>();
  CHECK(coef == doctest::Approx(line[0]).epsilon(1e-9));
  CHECK(intercept == doctest::Approx(line[1]).epsilon(1e-9));
}

TEST_CASE("predictions are row-pure and permutation-equivariant") {
  std::mt19937_64 gen(31);
  Table t = testutil::gaussian_table(gen, 25, 4);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> y(25);
  for (int i = 0; i < 25; ++i) y[i] = t.numeric("f0")[i] + 0.3 * z(gen);
  Table full = t;
  full.add_numeric("y", y);
  auto state = make_state(full, t.column_names());
  auto target = TargetView::from_table(full, "y", ProblemType::regression);

  PipelineSpec spec;
  spec.add_step("zscore");
  spec.add_step("linear_reg");
  auto fitted = fit(spec, state, target);

  Table test = testutil::gaussian_table(gen, 6, 4);
  auto base = fitted.predict_values(test);

  // permutation of rows permutes predictions identically
  std::vector<int> perm{3, 0, 5, 1, 4, 2};
  auto permuted = fitted.predict_values(test.take_rows(perm));
  for (int i = 0; i < 6; ++i) CHECK(permuted[i] == base[perm[i]]);

  // prediction for row 0 is invariant to the contents of row 3
  Table mutated = test;
  auto col = mutated.numeric("f1");
  col[3] += 100.0;
  mutated.replace_numeric("f1", col);
  auto after = fitted.predict_values(mutated);
  CHECK(after[0] == base[0]);
  CHECK(after[5] == base[5]);
}

TEST_CASE("preprocess_until exposes intermediate tables") {
  std::mt19937_64 gen(41);
  Table t = testutil::gaussian_table(gen, 15, 3);
  std::vector<double> y(15, 1.0);
  y[0] = 0.0;
  Table full = t;
  full.add_numeric("y", y);
  auto state = make_state(full, t.column_names());
  auto target = TargetView::from_table(full, "y", ProblemType::regression);

  PipelineSpec spec;
  spec.add_step("zscore");
  spec.add_step("pca", {{"retain", 2}});
  spec.add_step("dummy");
  auto fitted = fit(spec, state, target);

  Table after_z = fitted.preprocess_until(full, "zscore");
  // zscore of the train table itself: each feature has mean ~0
  for (const auto& c : t.column_names()) {
    double m = numerics::mean(after_z.numeric(c));
    CHECK(std::fabs(m) < 1e-12);
  }

  Table after_pca = fitted.preprocess_until(full, "pca");
  CHECK(after_pca.has_column("pca_0"));
  CHECK(after_pca.has_column("pca_1"));
  CHECK_FALSE(after_pca.has_column("f0"));

  CHECK_THROWS_WITH_AS(fitted.preprocess_until(full, "dummy"),
                       doctest::Contains("not preprocessable"), Error);
  CHECK_THROWS_WITH_AS(fitted.preprocess_until(full, "nope"),
                       doctest::Contains("unknown step"), Error);
}

TEST_CASE("apply_to routes a transformer to selected columns only") {
  Table t;
  t.add_numeric("a", {1, 2, 3, 4});
  t.add_numeric("b", {10, 20, 30, 40});
  t.add_numeric("y", {0, 0, 0, 0});
  auto state = make_state(t, {"a", "b"});
  auto target = TargetView::from_table(t, "y", ProblemType::regression);

  PipelineSpec spec;
  spec.add_step("zscore", Json::object(), ColumnSelector::by_name({"a"}));
  spec.add_step("dummy");
  auto fitted = fit(spec, state, target);
  Table out = fitted.preprocess_until(t, "zscore");
  CHECK(numerics::mean(out.numeric("a")) == doctest::Approx(0.0));
  CHECK(out.numeric("b") == NumericColumn{10, 20, 30, 40});  // untouched
}

TEST_CASE("fit_pipeline rejects unresolved grids and categorical model input") {
  PipelineSpec grid;
  grid.add_step("ridge", {{"lambda", Json::array({0.1, 1.0})}});
  Table t;
  t.add_numeric("x", {1, 2, 3});
  t.add_numeric("y", {1, 2, 3});
  auto state = make_state(t, {"x"});
  auto target = TargetView::from_table(t, "y", ProblemType::regression);
  std::vector<std::string> w;
  CHECK_THROWS(fit_pipeline(grid, state, target, RngStream(0), w));

  Table tc;
  tc.add_categorical("g", {"a", "b", "a"});
  tc.add_numeric("y", {1, 2, 3});
  auto state_c = make_state(tc, {"g"});
  PipelineSpec spec;
  spec.add_step("linear_reg");
  CHECK_THROWS(fit_pipeline(spec, state_c, target, RngStream(0), w));
}

TEST_CASE("step errors carry the step name") {
  Table t;
  t.add_numeric("x", {5, 5, 5});
  t.add_numeric("y", {1, 2, 3});
  auto state = make_state(t, {"x"});
  auto target = TargetView::from_table(t, "y", ProblemType::regression);
  PipelineSpec spec;
  spec.add_step("variance_threshold", {{"threshold", 1e-5}}, ColumnSelector::all_features(),
                "vt");
  spec.add_step("dummy");
  std::vector<std::string> w;
  CHECK_THROWS_WITH_AS(fit_pipeline(spec, state, target, RngStream(0), w),
                       doctest::Contains("step \"vt\""), Error);
}
