#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "cvforge/model.hpp"
#include "doctest.h"

using namespace cvforge;
using numerics::Matrix;
using numerics::RngStream;

namespace {

TargetView reg_target(const std::vector<double>& y) {
  Table t;
  t.add_numeric("y", y);
  return TargetView::from_table(t, "y", ProblemType::regression);
}

TargetView cls_target(const std::vector<std::string>& y) {
  Table t;
  t.add_categorical("y", y);
  return TargetView::from_table(t, "y", ProblemType::classification);
}

Matrix column(const std::vector<double>& v) {
  Matrix x(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) x(i, 0) = v[i];
  return x;
}

}  // namespace

TEST_CASE("dummy regressor predicts the train mean") {
  auto m = fit_model({"dummy", ProblemType::regression, {}}, column({0, 0, 0}),
                     reg_target({1, 2, 3}), RngStream(0));
  auto p = m->predict_values(column({42, -1}));
  CHECK(p == std::vector<double>{2.0, 2.0});
}

TEST_CASE("dummy classifier predicts the majority label, ties lexicographic") {
  auto m = fit_model({"dummy", ProblemType::classification, {}}, column({0, 0, 0}),
                     cls_target({"a", "a", "b"}), RngStream(0));
  CHECK(m->predict_labels(column({5})) == std::vector<std::string>{"a"});

  auto tie = fit_model({"dummy", ProblemType::classification, {}}, column({0, 0}),
                       cls_target({"b", "a"}), RngStream(0));
  CHECK(tie->predict_labels(column({5})) == std::vector<std::string>{"a"});
}

TEST_CASE("linear_reg recovers an exact line") {
  auto m = fit_model({"linear_reg", ProblemType::regression, {}}, column({0, 1, 2, 3}),
                     reg_target({1, 3, 5, 7}), RngStream(0));  // y = 2x + 1
  Json s = m->summary();
  CHECK(s["coefficients"][0].get<double>() == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(s["intercept"].get<double>() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(m->predict_values(column({10}))[0] == doctest::Approx(21.0).epsilon(1e-10));
}

TEST_CASE("ridge shrinks towards the train mean as lambda grows") {
  std::vector<double> xs{-2, -1, 0, 1, 2}, ys{-4, -2, 0, 2, 4};
  auto huge = fit_model({"ridge", ProblemType::regression, {{"lambda", 1e12}}}, column(xs),
                        reg_target(ys), RngStream(0));
  // centered data, giant penalty: coefficient ~0, prediction ~train mean (0)
  CHECK(std::fabs(huge->predict_values(column({1.0}))[0]) < 1e-6);

  auto tiny = fit_model({"ridge", ProblemType::regression, {{"lambda", 1e-10}}}, column(xs),
                        reg_target(ys), RngStream(0));
  CHECK(tiny->predict_values(column({3.0}))[0] == doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("ridge intercept is not penalized") {
  // constant shift: intercept must absorb it fully even with a huge lambda
  auto m = fit_model({"ridge", ProblemType::regression, {{"lambda", 1e12}}},
                     column({-1, 0, 1}), reg_target({99, 100, 101}), RngStream(0));
  CHECK(m->predict_values(column({0.0}))[0] == doctest::Approx(100.0).epsilon(1e-6));
}

TEST_CASE("logistic separates linearly separable blobs") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> z(0.0, 0.3);
  Matrix x(40, 2);
  std::vector<std::string> y(40);
  for (int i = 0; i < 40; ++i) {
    double cx = i < 20 ? -2.0 : 2.0;
    x(i, 0) = cx + z(gen);
    x(i, 1) = cx + z(gen);
    y[i] = i < 20 ? "neg" : "pos";
  }
  auto m = fit_model({"logistic", ProblemType::classification, {{"lambda", 1.0}}}, x,
                     cls_target(y), RngStream(0));
  auto p = m->predict_labels(x);
  int correct = 0;
  for (int i = 0; i < 40; ++i)
    if (p[i] == y[i]) ++correct;
  CHECK(correct == 40);
}

TEST_CASE("logistic one-vs-rest handles three classes") {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> z(0.0, 0.2);
  Matrix x(60, 2);
  std::vector<std::string> y(60);
  double centers[3][2] = {{-3, 0}, {3, 0}, {0, 3}};
  for (int i = 0; i < 60; ++i) {
    int c = i / 20;
    x(i, 0) = centers[c][0] + z(gen);
    x(i, 1) = centers[c][1] + z(gen);
    y[i] = std::string(1, char('a' + c));
  }
  auto m = fit_model({"logistic", ProblemType::classification, {{"lambda", 0.1}}}, x,
                     cls_target(y), RngStream(0));
  auto p = m->predict_labels(x);
  int correct = 0;
  for (int i = 0; i < 60; ++i)
    if (p[i] == y[i]) ++correct;
  CHECK(correct >= 58);
}

TEST_CASE("linear_svm classifies well-separated blobs") {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> z(0.0, 0.3);
  Matrix x(50, 2);
  std::vector<std::string> y(50);
  for (int i = 0; i < 50; ++i) {
    double cx = i % 2 == 0 ? -2.0 : 2.0;
    x(i, 0) = cx + z(gen);
    x(i, 1) = -cx + z(gen);
    y[i] = i % 2 == 0 ? "l" : "r";
  }
  auto m = fit_model({"linear_svm", ProblemType::classification, {{"C", 1.0}}}, x,
                     cls_target(y), RngStream(3));
  auto p = m->predict_labels(x);
  int correct = 0;
  for (int i = 0; i < 50; ++i)
    if (p[i] == y[i]) ++correct;
  CHECK(correct >= 48);
}

TEST_CASE("linear_svm is deterministic in the rng stream") {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix x(30, 3);
  std::vector<std::string> y(30);
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = z(gen);
    y[i] = x(i, 0) > 0 ? "p" : "n";
  }
  auto a = fit_model({"linear_svm", ProblemType::classification, Json::object()}, x, cls_target(y),
                     RngStream(7, 1));
  auto b = fit_model({"linear_svm", ProblemType::classification, Json::object()}, x, cls_target(y),
                     RngStream(7, 1));
  CHECK(a->summary() == b->summary());
}

TEST_CASE("model spec validation") {
  CHECK(is_model_kind("ridge"));
  CHECK_FALSE(is_model_kind("pls"));
  CHECK_THROWS(validate_model_spec({"pls", ProblemType::regression, {}}));
  CHECK_THROWS(validate_model_spec({"ridge", ProblemType::classification, {}}));
  CHECK_THROWS(validate_model_spec({"logistic", ProblemType::regression, {}}));
  CHECK_THROWS(validate_model_spec({"ridge", ProblemType::regression, {{"lambda", -1.0}}}));
  CHECK_THROWS(validate_model_spec({"linear_svm", ProblemType::regression, {{"C", 0.0}}}));
  CHECK_THROWS(validate_model_spec({"ridge", ProblemType::regression, {{"bogus", 1}}}));
  CHECK_NOTHROW(validate_model_spec({"linear_svm", ProblemType::regression, {{"epsilon", 0.1}}}));
}

TEST_CASE("regression models refuse predict_labels and vice versa") {
  auto reg = fit_model({"dummy", ProblemType::regression, {}}, column({0}), reg_target({1}),
                       RngStream(0));
  CHECK_THROWS(reg->predict_labels(column({0})));
  auto cls = fit_model({"dummy", ProblemType::classification, {}}, column({0}),
                       cls_target({"a"}), RngStream(0));
  CHECK_THROWS(cls->predict_values(column({0})));
}
