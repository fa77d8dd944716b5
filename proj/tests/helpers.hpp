#pragma once

// Shared helpers for the test suites: an independent quadrature oracle for
// Student-t tail probabilities, small data generators, and a brute-force
// correlate-and-threshold feature-selection oracle. These deliberately avoid
// the library's own numerics so they can serve as cross-checks.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cvforge/table.hpp"

namespace testutil {

inline double t_density(double x, double df) {
  double lg = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) -
              0.5 * std::log(df * M_PI);
  return std::exp(lg - (df + 1.0) / 2.0 * std::log1p(x * x / df));
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double eps, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, eps / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, eps / 2.0, depth - 1);
}

/// P(T > t) for T ~ Student-t(df), by adaptive Simpson quadrature. The
/// substitution x = t + u/(1-u) maps the infinite tail onto u in [0,1), so
/// heavy polynomial tails are integrated without truncation.
inline double t_sf_quadrature(double t, double df) {
  if (t < 0.0) return 1.0 - t_sf_quadrature(-t, df);
  auto g = [t, df](double u) {
    if (u >= 1.0) return 0.0;
    double one_minus = 1.0 - u;
    double x = t + u / one_minus;
    return t_density(x, df) / (one_minus * one_minus);
  };
  return adaptive_simpson(g, 0.0, 1.0, g(0.0), g(0.5), g(1.0), 1e-14, 48);
}

/// Two-sided Pearson p-value oracle for correlation r with n samples.
inline double pearson_p_quadrature(double r, std::size_t n) {
  double df = static_cast<double>(n) - 2.0;
  double t = std::fabs(r) * std::sqrt(df / (1.0 - r * r));
  return 2.0 * t_sf_quadrature(t, df);
}

inline double pearson_r_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

struct SelectionOracle {
  std::vector<std::string> positive;
  std::vector<std::string> negative;
};

/// Brute-force correlate-and-threshold selection: per feature, Pearson r with
/// y and a two-sided p from the quadrature oracle; p < alpha selects, the sign
/// of r partitions. Constant features and r == 0 select nothing.
inline SelectionOracle brute_force_selection(const cvforge::Table& table,
                                             const std::vector<std::string>& features,
                                             const std::vector<double>& y, double alpha) {
  SelectionOracle out;
  for (const auto& f : features) {
    const auto& x = table.numeric(f);
    double mx = 0;
    for (double v : x) mx += v;
    mx /= x.size();
    double sxx = 0;
    for (double v : x) sxx += (v - mx) * (v - mx);
    if (sxx <= 0.0) continue;
    double r = pearson_r_oracle(x, y);
    if (pearson_p_quadrature(r, x.size()) < alpha) {
      if (r > 0.0)
        out.positive.push_back(f);
      else if (r < 0.0)
        out.negative.push_back(f);
    }
  }
  return out;
}

/// Gaussian feature matrix with an optional linear signal in the target.
inline cvforge::Table gaussian_table(std::mt19937_64& gen, std::size_t n, std::size_t p,
                                     const std::string& prefix = "f") {
  std::normal_distribution<double> z(0.0, 1.0);
  cvforge::Table t;
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> col(n);
    for (auto& v : col) v = z(gen);
    t.add_numeric(prefix + std::to_string(j), std::move(col));
  }
  return t;
}

}  // namespace testutil
