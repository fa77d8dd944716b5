#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cvforge/common.hpp"

namespace cvforge::numerics {

/// Dense row-major matrix of 64-bit floats. Construction validates that all
/// entries are finite.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }

  // Throws if any entry is NaN or infinite.
  void validate() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
double frobenius_norm(const Matrix& a);

/// Least squares min ||X b - y||_2 via Householder QR with column pivoting.
/// Rank-deficient systems get the basic solution with free coefficients set
/// to zero (pivoting engages when a diagonal of R drops below 1e-12 * ||X||).
/// With `intercept`, the intercept coefficient is appended LAST.
std::vector<double> least_squares(const Matrix& x, const std::vector<double>& y,
                                  bool intercept = false);

/// Solve A x = b for symmetric positive definite A via Cholesky.
std::vector<double> solve_spd(const Matrix& a, const std::vector<double>& b);

struct EigenResult {
  std::vector<double> values;  // descending
  Matrix vectors;              // column i is the eigenvector for values[i]
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Eigenvalues are
/// sorted descending; each eigenvector's largest-magnitude entry is made
/// non-negative.
EigenResult sym_eigen(const Matrix& a);

double mean(const std::vector<double>& v);
/// Sample variance with the (n-1) denominator.
double sample_variance(const std::vector<double>& v);

/// Sample Pearson correlation; requires n >= 3 and non-constant inputs.
double pearson_r(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sided p-value of a Pearson correlation under the null, via the exact
/// t-distribution with n-2 degrees of freedom. |r| = 1 maps to p = 0.
double pearson_p(double r, std::size_t n);

/// Regularized incomplete beta I_x(a, b), Lentz continued fraction
/// (relative tolerance 1e-14, 300 iteration cap).
double ibeta_reg(double a, double b, double x);

/// Student-t upper tail P(T > t) with df degrees of freedom.
double t_sf(double t, double df);

/// Counter-based deterministic RNG (SplitMix64). The state advances by the
/// 64-bit golden-ratio constant 0x9E3779B97F4A7C15 and each output applies
/// the finalizer
///   z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
///   z ^= z >> 27; z *= 0x94D049BB133111EB;
///   z ^= z >> 31;
/// Identical (seed, stream) pairs yield identical sequences on all platforms.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (two uniforms per draw, no caching).
  double gaussian();
  /// Uniform integer in [0, bound) by modulo reduction.
  std::uint64_t next_below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t state_;
};

/// Derive an independent child stream; deterministic in (parent identity,
/// index) and unaffected by how much the parent has been consumed.
RngStream split_rng(const RngStream& parent, std::uint64_t index);

}  // namespace cvforge::numerics
