#include "cvforge/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cvforge::numerics {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols_) throw Error("Matrix::from_rows: ragged rows");
    for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
  }
  m.validate();
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::validate() const {
  for (double v : data_)
    if (!std::isfinite(v)) throw Error("Matrix contains non-finite value");
}

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
  if (x.size() != a.cols()) throw Error("matvec: dimension mismatch");
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error("matmul: dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

std::vector<double> least_squares(const Matrix& x, const std::vector<double>& y,
                                  bool intercept) {
  if (x.rows() != y.size()) throw Error("least_squares: dimension mismatch");
  const std::size_t n = x.rows();
  const std::size_t p = x.cols() + (intercept ? 1 : 0);
  if (n == 0) throw Error("least_squares: empty system");

  // Working copy, intercept column appended last.
  Matrix a(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) a(i, j) = x(i, j);
    if (intercept) a(i, p - 1) = 1.0;
  }
  std::vector<double> b = y;

  const double anorm = frobenius_norm(a);
  const double tol = 1e-12 * (anorm > 0 ? anorm : 1.0);

  std::vector<std::size_t> piv(p);
  std::iota(piv.begin(), piv.end(), 0);

  const std::size_t kmax = std::min(n, p);
  std::size_t rank = 0;
  for (std::size_t k = 0; k < kmax; ++k) {
    // Column pivot: pick the remaining column with the largest trailing norm.
    std::size_t best = k;
    double best_norm = -1.0;
    for (std::size_t j = k; j < p; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += a(i, j) * a(i, j);
      if (s > best_norm) {
        best_norm = s;
        best = j;
      }
    }
    if (best != k) {
      for (std::size_t i = 0; i < n; ++i) std::swap(a(i, k), a(i, best));
      std::swap(piv[k], piv[best]);
    }
    double colnorm = std::sqrt(std::max(best_norm, 0.0));
    if (colnorm <= tol) break;
    rank = k + 1;

    // Householder reflector for column k, rows k..n-1.
    double alpha = -std::copysign(colnorm, a(k, k));
    std::vector<double> v(n - k);
    v[0] = a(k, k) - alpha;
    for (std::size_t i = k + 1; i < n; ++i) v[i - k] = a(i, k);
    double vnorm2 = 0.0;
    for (double t : v) vnorm2 += t * t;
    a(k, k) = alpha;
    for (std::size_t i = k + 1; i < n; ++i) a(i, k) = 0.0;
    if (vnorm2 <= 0.0) continue;

    for (std::size_t j = k + 1; j < p; ++j) {
      double dot = 0.0;
      for (std::size_t i = k; i < n; ++i) dot += v[i - k] * a(i, j);
      double f = 2.0 * dot / vnorm2;
      for (std::size_t i = k; i < n; ++i) a(i, j) -= f * v[i - k];
    }
    double dotb = 0.0;
    for (std::size_t i = k; i < n; ++i) dotb += v[i - k] * b[i];
    double fb = 2.0 * dotb / vnorm2;
    for (std::size_t i = k; i < n; ++i) b[i] -= fb * v[i - k];
  }

  // Back-substitution on the leading rank x rank triangle; free coefficients
  // stay zero.
  std::vector<double> z(p, 0.0);
  for (std::size_t ii = rank; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < rank; ++j) s -= a(ii, j) * z[j];
    z[ii] = s / a(ii, ii);
  }
  std::vector<double> beta(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) beta[piv[j]] = z[j];
  return beta;
}

std::vector<double> solve_spd(const Matrix& a, const std::vector<double>& b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw Error("solve_spd: dimension mismatch");
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d <= 0.0) throw Error("solve_spd: matrix not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  std::vector<double> y(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

EigenResult sym_eigen(const Matrix& input) {
  const std::size_t n = input.rows();
  if (input.cols() != n) throw Error("sym_eigen: matrix not square");
  double amax = 0.0;
  for (double v : input.data()) amax = std::max(amax, std::abs(v));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(input(i, j) - input(j, i)) > 1e-10 * std::max(1.0, amax))
        throw Error("sym_eigen: matrix not symmetric");

  Matrix a = input;
  Matrix v = Matrix::identity(n);
  const double anorm = frobenius_norm(a);
  const double thresh = 1e-12 * (anorm > 0 ? anorm : 1.0);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    off = std::sqrt(2.0 * off);
    if (off < thresh) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = std::copysign(1.0, tau) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;

        for (std::size_t i = 0; i < n; ++i) {
          double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return diag[i] > diag[j]; });

  EigenResult res;
  res.values.resize(n);
  res.vectors = Matrix(n, n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t src = order[col];
    res.values[col] = diag[src];
    // Sign convention: largest-magnitude entry non-negative.
    std::size_t arg = 0;
    double big = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(v(i, src)) > big) {
        big = std::abs(v(i, src));
        arg = i;
      }
    }
    double sign = v(arg, src) < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) res.vectors(i, col) = sign * v(i, src);
  }
  return res;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) throw Error("mean: empty vector");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) throw Error("sample_variance: need at least 2 values");
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error("pearson_r: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw Error("pearson_r: need at least 3 samples");
  double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw Error("pearson_r: zero variance");
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double pearson_p(double r, std::size_t n) {
  if (n < 3) throw Error("pearson_p: need at least 3 samples");
  if (std::abs(r) > 1.0) throw Error("pearson_p: |r| > 1");
  double df = static_cast<double>(n - 2);
  if (std::abs(r) >= 1.0) return 0.0;  // perfect correlation limit
  double t = std::abs(r) * std::sqrt(df / (1.0 - r * r));
  double p = 2.0 * t_sf(t, df);
  return std::clamp(p, 0.0, 1.0);
}

namespace {

// Continued fraction for the incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
  constexpr double kEps = 1e-14;
  constexpr double kTiny = 1e-300;
  constexpr int kMaxIter = 300;

  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw Error("ibeta_reg: continued fraction did not converge");
}

}  // namespace

double ibeta_reg(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw Error("ibeta_reg: parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double lnfront = a * std::log(x) + b * std::log1p(-x) -
                   (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  double front = std::exp(lnfront);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double t_sf(double t, double df) {
  if (df <= 0.0) throw Error("t_sf: degrees of freedom must be positive");
  if (t == 0.0) return 0.5;
  if (t < 0.0) return 1.0 - t_sf(-t, df);
  double x = df / (df + t * t);
  return 0.5 * ibeta_reg(0.5 * df, 0.5, x);
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), state_(mix64(seed ^ mix64(stream + kGolden))) {}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::gaussian() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
  if (bound == 0) throw Error("next_below: zero bound");
  return next_u64() % bound;
}

RngStream split_rng(const RngStream& parent, std::uint64_t index) {
  std::uint64_t child_seed =
      mix64(parent.seed() + kGolden * (parent.stream() + 0x632BE59BD9B4E019ull));
  return RngStream(child_seed, index);
}

}  // namespace cvforge::numerics
