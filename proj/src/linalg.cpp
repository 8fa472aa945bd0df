// SPDX-License-Identifier: Apache-2.0
#include "rnngen/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rnngen/errors.hpp"

namespace rnngen {

namespace {

constexpr int kMaxPowerIterations = 10000;
constexpr double kUnitBaseTolerance = 1e-12;
const double kLogOverflowThreshold = std::log(1e300);

void require_finite(const Matrix& m, const char* op) {
  if (!m.all_finite()) {
    throw InvalidInput(std::string(op) + ": matrix has non-finite entries");
  }
}

// Rayleigh quotient ‖Mv‖² of unit v, plus the next normalized iterate MᵀMv.
double power_step(const Matrix& m, Vector& v) {
  Vector mv = matvec(m, v);
  const double rq = dot(mv, mv);
  Vector next = matvec_transposed(m, mv);
  const double n = norm2(next);
  if (n > 0.0) {
    for (double& x : next) x /= n;
    v = std::move(next);
  }
  return rq;
}

double power_iteration(const Matrix& m, Vector v, double tol) {
  double prev = power_step(m, v);
  for (int it = 1; it < kMaxPowerIterations; ++it) {
    const double rq = power_step(m, v);
    if (std::abs(rq - prev) <= tol * rq) return rq;
    prev = rq;
  }
  return prev;
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols) {
    throw InvalidInput("Matrix: expected " + std::to_string(rows * cols) +
                       " entries, got " + std::to_string(data_.size()));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw InvalidInput("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
  if (cols_ != rhs.rows_) throw InvalidInput("Matrix product: inner dimension mismatch");
  Matrix out(rows_, rhs.cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(r, k);
      if (a == 0.0) continue;
      for (std::size_t c = 0; c < rhs.cols_; ++c) out(r, c) += a * rhs(k, c);
    }
  }
  return out;
}

Matrix Matrix::operator+(const Matrix& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_) throw InvalidInput("Matrix sum: shape mismatch");
  Matrix out = *this;
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] += rhs.data_[i];
  return out;
}

Matrix Matrix::operator-(const Matrix& rhs) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_) throw InvalidInput("Matrix difference: shape mismatch");
  Matrix out = *this;
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] -= rhs.data_[i];
  return out;
}

Matrix Matrix::operator*(double s) const {
  Matrix out = *this;
  out *= s;
  return out;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix Matrix::columns(std::size_t first, std::size_t count) const {
  if (first + count > cols_) throw InvalidInput("Matrix::columns: range out of bounds");
  Matrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
  return out;
}

Vector matvec(const Matrix& m, std::span<const double> x) {
  if (x.size() != m.cols()) {
    throw InvalidInput("matvec: expected vector of length " + std::to_string(m.cols()) +
                       ", got " + std::to_string(x.size()));
  }
  Vector y(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) y[r] = dot(m.row(r), x);
  return y;
}

Vector matvec_transposed(const Matrix& m, std::span<const double> x) {
  if (x.size() != m.rows()) throw InvalidInput("matvec_transposed: length mismatch");
  Vector y(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) axpy(x[r], m.row(r), y);
  return y;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

Vector hadamard(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw InvalidInput("hadamard: length mismatch (" + std::to_string(u.size()) + " vs " +
                       std::to_string(v.size()) + ")");
  }
  Vector out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] * v[i];
  return out;
}

double spectral_norm(const Matrix& m, double tol) {
  require_finite(m, "spectral_norm");
  if (!(tol > 0.0 && tol <= 1e-3)) throw InvalidInput("spectral_norm: tol must lie in (0, 1e-3]");
  if (m.empty()) return 0.0;

  const double n = static_cast<double>(m.cols());
  double rq = power_iteration(m, Vector(m.cols(), 1.0 / std::sqrt(n)), tol);

  // The all-ones start can be (numerically) orthogonal to the top right
  // singular vector. The largest column norm is a certified lower bound on
  // σ_max, so falling below it means we converged to a lower singular value.
  std::size_t best_col = 0;
  double best_col_sq = 0.0;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) s += m(r, c) * m(r, c);
    if (s > best_col_sq) {
      best_col_sq = s;
      best_col = c;
    }
  }
  if (rq < best_col_sq * (1.0 - 1e-12)) {
    Vector e(m.cols(), 0.0);
    e[best_col] = 1.0;
    rq = std::max(rq, power_iteration(m, std::move(e), tol));
  }
  return std::sqrt(rq);
}

double frobenius_norm(const Matrix& m) {
  require_finite(m, "frobenius_norm");
  return norm2(m.data());
}

double two_one_norm(const Matrix& m) {
  require_finite(m, "two_one_norm");
  double total = 0.0;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) s += m(r, c) * m(r, c);
    total += std::sqrt(s);
  }
  return total;
}

GeomRatio geometric_ratio(double base, int steps) {
  if (!(base >= 0.0) || !std::isfinite(base)) {
    throw InvalidInput("geometric_ratio: base must be finite and non-negative");
  }
  if (steps < 1) throw InvalidInput("geometric_ratio: steps must be >= 1");

  GeomRatio g;
  g.base = base;
  g.steps = steps;
  const double t = static_cast<double>(steps);

  if (std::abs(base - 1.0) <= kUnitBaseTolerance) {
    g.value = t;
    g.log_value = std::log(t);
    return g;
  }
  if (base == 0.0) {
    g.value = 1.0;
    g.log_value = 0.0;
    return g;
  }

  const double log_base = std::log(base);
  const double delta = base - 1.0;
  if (base < 1.0) {
    // (1 - base^t)/(1 - base), bounded by 1/(1 - base).
    g.value = -std::expm1(t * std::log1p(delta)) / -delta;
    g.log_value = std::log(g.value);
    return g;
  }

  const double log_power = t * log_base;  // log(base^t)
  if (log_power > kLogOverflowThreshold) {
    // log(base^t - 1) = t·log(base) + log1p(-base^-t)
    g.log_value = log_power + std::log1p(-std::exp(-log_power)) - std::log(delta);
    g.computed_in_log_domain = true;
    g.value = g.log_value < std::log(std::numeric_limits<double>::max())
                  ? std::exp(g.log_value)
                  : std::numeric_limits<double>::infinity();
    return g;
  }
  g.value = std::expm1(t * std::log1p(delta)) / delta;
  g.log_value = std::log(g.value);
  return g;
}

}  // namespace rnngen
