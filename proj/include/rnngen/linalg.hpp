// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major matrices and the norm kernels the bound evaluators use.
// Everything here is a pure function of its arguments.
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rnngen {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  bool all_finite() const noexcept;

  Matrix transposed() const;
  Matrix operator*(const Matrix& rhs) const;
  Matrix operator+(const Matrix& rhs) const;
  Matrix operator-(const Matrix& rhs) const;
  Matrix operator*(double s) const;
  Matrix& operator*=(double s);

  /// Column range [first, first + count) as a new matrix.
  Matrix columns(std::size_t first, std::size_t count) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Vector matvec(const Matrix& m, std::span<const double> x);
Vector matvec_transposed(const Matrix& m, std::span<const double> x);
void axpy(double a, std::span<const double> x, std::span<double> y);

double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

/// Entrywise product; throws InvalidInput on length mismatch.
Vector hadamard(std::span<const double> u, std::span<const double> v);

/// Largest singular value by power iteration on MᵀM. The iteration starts
/// from the normalized all-ones vector and stops once successive Rayleigh
/// quotients agree to `tol` relative (at most 10 000 iterations).
double spectral_norm(const Matrix& m, double tol = 1e-12);
double frobenius_norm(const Matrix& m);
/// Sum of column Euclidean norms.
double two_one_norm(const Matrix& m);

/// Accumulated gain (base^steps - 1)/(base - 1), defined as `steps` at base 1.
struct GeomRatio {
  double base = 0.0;
  int steps = 1;
  /// +inf when the ratio does not fit in a double; see log_value.
  double value = 1.0;
  /// Natural log of the ratio. Always populated.
  double log_value = 0.0;
  bool computed_in_log_domain = false;
};

/// |base - 1| <= 1e-12 counts as base 1. Switches to log-domain bookkeeping
/// once base^steps exceeds 1e300.
GeomRatio geometric_ratio(double base, int steps);

}  // namespace rnngen
