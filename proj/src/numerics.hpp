#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "error.hpp"

namespace cwss {

/// Fixed-length vector of doubles. Length is set at construction.
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t n, double value = 0.0) : data_(n, value) {}
  DenseVector(std::initializer_list<double> values) : data_(values) {}
  explicit DenseVector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool operator==(const DenseVector&) const = default;

 private:
  std::vector<double> data_;
};

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(const DenseVector& diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> flat() const noexcept { return data_; }
  std::span<double> flat() noexcept { return data_; }

  DenseMatrix transposed() const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Thrown by iterative routines that ran out of iterations. Carries the best
/// estimate reached.
class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, double estimate)
      : Error(ErrorKind::not_converged, what), estimate_(estimate) {}
  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

// Vector arithmetic. Sizes are checked; mismatches throw dimension_mismatch.
double dot(const DenseVector& a, const DenseVector& b);
double norm2(const DenseVector& v);
double max_abs(const DenseVector& v);
bool all_finite(const DenseVector& v);
bool all_finite(const DenseMatrix& m);
DenseVector operator+(const DenseVector& a, const DenseVector& b);
DenseVector operator-(const DenseVector& a, const DenseVector& b);
DenseVector operator*(double s, const DenseVector& v);
DenseVector hadamard(const DenseVector& a, const DenseVector& b);

DenseVector matvec(const DenseMatrix& m, const DenseVector& v);
/// Mᵀv without forming the transpose.
DenseVector matvec_transposed(const DenseMatrix& m, const DenseVector& v);
/// MᵀM.
DenseMatrix gram(const DenseMatrix& m);

DenseMatrix symmetrized(const DenseMatrix& m);
double max_asymmetry(const DenseMatrix& m);

/// Attempts a Cholesky factorization; true iff every pivot is positive.
bool cholesky_probe(const DenseMatrix& m);

struct SpectralNormOptions {
  double tol = 1e-10;
  int max_iter = 10'000;
};

/// Largest absolute eigenvalue of (M + Mᵀ)/2 by power iteration on its square.
/// Restarts once from a second start vector if the iterate collapses.
double spectral_norm(const DenseMatrix& m, SpectralNormOptions opts = {});

using ScalarFunction = std::function<double(const DenseVector&)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
DenseVector finite_diff_grad(const ScalarFunction& f, const DenseVector& x, double h);

}  // namespace cwss
