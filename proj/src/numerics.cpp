#include "numerics.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <string>

namespace cwss {

namespace {

void check_same(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    fail(ErrorKind::dimension_mismatch,
         std::string(op) + ": length " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  check_same(data_.size(), rows * cols, "DenseMatrix");
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    check_same(r.size(), cols_, "DenseMatrix row");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(const DenseVector& diag) {
  DenseMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double dot(const DenseVector& a, const DenseVector& b) {
  check_same(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const DenseVector& v) {
  // Scaled to avoid overflow on large entries.
  const double scale = max_abs(v);
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double x : v) {
    const double r = x / scale;
    s += r * r;
  }
  return scale * std::sqrt(s);
}

double max_abs(const DenseVector& v) {
  double m = 0.0;
  for (double x : v) {
    if (std::isnan(x)) return x;
    m = std::max(m, std::abs(x));
  }
  return m;
}

bool all_finite(const DenseVector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_finite(const DenseMatrix& m) {
  const auto f = m.flat();
  return std::all_of(f.begin(), f.end(), [](double x) { return std::isfinite(x); });
}

DenseVector operator+(const DenseVector& a, const DenseVector& b) {
  check_same(a.size(), b.size(), "add");
  DenseVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

DenseVector operator-(const DenseVector& a, const DenseVector& b) {
  check_same(a.size(), b.size(), "sub");
  DenseVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

DenseVector operator*(double s, const DenseVector& v) {
  DenseVector r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = s * v[i];
  return r;
}

DenseVector hadamard(const DenseVector& a, const DenseVector& b) {
  check_same(a.size(), b.size(), "hadamard");
  DenseVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
  return r;
}

DenseVector matvec(const DenseMatrix& m, const DenseVector& v) {
  check_same(m.cols(), v.size(), "matvec");
  DenseVector r(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * v[j];
    r[i] = s;
  }
  return r;
}

DenseVector matvec_transposed(const DenseMatrix& m, const DenseVector& v) {
  check_same(m.rows(), v.size(), "matvec_transposed");
  DenseVector r(m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    const auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) r[j] += row[j] * vi;
  }
  return r;
}

DenseMatrix gram(const DenseMatrix& m) {
  const std::size_t n = m.cols();
  DenseMatrix g(n, n);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      if (row[i] == 0.0) continue;
      for (std::size_t j = i; j < n; ++j) g(i, j) += row[i] * row[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

DenseMatrix symmetrized(const DenseMatrix& m) {
  if (!m.square()) fail(ErrorKind::dimension_mismatch, "symmetrized: matrix not square");
  DenseMatrix s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

double max_asymmetry(const DenseMatrix& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
  return worst;
}

bool cholesky_probe(const DenseMatrix& m) {
  if (!m.square()) return false;
  const std::size_t n = m.rows();
  std::vector<double> l(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    l[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = s / ljj;
    }
  }
  return true;
}

namespace {

// Power iteration on S² where S is symmetric. Returns the Rayleigh estimate
// of λ_max(S²) or a negative value if the iterate collapsed to zero.
double power_square(const DenseMatrix& s, DenseVector v, const SpectralNormOptions& opts,
                    double& best, bool& converged) {
  converged = false;
  double nv = norm2(v);
  v = (1.0 / nv) * v;
  double lambda = 0.0, prev_delta = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    DenseVector w = matvec(s, v);
    const double sw = dot(w, w);  // vᵀS²v
    DenseVector u = matvec(s, w);
    const double nu = norm2(u);
    if (nu == 0.0) return -1.0;
    best = std::max(best, sw);
    // Stop on the extrapolated remaining error, not the last change: with a
    // contraction ratio r the Rayleigh estimate still has ~Δ·r/(1−r) to go.
    if (it > 0) {
      const double delta = std::abs(sw - lambda);
      if (delta <= opts.tol * sw) {
        const double r = prev_delta > 0.0 ? delta / prev_delta : 1.0;
        const bool at_rounding = delta <= 64.0 * std::numeric_limits<double>::epsilon() * sw;
        if (at_rounding || (r < 1.0 && delta * r / (1.0 - r) <= opts.tol * sw)) {
          converged = true;
          return sw;
        }
      }
      prev_delta = delta;
    }
    lambda = sw;
    v = (1.0 / nu) * u;
  }
  return lambda;
}

}  // namespace

double spectral_norm(const DenseMatrix& m, SpectralNormOptions opts) {
  if (!m.square()) fail(ErrorKind::dimension_mismatch, "spectral_norm: matrix not square");
  const std::size_t n = m.rows();
  if (n == 0) return 0.0;
  const DenseMatrix s = symmetrized(m);
  if (std::all_of(s.flat().begin(), s.flat().end(), [](double x) { return x == 0.0; }))
    return 0.0;

  // Two deterministic start vectors: a dense quasi-random one and, on collapse
  // or stagnation, a shifted alternative.
  DenseVector v0(n), v1(n);
  for (std::size_t i = 0; i < n; ++i) {
    v0[i] = 1.0 + 0.5 * std::sin(1.0 + 2.0 * static_cast<double>(i));
    v1[i] = std::cos(0.7 + 3.1 * static_cast<double>(i)) + (i % 2 == 0 ? 0.3 : -0.2);
  }

  double best = 0.0;
  bool converged = false;
  double lam = power_square(s, v0, opts, best, converged);
  if (!converged) {
    double best2 = 0.0;
    const double lam2 = power_square(s, v1, opts, best2, converged);
    best = std::max(best, best2);
    if (converged) lam = std::max(lam, lam2);
  }
  if (!converged) {
    throw NotConverged("spectral_norm: power iteration did not converge in " +
                           std::to_string(opts.max_iter) + " iterations",
                       std::sqrt(best));
  }
  return std::sqrt(lam);
}

DenseVector finite_diff_grad(const ScalarFunction& f, const DenseVector& x, double h) {
  require(h > 0.0, ErrorKind::invalid_argument, "finite_diff_grad: h must be positive");
  DenseVector g(x.size());
  DenseVector probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    probe[i] = xi + h;
    const double fp = f(probe);
    probe[i] = xi - h;
    const double fm = f(probe);
    probe[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      fail(ErrorKind::numeric,
           "finite_diff_grad: non-finite evaluation at coordinate " + std::to_string(i));
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace cwss
