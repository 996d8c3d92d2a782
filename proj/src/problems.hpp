#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "numerics.hpp"

namespace cwss {

enum class ProblemKind { least_squares, logistic, logsumexp };

std::string_view to_string(ProblemKind kind);
ProblemKind parse_problem_kind(std::string_view name);

/// f(x) = ½‖Ax − b‖², A is m×n.
struct LeastSquaresPayload {
  DenseMatrix a;
  DenseVector b;
};

/// Mean negative log-likelihood of a linear logistic model plus ρ‖x‖².
struct LogisticPayload {
  DenseMatrix features;  // m×n, one sample per row
  std::vector<int> labels;
  double rho = 1e-2;
};

/// f(x) = log Σᵢ exp(aᵢᵀx − bᵢ), aᵢ are the rows of an m×d matrix.
struct LogSumExpPayload {
  DenseMatrix a;
  DenseVector b;
};

using ProblemPayload = std::variant<LeastSquaresPayload, LogisticPayload, LogSumExpPayload>;

/// A smooth convex objective with analytic metadata. Immutable once built.
class ObjectiveProblem {
 public:
  ObjectiveProblem(ProblemPayload payload, std::uint64_t seed, double lipschitz,
                   std::optional<DenseVector> known_optimum,
                   std::optional<double> known_optimal_value);

  ProblemKind kind() const noexcept;
  std::size_t dimension() const noexcept { return n_; }
  /// Number of rows (samples or terms) of the payload matrix.
  std::size_t rows() const noexcept { return m_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double lipschitz() const noexcept { return lipschitz_; }
  const std::optional<DenseVector>& known_optimum() const noexcept { return known_optimum_; }
  std::optional<double> known_optimal_value() const noexcept { return known_optimal_value_; }
  const ProblemPayload& payload() const noexcept { return payload_; }

  double eval(const DenseVector& x) const;
  DenseVector grad(const DenseVector& x) const;
  std::pair<double, DenseVector> eval_grad(const DenseVector& x) const;

 private:
  void check_dim(const DenseVector& x) const;

  ProblemPayload payload_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::uint64_t seed_ = 0;
  double lipschitz_ = 0.0;
  std::optional<DenseVector> known_optimum_;
  std::optional<double> known_optimal_value_;
};

/// Number of zeroed entries in a sparsified m×n least-squares matrix: ⌈0.9·m·n⌉.
std::size_t sparsified_zero_count(std::size_t m, std::size_t n);

/// Builds a least-squares problem from explicit data (no sparsification).
/// Computes L = λ_max(AᵀA) and the least-norm minimizer.
ObjectiveProblem make_least_squares(DenseMatrix a, DenseVector b, std::uint64_t seed = 0);

ObjectiveProblem gen_least_squares(std::size_t m, std::size_t n, std::uint64_t seed);
ObjectiveProblem gen_logistic(std::size_t m, std::size_t n, double rho, std::uint64_t seed);
ObjectiveProblem gen_logsumexp(std::size_t m, std::size_t d, std::uint64_t seed);

/// Builds a log-sum-exp problem from raw (â, b), recentring â so that x = 0 is optimal.
ObjectiveProblem make_logsumexp(DenseMatrix a_hat, DenseVector b, std::uint64_t seed = 0);

/// Least-norm solution of min ½‖Ax − b‖² by CGLS started at zero. Returns
/// nullopt when the normal-equation residual does not reach rel_tol.
std::optional<DenseVector> least_norm_solution(const DenseMatrix& a, const DenseVector& b,
                                               double rel_tol = 1e-12);

// JSON serialization, floats as hex strings. Throws Error(schema) on bad input.
std::string problem_to_json(const ObjectiveProblem& p);
ObjectiveProblem problem_from_json(std::string_view text);
void save_problem(const ObjectiveProblem& p, const std::string& path);
ObjectiveProblem load_problem(const std::string& path);

}  // namespace cwss
