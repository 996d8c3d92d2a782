#include <gtest/gtest.h>

#include <cmath>

#include "problems.hpp"
#include "rng.hpp"
#include "support/oracles.hpp"

using namespace cwss;

namespace {

double rel_err(const DenseVector& g, const std::vector<double>& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += (g[i] - ref[i]) * (g[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-8);
}

void expect_gradient_matches(const ObjectiveProblem& p, std::uint64_t seed) {
  Rng rng = make_rng(seed, "test/points");
  for (int t = 0; t < 5; ++t) {
    const DenseVector x = unit_gaussian(rng, p.dimension());
    const auto fd = oracle::finite_diff(
        [&](const oracle::Vec& z) { return p.eval(DenseVector(z)); }, x.values(), 1e-6);
    EXPECT_LT(rel_err(p.grad(x), fd), 1e-6);
  }
}

}  // namespace

TEST(LeastSquares, ObjectiveAndGradientMatchDirectFormula) {
  const ObjectiveProblem p = make_least_squares(DenseMatrix{{1, 2}, {3, 4}, {0, 1}},
                                                DenseVector{1, 0, 2});
  const DenseVector x{1, 1};
  // r = Ax − b = (2, 7, −1)
  EXPECT_DOUBLE_EQ(p.eval(x), 0.5 * (4 + 49 + 1));
  const DenseVector g = p.grad(x);  // Aᵀr
  EXPECT_DOUBLE_EQ(g[0], 2 + 21);
  EXPECT_DOUBLE_EQ(g[1], 4 + 28 - 1);
}

TEST(LeastSquares, GeneratorZeroesNinetyPercent) {
  EXPECT_EQ(sparsified_zero_count(60, 120), 6480u);
  EXPECT_EQ(sparsified_zero_count(3, 3), 9u);  // ⌈8.1⌉
  EXPECT_EQ(sparsified_zero_count(1, 1), 1u);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = gen_least_squares(7, 11, s);
    const auto& a = std::get<LeastSquaresPayload>(p.payload()).a;
    std::size_t zeros = 0;
    for (double v : a.flat()) zeros += v == 0.0;
    EXPECT_EQ(zeros, static_cast<std::size_t>(std::ceil(0.9 * 7 * 11)));
  }
}

TEST(LeastSquares, LipschitzIsLargestEigenvalueOfGram) {
  const auto p = gen_least_squares(12, 8, 3);
  const auto& a = std::get<LeastSquaresPayload>(p.payload()).a;
  oracle::Mat ao = oracle::zeros(12, 8);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 8; ++j) ao[i][j] = a(i, j);
  const auto ev = oracle::jacobi_eigenvalues(oracle::matmul(oracle::transpose(ao), ao));
  EXPECT_NEAR(p.lipschitz(), ev.back(), 1e-8 * ev.back());
}

TEST(LeastSquares, RankDeficientOptimumSolvesRestrictedNormalEquations) {
  // Only one nonzero entry survives in a 4×3 matrix.
  DenseMatrix a(4, 3);
  a(2, 1) = 2.0;
  const DenseVector b{1, 2, 3, 4};
  const auto p = make_least_squares(a, b);
  ASSERT_TRUE(p.known_optimum());
  // Restricted to column 1: 4 x = 2·3 → x = 1.5; the other coordinates are 0.
  const DenseVector& x = *p.known_optimum();
  EXPECT_NEAR(x[0], 0.0, 1e-12);
  EXPECT_NEAR(x[1], 1.5, 1e-12);
  EXPECT_NEAR(x[2], 0.0, 1e-12);
  EXPECT_NEAR(*p.known_optimal_value(), 0.5 * (1 + 4 + 0 + 16), 1e-12);
}

TEST(LeastSquares, FullRankOptimumMatchesGaussianElimination) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    Rng rng = make_rng(s, "test/ls-full");
    std::normal_distribution<double> n;
    DenseMatrix a(10, 4);
    for (auto& v : a.flat()) v = n(rng);
    const DenseVector b = gaussian_vector(rng, 10);
    const auto p = make_least_squares(a, b);
    oracle::Mat ao = oracle::zeros(10, 4);
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = 0; j < 4; ++j) ao[i][j] = a(i, j);
    const auto at = oracle::transpose(ao);
    oracle::Vec x;
    ASSERT_TRUE(oracle::solve(oracle::matmul(at, ao), oracle::matvec(at, b.values()), x));
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR((*p.known_optimum())[j], x[j], 1e-10);
  }
}

TEST(LeastSquares, GradientMatchesFiniteDifferences) {
  expect_gradient_matches(gen_least_squares(20, 30, 5), 5);
}

TEST(Logistic, LabelsAreBinaryAndGradientMatches) {
  const auto p = gen_logistic(40, 10, 1e-2, 9);
  for (int l : std::get<LogisticPayload>(p.payload()).labels) EXPECT_TRUE(l == 0 || l == 1);
  expect_gradient_matches(p, 9);
}

TEST(Logistic, StableAtExtremeMargins) {
  const auto p = gen_logistic(10, 3, 1e-2, 2);
  const DenseVector far{1e3, -1e3, 1e3};
  auto [f, g] = p.eval_grad(far);
  EXPECT_TRUE(std::isfinite(f));
  EXPECT_TRUE(all_finite(g));
}

TEST(Logistic, LipschitzBoundsTheHessian) {
  const auto p = gen_logistic(30, 6, 1e-2, 4);
  Rng rng = make_rng(4, "test/hessian");
  for (int t = 0; t < 5; ++t) {
    const DenseVector x = gaussian_vector(rng, 6);
    // Hessian by differencing the analytic gradient.
    oracle::Mat h = oracle::zeros(6, 6);
    for (std::size_t j = 0; j < 6; ++j) {
      DenseVector xp = x, xm = x;
      xp[j] += 1e-5;
      xm[j] -= 1e-5;
      const DenseVector gp = p.grad(xp), gm = p.grad(xm);
      for (std::size_t i = 0; i < 6; ++i) h[i][j] = (gp[i] - gm[i]) / 2e-5;
    }
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < i; ++j) h[i][j] = h[j][i] = 0.5 * (h[i][j] + h[j][i]);
    EXPECT_LE(oracle::jacobi_eigenvalues(h).back(), p.lipschitz() * (1 + 1e-6));
  }
}

TEST(LogSumExp, OptimumIsOrigin) {
  const auto p = gen_logsumexp(30, 8, 11);
  ASSERT_TRUE(p.known_optimum());
  EXPECT_LT(norm2(p.grad(DenseVector(8))), 1e-12);
  EXPECT_DOUBLE_EQ(*p.known_optimal_value(), p.eval(DenseVector(8)));
  expect_gradient_matches(p, 11);
}

TEST(LogSumExp, StableForLargeArguments) {
  const auto p = gen_logsumexp(5, 2, 1);
  auto [f, g] = p.eval_grad(DenseVector{1e4, -1e4});
  EXPECT_TRUE(std::isfinite(f));
  EXPECT_TRUE(all_finite(g));
}

TEST(Problems, ValidationRejectsBadInput) {
  EXPECT_THROW(make_least_squares(DenseMatrix(2, 2), DenseVector(3)), Error);
  EXPECT_THROW(gen_logistic(3, 3, 0.0, 1), Error);
  EXPECT_THROW(gen_least_squares(0, 3, 1), Error);
  const auto p = gen_least_squares(3, 2, 1);
  EXPECT_THROW(p.eval(DenseVector(3)), Error);
}

TEST(ProblemJson, RoundTripIsByteIdentical) {
  for (const auto& p : {gen_least_squares(4, 6, 1), gen_logistic(5, 3, 0.1, 2),
                        gen_logsumexp(6, 3, 3)}) {
    const std::string text = problem_to_json(p);
    const ObjectiveProblem q = problem_from_json(text);
    EXPECT_EQ(problem_to_json(q), text);
    EXPECT_EQ(q.kind(), p.kind());
    const DenseVector x(p.dimension(), 0.3);
    EXPECT_EQ(q.eval(x), p.eval(x));
  }
}

TEST(ProblemJson, CorruptionIsASchemaError) {
  std::string text = problem_to_json(gen_least_squares(3, 3, 1));
  const auto pos = text.find("0x");
  text[pos + 1] = 'q';
  try {
    problem_from_json(text);
    FAIL() << "expected a schema error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema);
  }
  EXPECT_THROW(problem_from_json("{}"), Error);
  EXPECT_THROW(problem_from_json("not json"), Error);
}
