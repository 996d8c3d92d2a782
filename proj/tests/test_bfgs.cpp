#include <gtest/gtest.h>

#include <cmath>

#include "bfgs.hpp"
#include "rng.hpp"
#include "strategies.hpp"
#include "support/oracles.hpp"

using namespace cwss;

namespace {

DenseMatrix spd(Rng& rng, std::size_t n) {
  std::normal_distribution<double> nd;
  DenseMatrix a(n, n);
  for (auto& v : a.flat()) v = nd(rng);
  DenseMatrix g = gram(a);
  for (std::size_t i = 0; i < n; ++i) g(i, i) += 0.5;
  return g;
}

ObjectiveProblem diag_quadratic() {
  // f = ½xᵀdiag(1, 10)x as least squares with A = diag(1, √10), b = 0.
  return make_least_squares(DenseMatrix{{1.0, 0.0}, {0.0, std::sqrt(10.0)}}, DenseVector{0.0, 0.0});
}

}  // namespace

TEST(CwssMatrix, RejectsNonPositiveEntries) {
  EXPECT_THROW(CwssMatrix(DenseVector{1.0, 0.0}), Error);
  EXPECT_THROW(CwssMatrix(DenseVector{1.0, NAN}), Error);
  const CwssMatrix p(DenseVector{0.5, 2.0});
  EXPECT_DOUBLE_EQ(p.max_entry(), 2.0);
  EXPECT_DOUBLE_EQ(p.min_entry(), 0.5);
  EXPECT_DOUBLE_EQ(p.deviation_from_identity(), std::sqrt(0.25 + 1.0));
}

TEST(InverseUpdate, FixedPointWhenStepEqualsGradientChange) {
  const DenseVector s{0.3, -1.2, 2.0};
  const InverseUpdate up = update_inverse_hessian(DenseMatrix::identity(3), s, s);
  EXPECT_FALSE(up.skipped);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(up.h_inv(i, j), i == j ? 1.0 : 0.0, 1e-15);
}

TEST(InverseUpdate, MatchesExplicitProductAndSecant) {
  Rng rng = make_rng(1, "test/bfgs-update");
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 6;
    const DenseMatrix h = spd(rng, n);
    const DenseVector s = gaussian_vector(rng, n);
    // y = B s for an SPD B guarantees curvature.
    const DenseVector y = matvec(spd(rng, n), s);
    const InverseUpdate up = update_inverse_hessian(h, s, y);
    ASSERT_FALSE(up.skipped);
    oracle::Mat ho = oracle::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) ho[i][j] = h(i, j);
    const auto ref = oracle::bfgs_inverse_update(ho, s.values(), y.values());
    double scale = 0.0;
    for (const auto& r : ref)
      for (double v : r) scale = std::max(scale, std::fabs(v));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(up.h_inv(i, j), ref[i][j], 1e-11 * scale);
    EXPECT_LE(norm2(matvec(up.h_inv, y) - s), 1e-10 * norm2(s));
    EXPECT_TRUE(cholesky_probe(up.h_inv));
  }
}

TEST(InverseUpdate, SkipsOnNegativeCurvature) {
  const DenseMatrix h = DenseMatrix::identity(2);
  const InverseUpdate up = update_inverse_hessian(h, DenseVector{1, 0}, DenseVector{-1, 0});
  EXPECT_TRUE(up.skipped);
  EXPECT_EQ(up.h_inv, h);
  // Orthogonal s and y: yᵀs = 0 is below the relative threshold.
  EXPECT_TRUE(update_inverse_hessian(h, DenseVector{1, 0}, DenseVector{0, 1}).skipped);
}

TEST(Bfgs, InitStateAtOrigin) {
  const auto p = gen_least_squares(5, 4, 2);
  const BfgsState s = init_state(p, DenseVector(4));
  EXPECT_EQ(s.k, 0);
  EXPECT_EQ(s.h_inv, DenseMatrix::identity(4));
  const auto& pl = std::get<LeastSquaresPayload>(p.payload());
  const DenseVector ref = matvec_transposed(pl.a, matvec(pl.a, DenseVector(4)) - pl.b);
  EXPECT_EQ(s.grad, ref);
}

TEST(Bfgs, InitStateRejectsNonFiniteStart) {
  const auto p = gen_least_squares(3, 2, 1);
  EXPECT_THROW(init_state(p, DenseVector{NAN, 0.0}), Error);
}

TEST(Bfgs, IdentityStepWithExactInverseHessianSolvesQuadraticInOneIteration) {
  const auto p = diag_quadratic();
  BfgsState start = init_state(p, DenseVector{1.0, 1.0});
  start.h_inv = DenseMatrix::diagonal(DenseVector{1.0, 0.1});
  FixedStrategy one(1.0);
  const RunResult r = run(p, start, one, StopCriteria{1e-10, 50});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.final_state.k, 1);
  EXPECT_EQ(r.trace.size(), 2u);
  EXPECT_EQ(r.trace[0].k, 0);
}

TEST(Bfgs, ScalarStepMatchesReferenceTrajectory) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = gen_least_squares(15, 10, 100 + seed);
    oracle::ScalarBfgs ref;
    ref.alpha = 0.5;
    ref.grad = [&](const oracle::Vec& x) { return p.grad(DenseVector(x)).values(); };
    Rng rng = make_rng(seed, "test/x0");
    const DenseVector x0 = unit_gaussian(rng, 10);
    const auto traj = ref.trajectory(x0.values(), 20);
    BfgsState s = init_state(p, x0);
    for (int k = 1; k <= 20; ++k) {
      s = apply_step(s, CwssMatrix::scalar(10, 0.5), p);
      for (std::size_t i = 0; i < 10; ++i)
        EXPECT_NEAR(s.x[i], traj[k][i], 1e-10 * std::max(1.0, std::fabs(traj[k][i])));
    }
  }
}

TEST(Bfgs, ResymmetrizesPeriodically) {
  const auto p = gen_logsumexp(20, 5, 3);
  LineSearchStrategy ls;
  Rng rng = make_rng(3, "test/x0");
  BfgsState s = init_state(p, unit_gaussian(rng, 5));
  for (int k = 0; k < kResymmetrizePeriod && norm2(s.grad) > 1e-12; ++k) {
    const DenseVector d = search_direction(s);
    s = apply_step(s, ls.propose(p, s, d), d, p);
  }
  if (s.k == kResymmetrizePeriod) EXPECT_EQ(max_asymmetry(s.h_inv), 0.0);
}

TEST(Bfgs, RunStopsAtToleranceAndRecordsTrace) {
  const auto p = gen_least_squares(20, 10, 7);
  LineSearchStrategy ls;
  Rng rng = make_rng(7, "test/x0");
  const RunResult r = run(p, unit_gaussian(rng, 10), ls, StopCriteria{1e-10, 500});
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.trace.back().grad_norm, 1e-10);
  for (std::size_t k = 0; k < r.trace.size(); ++k) EXPECT_EQ(r.trace[k].k, static_cast<int>(k));
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LE(r.trace[k].f, r.trace[k - 1].f);
}

TEST(Bfgs, MaxItersBoundsTheRun) {
  const auto p = gen_least_squares(20, 10, 8);
  FixedStrategy tiny(1e-3);
  const RunResult r = run(p, DenseVector(10, 1.0), tiny, StopCriteria{1e-10, 7});
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.final_state.k, 7);
}

TEST(Bfgs, DivergenceAbortsWithPartialTrace) {
  const auto p = gen_logsumexp(10, 3, 1);
  FixedStrategy huge(1e300);
  try {
    run(p, DenseVector{1.0, 1.0, 1.0}, huge, StopCriteria{1e-10, 50});
    FAIL() << "expected abort";
  } catch (const RunAborted& e) {
    EXPECT_GE(e.trace().size(), 1u);
  }
}

TEST(TraceCsv, RoundTripsByteIdentical) {
  const auto p = gen_least_squares(8, 6, 9);
  LineSearchStrategy ls;
  const RunResult r = run(p, DenseVector(6, 0.5), ls, StopCriteria{1e-10, 500});
  const std::string csv = trace_to_csv(r.trace);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,f,grad_norm,p_dev_frob,skipped,elapsed_ms");
  EXPECT_EQ(trace_to_csv(trace_from_csv(csv)), csv);
  std::vector<ConvergenceRecord> tiny{{0, 4.9406564584124654e-324, 0.0, 0.0, true, 0.0}};
  EXPECT_EQ(trace_to_csv(trace_from_csv(trace_to_csv(tiny))), trace_to_csv(tiny));
}
