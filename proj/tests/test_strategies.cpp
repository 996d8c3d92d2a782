#include <gtest/gtest.h>

#include <cmath>

#include "rng.hpp"
#include "strategies.hpp"
#include "support/oracles.hpp"

using namespace cwss;

namespace {

BfgsState random_state(const ObjectiveProblem& p, std::uint64_t seed) {
  Rng rng = make_rng(seed, "test/state");
  return init_state(p, unit_gaussian(rng, p.dimension()));
}

}  // namespace

TEST(FixedStrategy, EmitsScaledIdentity) {
  const auto p = gen_least_squares(4, 3, 1);
  const BfgsState s = init_state(p, DenseVector(3));
  FixedStrategy f(0.25);
  const CwssMatrix m = f.propose(p, s, search_direction(s));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(m[i], 0.25);
  EXPECT_EQ(f.name(), "fixed:0.25");
  EXPECT_THROW(FixedStrategy(0.0), Error);
}

TEST(Armijo, AgreesWithScriptedScan) {
  const LineSearchConfig cfg;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto p = seed % 2 ? gen_least_squares(20, 30, seed) : gen_logsumexp(30, 10, seed);
    const BfgsState s = random_state(p, seed);
    const DenseVector d = search_direction(s);
    auto phi = [&](double a) {
      DenseVector t(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) t[i] = s.x[i] - a * d[i];
      return p.eval(t);
    };
    const double ref = oracle::armijo_scan(phi, s.f, dot(s.grad, d), cfg.alpha0, cfg.shrink,
                                           cfg.c1, cfg.max_backtracks);
    const LineSearchResult r = armijo_backtrack(p, s, d, cfg);
    EXPECT_EQ(r.alpha, ref);
    EXPECT_LE(r.f_trial, s.f - cfg.c1 * r.alpha * dot(s.grad, d));
  }
}

TEST(Armijo, UnitStepAcceptedOnExactNewtonDirection) {
  const auto p = make_least_squares(DenseMatrix{{2.0, 0.0}, {0.0, 1.0}}, DenseVector{1.0, 1.0});
  BfgsState s = init_state(p, DenseVector{0.0, 0.0});
  s.h_inv = DenseMatrix::diagonal(DenseVector{0.25, 1.0});
  const LineSearchResult r = armijo_backtrack(p, s, search_direction(s), {});
  EXPECT_EQ(r.alpha, 1.0);
  EXPECT_EQ(r.backtracks, 0);
}

TEST(Armijo, ExhaustionIsAnError) {
  const auto p = gen_least_squares(5, 3, 2);
  const BfgsState s = random_state(p, 2);
  const DenseVector ascent = -1.0 * search_direction(s);
  EXPECT_THROW(armijo_backtrack(p, s, ascent, {1.0, 0.5, 1e-4, 10}), Error);
  EXPECT_THROW(armijo_backtrack(p, s, ascent, {1.0, 1.5, 1e-4, 10}), Error);
}

TEST(Hypergradient, MatchesFiniteDifferences) {
  Rng rng = make_rng(5, "test/hyper");
  std::uniform_real_distribution<double> u(0.1, 1.9);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = seed % 3 == 0   ? gen_least_squares(10, 8, seed)
                   : seed % 3 == 1 ? gen_logistic(20, 8, 1e-2, seed)
                                   : gen_logsumexp(20, 8, seed);
    const BfgsState s = random_state(p, seed);
    const DenseVector d = search_direction(s);
    DenseVector pv(8);
    for (auto& v : pv) v = u(rng);
    const DenseVector hg = hypergradient(p, s.x, d, CwssMatrix(pv));
    const auto fd = oracle::finite_diff(
        [&](const oracle::Vec& q) {
          DenseVector t(8);
          for (std::size_t i = 0; i < 8; ++i) t[i] = s.x[i] - q[i] * d[i];
          return p.eval(t);
        },
        pv.values(), 1e-6);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
      num += (hg[i] - fd[i]) * (hg[i] - fd[i]);
      den += fd[i] * fd[i];
    }
    EXPECT_LT(std::sqrt(num / std::max(den, 1e-30)), 1e-5);
  }
}

TEST(Hypergradient, VanishesAtMinimizerAlongCoordinates) {
  // f = ½‖x‖², x = (1, 2), d = x: P = I lands on the optimum.
  const auto p = make_least_squares(DenseMatrix::identity(2), DenseVector{0.0, 0.0});
  const DenseVector x{1.0, 2.0};
  const DenseVector hg = hypergradient(p, x, x, CwssMatrix::identity(2));
  EXPECT_EQ(hg[0], 0.0);
  EXPECT_EQ(hg[1], 0.0);
}

TEST(Hgd, SmallRateDecreasesMonotonically) {
  const auto p = gen_least_squares(60, 120, 1000);
  const BfgsState s = random_state(p, 0);
  std::vector<double> phi;
  HgdConfig cfg;
  cfg.eta = 1e-4;
  hgd_strategy(p, s, search_direction(s), cfg, &phi);
  ASSERT_EQ(phi.size(), 21u);
  for (std::size_t i = 1; i < phi.size(); ++i) EXPECT_LE(phi[i], phi[i - 1]);
}

TEST(Hgd, ClipKeepsEntriesPositive) {
  const auto p = make_least_squares(DenseMatrix::identity(2), DenseVector{0.0, 0.0});
  BfgsState s = init_state(p, DenseVector{1.0, -1.0});
  // Overshooting direction: every hypergradient entry pushes p down.
  const DenseVector d{3.0, -3.0};
  HgdConfig cfg{1.0, 5, 1e-8};
  const CwssMatrix m = hgd_strategy(p, s, d, cfg);
  EXPECT_GT(m.min_entry(), 0.0);
  EXPECT_GE(m.min_entry(), 1e-8);
}
