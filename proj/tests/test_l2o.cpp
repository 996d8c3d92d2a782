#include <gtest/gtest.h>

#include <cmath>

#include "l2o.hpp"
#include "rng.hpp"

using namespace cwss;

namespace {

double pipeline_loss(const L2OModel& model, const L2ORunState& st, const ObjectiveProblem& p,
                     const BfgsState& s, const DenseVector& d, double lambda) {
  const L2OForward fw = l2o_forward(model, st, s.x, s.grad, d);
  DenseVector xn(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) xn[i] = s.x[i] - fw.p[i] * d[i];
  return meta_loss(p.eval(xn), fw.p, lambda);
}

ObjectiveProblem quadratic3() {
  return make_least_squares(DenseMatrix{{2.0, 0.5, 0.0}, {0.0, 1.0, 0.3}, {0.1, 0.0, 3.0}},
                            DenseVector{1.0, -1.0, 0.5});
}

}  // namespace

TEST(L2OModel, LayoutAndParameterCount) {
  const L2OModel m(20, 20);
  // 4·20·3 + 4·20·20 + 4·20 + 20·20 + 20 + 20 + 1
  EXPECT_EQ(m.parameter_count(), 240u + 1600u + 80u + 400u + 20u + 20u + 1u);
  EXPECT_EQ(m.lstm_w().size(), 240u);
  EXPECT_EQ(m.mlp_w2().size(), 20u);
}

TEST(L2OModel, InitializationIsSeeded) {
  const L2OModel a = L2OModel::initialized(5, 4, 1), b = L2OModel::initialized(5, 4, 1),
                 c = L2OModel::initialized(5, 4, 2);
  EXPECT_TRUE(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
  EXPECT_FALSE(std::equal(a.params().begin(), a.params().end(), c.params().begin()));
  for (double v : a.lstm_u()) EXPECT_LE(std::fabs(v), 1.0 / std::sqrt(5.0));
}

TEST(L2OForward, ZeroOutputLayerGivesIdentity) {
  L2OModel m = L2OModel::initialized(4, 3, 7);
  m.zero_output_layer();
  const auto fw = l2o_forward(m, L2ORunState::zeros(5, 4), DenseVector(5, 1.0),
                              DenseVector(5, 2.0), DenseVector(5, -3.0));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(fw.p[i], 1.0);
}

TEST(L2OForward, OutputsStayStrictlyInsideZeroTwo) {
  Rng rng = make_rng(1, "test/l2o-bound");
  std::normal_distribution<double> n;
  for (int t = 0; t < 200; ++t) {
    L2OModel m = L2OModel::initialized(6, 5, t);
    for (double& v : m.params()) v *= 1.0 + 50.0 * std::fabs(n(rng));  // extreme weights
    const DenseVector x = gaussian_vector(rng, 7, 1e3), g = gaussian_vector(rng, 7, 1e6),
                      d = gaussian_vector(rng, 7, 1e-6);
    const auto fw = l2o_forward(m, L2ORunState::random(7, 6, t), x, g, d);
    for (std::size_t i = 0; i < 7; ++i) {
      EXPECT_GT(fw.p[i], 0.0);
      EXPECT_LT(fw.p[i], 2.0);
    }
  }
}

TEST(L2OBackward, MatchesFiniteDifferencesForEveryParameter) {
  const auto p = quadratic3();
  L2OModel model = L2OModel::initialized(4, 3, 11);
  const L2ORunState st = L2ORunState::random(3, 4, 5);
  const BfgsState s = init_state(p, DenseVector{0.3, -0.2, 0.1});
  const DenseVector d = search_direction(s);
  const double lambda = 0.1;
  const L2OForward fw = l2o_forward(model, st, s.x, s.grad, d);
  DenseVector xn(3);
  for (std::size_t i = 0; i < 3; ++i) xn[i] = s.x[i] - fw.p[i] * d[i];
  const auto grads = l2o_backward(model, fw.tape, d, p.grad(xn), fw.p, lambda);
  ASSERT_EQ(grads.size(), model.parameter_count());
  for (std::size_t j = 0; j < model.parameter_count(); ++j) {
    const double keep = model.params()[j];
    const double h = 1e-6;
    model.params()[j] = keep + h;
    const double fp = pipeline_loss(model, st, p, s, d, lambda);
    model.params()[j] = keep - h;
    const double fm = pipeline_loss(model, st, p, s, d, lambda);
    model.params()[j] = keep;
    const double fd = (fp - fm) / (2 * h);
    EXPECT_NEAR(grads[j], fd, 1e-4 * std::max(std::fabs(fd), 1e-3)) << "parameter " << j;
  }
}

TEST(Adam, FirstStepMovesByLearningRate) {
  MetaConfig cfg;
  cfg.grad_clip = 1e9;
  std::vector<double> params{1.0, -2.0};
  AdamMoments m = AdamMoments::zeros(2);
  adam_step(params, std::vector<double>{0.5, -3.0}, m, cfg);
  // With bias correction the first step is lr·g/(|g| + eps') ≈ lr·sign(g).
  EXPECT_NEAR(params[0], 1.0 - 1e-3, 1e-9);
  EXPECT_NEAR(params[1], -2.0 + 1e-3, 1e-9);
  EXPECT_EQ(m.t, 1);
}

TEST(Adam, ClipsByGlobalNorm) {
  MetaConfig cfg;
  cfg.adam_lr = 1.0;
  std::vector<double> params{0.0, 0.0};
  AdamMoments m = AdamMoments::zeros(2);
  adam_step(params, std::vector<double>{30.0, 40.0}, m, cfg);
  // Clipped to (0.6, 0.8); moments see the clipped gradient.
  EXPECT_NEAR(m.m[0], 0.1 * 0.6, 1e-12);
  EXPECT_NEAR(m.m[1], 0.1 * 0.8, 1e-12);
}

TEST(Checkpoint, RoundTripIsExact) {
  MetaConfig cfg;
  cfg.hd = 3;
  cfg.hm = 2;
  TrainState s = initial_train_state(cfg, 4);
  s.adam.m[0] = 0.125;
  s.adam.t = 9;
  s.update_count = 9;
  s.log.push_back({1, 3.5, 2});
  const std::string text = checkpoint_to_json(s);
  const TrainState r = checkpoint_from_json(text);
  EXPECT_EQ(checkpoint_to_json(r), text);
  EXPECT_EQ(r.update_count, 9);
  EXPECT_EQ(r.log.at(0).diverged_count, 2);
}

TEST(Checkpoint, RejectsShapeMismatch) {
  MetaConfig cfg;
  cfg.hd = 3;
  cfg.hm = 2;
  std::string text = checkpoint_to_json(initial_train_state(cfg, 4));
  text.replace(text.find("\"hd\":3"), 6, "\"hd\":4");
  try {
    checkpoint_from_json(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema);
  }
}

namespace {

MetaConfig small_meta() {
  MetaConfig cfg;
  cfg.hd = 4;
  cfg.hm = 3;
  cfg.batch = 4;
  cfg.inner_k = 3;
  cfg.total_updates = 4;
  return cfg;
}

VectorSampler small_sampler() {
  std::vector<ObjectiveProblem> v;
  for (int i = 0; i < 6; ++i) v.push_back(gen_least_squares(6, 5, 50 + i));
  return VectorSampler(std::move(v));
}

}  // namespace

TEST(Train, DeterministicAcrossWorkerCounts) {
  const MetaConfig cfg = small_meta();
  const VectorSampler sampler = small_sampler();
  TrainState a = initial_train_state(cfg, 1), b = initial_train_state(cfg, 1);
  train(a, cfg, sampler, {1, 1, 0, {}});
  train(b, cfg, sampler, {1, 3, 0, {}});
  EXPECT_EQ(checkpoint_to_json(a), checkpoint_to_json(b));
  EXPECT_EQ(a.log.size(), 4u);
}

TEST(Train, ResumeMatchesUninterruptedRun) {
  MetaConfig cfg = small_meta();
  const VectorSampler sampler = small_sampler();
  TrainState full = initial_train_state(cfg, 2);
  std::optional<std::string> partial;
  train(full, cfg, sampler,
        {2, 1, 2, [&](const TrainState& s) {
           if (s.update_count == 2) partial = checkpoint_to_json(s);
         }});
  ASSERT_TRUE(partial);
  TrainState resumed = checkpoint_from_json(*partial);
  train(resumed, cfg, sampler, {2, 2, 0, {}});
  EXPECT_EQ(checkpoint_to_json(resumed), checkpoint_to_json(full));
}

TEST(Train, ZeroUpdatesLeavesInitialization) {
  MetaConfig cfg = small_meta();
  cfg.total_updates = 0;
  TrainState s = initial_train_state(cfg, 3);
  const std::string before = checkpoint_to_json(s);
  train(s, cfg, small_sampler(), {3, 1, 0, {}});
  EXPECT_EQ(checkpoint_to_json(s), before);
}

TEST(Train, HeavyRegularizationPinsStepsToIdentity) {
  MetaConfig cfg = small_meta();
  cfg.lambda_reg = 1e6;
  cfg.total_updates = 40;
  cfg.adam_lr = 1e-2;
  TrainState s = initial_train_state(cfg, 5);
  const VectorSampler sampler = small_sampler();
  train(s, cfg, sampler, {5, 1, 0, {}});
  const auto& p = sampler.at(0);
  const BfgsState st = init_state(p, DenseVector(5, 0.2));
  const auto fw = l2o_forward(s.model, L2ORunState::random(5, 4, 9), st.x, st.grad,
                              search_direction(st));
  EXPECT_LT(fw.p.deviation_from_identity(), 0.01);
}

TEST(L2OStrategy, ResetDrawsTheSameRunState) {
  auto model = std::make_shared<const L2OModel>(L2OModel::initialized(4, 3, 1));
  const auto p = gen_least_squares(6, 5, 1);
  L2OStrategy a(model, 9), b(model, 9);
  const BfgsState s = init_state(p, DenseVector(5, 0.1));
  const DenseVector d = search_direction(s);
  a.reset(p);
  b.reset(p);
  EXPECT_EQ(a.propose(p, s, d).diag(), b.propose(p, s, d).diag());
}
