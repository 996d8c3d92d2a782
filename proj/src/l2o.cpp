#include "l2o.hpp"

#include <algorithm>
#include <cmath>

#include "parallel.hpp"
#include "rng.hpp"

namespace cwss {

namespace {

// Logits are clamped here so 2σ(p) stays strictly inside (0, 2) in floating
// point; σ(±30) is 1e-13 away from its limits.
constexpr double kLogitClamp = 30.0;

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double clip_input(double v) { return std::clamp(v, -kInputClip, kInputClip); }

}  // namespace

std::size_t L2OModel::parameter_count(int hd, int hm) {
  const auto H = static_cast<std::size_t>(hd);
  const auto M = static_cast<std::size_t>(hm);
  return 4 * H * 3 + 4 * H * H + 4 * H + M * H + M + M + 1;
}

L2OModel::L2OModel(int hd, int hm) : hd_(hd), hm_(hm) {
  require(hd >= 1 && hm >= 1, ErrorKind::invalid_argument, "l2o: hidden sizes must be >= 1");
  const auto H = static_cast<std::size_t>(hd);
  const auto M = static_cast<std::size_t>(hm);
  offsets_.w = 0;
  offsets_.u = offsets_.w + 4 * H * 3;
  offsets_.b = offsets_.u + 4 * H * H;
  offsets_.w1 = offsets_.b + 4 * H;
  offsets_.b1 = offsets_.w1 + M * H;
  offsets_.w2 = offsets_.b1 + M;
  offsets_.b2 = offsets_.w2 + M;
  offsets_.end = offsets_.b2 + 1;
  params_.assign(offsets_.end, 0.0);
}

L2OModel L2OModel::initialized(int hd, int hm, std::uint64_t seed) {
  L2OModel model(hd, hm);
  Rng rng = make_rng(seed, "l2o/model-init");
  const auto o = model.offsets_;
  auto fill = [&](std::size_t a, std::size_t b, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = a; i < b; ++i) model.params_[i] = u(rng);
  };
  const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(hd));
  fill(o.w, o.w1, lstm_bound);
  fill(o.w1, o.w2, lstm_bound);
  fill(o.w2, o.b2, 1.0 / std::sqrt(static_cast<double>(hm)));
  model.params_[o.b2] = 0.0;
  return model;
}

void L2OModel::zero_output_layer() {
  std::fill(params_.begin() + static_cast<std::ptrdiff_t>(offsets_.w2), params_.end(), 0.0);
}

L2ORunState L2ORunState::zeros(std::size_t n, int hd) {
  return {DenseMatrix(n, static_cast<std::size_t>(hd)), DenseMatrix(n, static_cast<std::size_t>(hd))};
}

L2ORunState L2ORunState::random(std::size_t n, int hd, std::uint64_t seed, double stddev) {
  L2ORunState s = zeros(n, hd);
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : s.h.flat()) v = dist(rng);
  for (auto& v : s.c.flat()) v = dist(rng);
  return s;
}

L2OForward l2o_forward(const L2OModel& model, const L2ORunState& state, const DenseVector& x,
                       const DenseVector& grad, const DenseVector& d) {
  const std::size_t n = x.size();
  require(grad.size() == n && d.size() == n, ErrorKind::dimension_mismatch,
          "l2o_forward: x, grad and d must have equal length");
  const auto H = static_cast<std::size_t>(model.hd());
  const auto M = static_cast<std::size_t>(model.hm());
  require(state.h.rows() == n && state.h.cols() == H && state.c.rows() == n && state.c.cols() == H,
          ErrorKind::dimension_mismatch, "l2o_forward: recurrent state has the wrong shape");

  L2OTape t;
  t.n = n;
  t.hd = model.hd();
  t.hm = model.hm();
  t.inputs.resize(n * 3);
  t.h_prev.assign(state.h.flat().begin(), state.h.flat().end());
  t.c_prev.assign(state.c.flat().begin(), state.c.flat().end());
  t.gates.resize(n * 4 * H);
  t.tanh_c.resize(n * H);
  t.h_new.resize(n * H);
  t.z.resize(n * M);
  t.logits.resize(n);

  const double* W = model.lstm_w().data();
  const double* U = model.lstm_u().data();
  const double* B = model.lstm_b().data();
  const double* W1 = model.mlp_w1().data();
  const double* B1 = model.mlp_b1().data();
  const double* W2 = model.mlp_w2().data();
  const double b2 = model.mlp_b2();

  L2ORunState next = L2ORunState::zeros(n, model.hd());
  DenseVector p(n);
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    double* in = &t.inputs[3 * i];
    in[0] = clip_input(x[i]);
    in[1] = clip_input(grad[i]);
    in[2] = clip_input(d[i]);
    const double* hp = &t.h_prev[i * H];
    const double* cp = &t.c_prev[i * H];
    double* a = &t.gates[i * 4 * H];
    for (std::size_t r = 0; r < 4 * H; ++r) {
      const double* wr = W + 3 * r;
      const double* ur = U + H * r;
      double s = B[r] + wr[0] * in[0] + wr[1] * in[1] + wr[2] * in[2];
      for (std::size_t j = 0; j < H; ++j) s += ur[j] * hp[j];
      a[r] = s;
    }
    double* tc = &t.tanh_c[i * H];
    double* hn = &t.h_new[i * H];
    auto c_out = next.c.row(i);
    auto h_out = next.h.row(i);
    for (std::size_t j = 0; j < H; ++j) {
      const double ig = sigmoid(a[j]);
      const double fg = sigmoid(a[H + j]);
      const double gg = std::tanh(a[2 * H + j]);
      const double og = sigmoid(a[3 * H + j]);
      a[j] = ig;
      a[H + j] = fg;
      a[2 * H + j] = gg;
      a[3 * H + j] = og;
      const double c = fg * cp[j] + ig * gg;
      tc[j] = std::tanh(c);
      hn[j] = og * tc[j];
      c_out[j] = c;
      h_out[j] = hn[j];
    }
    double* z = &t.z[i * M];
    double logit = b2;
    for (std::size_t k = 0; k < M; ++k) {
      const double* w1k = W1 + H * k;
      double s = B1[k];
      for (std::size_t j = 0; j < H; ++j) s += w1k[j] * hn[j];
      z[k] = std::tanh(s);
      logit += W2[k] * z[k];
    }
    if (!std::isfinite(logit) || !std::isfinite(c_out[0])) finite = false;
    t.logits[i] = logit;
    p[i] = 2.0 * sigmoid(std::clamp(logit, -kLogitClamp, kLogitClamp));
  }
  if (!finite) fail(ErrorKind::numeric, "l2o_forward: non-finite activation");
  return {CwssMatrix(std::move(p)), std::move(next), std::move(t)};
}

double meta_loss(double f_next, const CwssMatrix& p, double lambda_reg) {
  const double dev = p.deviation_from_identity();
  return f_next + lambda_reg * dev * dev;
}

std::vector<double> l2o_backward(const L2OModel& model, const L2OTape& tape, const DenseVector& d,
                                 const DenseVector& grad_next, const CwssMatrix& p,
                                 double lambda_reg) {
  const std::size_t n = tape.n;
  require(tape.hd == model.hd() && tape.hm == model.hm(), ErrorKind::dimension_mismatch,
          "l2o_backward: tape was recorded with a different model shape");
  require(d.size() == n && grad_next.size() == n && p.size() == n &&
              tape.logits.size() == n,
          ErrorKind::dimension_mismatch, "l2o_backward: tape/shape mismatch");
  const auto H = static_cast<std::size_t>(model.hd());
  const auto M = static_cast<std::size_t>(model.hm());
  const auto o = model.offsets();

  std::vector<double> g(model.parameter_count(), 0.0);
  double* gW = g.data() + o.w;
  double* gU = g.data() + o.u;
  double* gB = g.data() + o.b;
  double* gW1 = g.data() + o.w1;
  double* gB1 = g.data() + o.b1;
  double* gW2 = g.data() + o.w2;
  double& gb2 = g[o.b2];
  const double* W1 = model.mlp_w1().data();
  const double* W2 = model.mlp_w2().data();

  std::vector<double> dpre1(M), dh(H), da(4 * H);
  for (std::size_t i = 0; i < n; ++i) {
    const double logit = tape.logits[i];
    if (logit <= -kLogitClamp || logit >= kLogitClamp) continue;  // clamp is flat there
    const double sg = sigmoid(logit);
    const double dloss_dp = -grad_next[i] * d[i] + 2.0 * lambda_reg * (p[i] - 1.0);
    const double delta = dloss_dp * 2.0 * sg * (1.0 - sg);
    if (delta == 0.0) continue;

    const double* z = &tape.z[i * M];
    const double* hn = &tape.h_new[i * H];
    gb2 += delta;
    for (std::size_t k = 0; k < M; ++k) {
      gW2[k] += delta * z[k];
      dpre1[k] = delta * W2[k] * (1.0 - z[k] * z[k]);
      gB1[k] += dpre1[k];
    }
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t k = 0; k < M; ++k) {
      const double dk = dpre1[k];
      if (dk == 0.0) continue;
      const double* w1k = W1 + H * k;
      double* gw1k = gW1 + H * k;
      for (std::size_t j = 0; j < H; ++j) {
        gw1k[j] += dk * hn[j];
        dh[j] += dk * w1k[j];
      }
    }

    const double* a = &tape.gates[i * 4 * H];
    const double* tc = &tape.tanh_c[i * H];
    const double* cp = &tape.c_prev[i * H];
    for (std::size_t j = 0; j < H; ++j) {
      const double ig = a[j], fg = a[H + j], gg = a[2 * H + j], og = a[3 * H + j];
      const double dog = dh[j] * tc[j];
      const double dc = dh[j] * og * (1.0 - tc[j] * tc[j]);
      da[j] = dc * gg * ig * (1.0 - ig);
      da[H + j] = dc * cp[j] * fg * (1.0 - fg);
      da[2 * H + j] = dc * ig * (1.0 - gg * gg);
      da[3 * H + j] = dog * og * (1.0 - og);
    }
    const double* in = &tape.inputs[3 * i];
    const double* hp = &tape.h_prev[i * H];
    for (std::size_t r = 0; r < 4 * H; ++r) {
      const double dr = da[r];
      gB[r] += dr;
      double* gwr = gW + 3 * r;
      gwr[0] += dr * in[0];
      gwr[1] += dr * in[1];
      gwr[2] += dr * in[2];
      double* gur = gU + H * r;
      for (std::size_t j = 0; j < H; ++j) gur[j] += dr * hp[j];
    }
  }
  return g;
}

void MetaConfig::validate() const {
  require(adam_lr > 0.0 && adam_beta1 > 0.0 && adam_beta1 < 1.0 && adam_beta2 > 0.0 &&
              adam_beta2 < 1.0 && adam_eps > 0.0,
          ErrorKind::invalid_argument, "meta config: invalid Adam hyperparameters");
  require(batch >= 1, ErrorKind::invalid_argument, "meta config: batch must be >= 1");
  require(total_updates >= 0, ErrorKind::invalid_argument,
          "meta config: total_updates must be >= 0");
  require(inner_k >= 1, ErrorKind::invalid_argument, "meta config: inner_k must be >= 1");
  require(lambda_reg >= 0.0, ErrorKind::invalid_argument, "meta config: lambda must be >= 0");
  require(grad_clip > 0.0, ErrorKind::invalid_argument, "meta config: grad_clip must be > 0");
  require(state_init_std >= 0.0, ErrorKind::invalid_argument,
          "meta config: state_init_std must be >= 0");
  require(hd >= 1 && hm >= 1, ErrorKind::invalid_argument, "meta config: hidden sizes >= 1");
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
               const MetaConfig& cfg) {
  require(params.size() == grads.size() && moments.m.size() == params.size() &&
              moments.v.size() == params.size(),
          ErrorKind::dimension_mismatch, "adam_step: shape mismatch");
  double sq = 0.0;
  for (double v : grads) sq += v * v;
  const double gnorm = std::sqrt(sq);
  const double scale = gnorm > cfg.grad_clip ? cfg.grad_clip / gnorm : 1.0;

  moments.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(moments.t));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(moments.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double gi = grads[i] * scale;
    moments.m[i] = cfg.adam_beta1 * moments.m[i] + (1.0 - cfg.adam_beta1) * gi;
    moments.v[i] = cfg.adam_beta2 * moments.v[i] + (1.0 - cfg.adam_beta2) * gi * gi;
    const double mhat = moments.m[i] / bc1;
    const double vhat = moments.v[i] / bc2;
    params[i] -= cfg.adam_lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

L2OStrategy::L2OStrategy(std::shared_ptr<const L2OModel> model, std::uint64_t state_seed,
                         double state_init_std)
    : model_(std::move(model)), state_seed_(state_seed), state_init_std_(state_init_std) {
  require(model_ != nullptr, ErrorKind::invalid_argument, "l2o strategy: model is null");
}

void L2OStrategy::reset(const ObjectiveProblem& problem) {
  state_ = L2ORunState::random(problem.dimension(), model_->hd(), state_seed_, state_init_std_);
}

CwssMatrix L2OStrategy::propose(const ObjectiveProblem& problem, const BfgsState& s,
                                const DenseVector& d) {
  if (state_.h.rows() != problem.dimension()) reset(problem);
  L2OForward fw = l2o_forward(*model_, state_, s.x, s.grad, d);
  state_ = std::move(fw.state);
  return std::move(fw.p);
}

VectorSampler::VectorSampler(std::vector<ObjectiveProblem> problems)
    : problems_(std::move(problems)) {
  require(!problems_.empty(), ErrorKind::invalid_argument, "sampler: no problems");
}

TrainState initial_train_state(const MetaConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  L2OModel model = L2OModel::initialized(cfg.hd, cfg.hm, seed);
  AdamMoments adam = AdamMoments::zeros(model.parameter_count());
  return {std::move(model), std::move(adam), 0, {}};
}

namespace {

struct Rollout {
  const ObjectiveProblem* problem = nullptr;
  BfgsState bfgs;
  L2ORunState rnn;
  bool alive = false;
  bool diverged = false;
  double loss = 0.0;
  std::vector<double> grad;
};

}  // namespace

void train(TrainState& state, const MetaConfig& cfg, const ProblemSampler& sampler,
           const TrainOptions& opts) {
  cfg.validate();
  require(sampler.size() > 0, ErrorKind::invalid_argument, "train: empty sampler");
  require(state.model.hd() == cfg.hd && state.model.hm() == cfg.hm, ErrorKind::invalid_argument,
          "train: model shape does not match the config");
  const std::size_t batch = static_cast<std::size_t>(cfg.batch);
  const std::size_t nparams = state.model.parameter_count();
  std::vector<Rollout> slots(batch);
  std::vector<double> mean_grad(nparams);

  while (state.update_count < cfg.total_updates) {
    const auto u = static_cast<std::uint64_t>(state.update_count);
    Rng pick = make_rng(opts.seed, "train/batch", u);
    std::uniform_int_distribution<std::size_t> index(0, sampler.size() - 1);
    for (std::size_t b = 0; b < batch; ++b) {
      Rollout& r = slots[b];
      r.problem = &sampler.at(index(pick));
      const std::uint64_t slot_id = u * batch + b;
      Rng x0_rng = make_rng(opts.seed, "train/x0", slot_id);
      const std::size_t n = r.problem->dimension();
      r.rnn = L2ORunState::random(n, cfg.hd, stream_seed(opts.seed, "train/run-state", slot_id),
                                  cfg.state_init_std);
      r.diverged = false;
      try {
        r.bfgs = init_state(*r.problem, unit_gaussian(x0_rng, n));
        r.alive = true;
      } catch (const Error&) {
        r.alive = false;
        r.diverged = true;
      }
    }

    double loss_sum = 0.0;
    long long loss_count = 0;
    for (int k = 0; k < cfg.inner_k; ++k) {
      const L2OModel& model = state.model;
      parallel_for(batch, opts.workers, [&](std::size_t b) {
        Rollout& r = slots[b];
        if (!r.alive) return;
        try {
          const DenseVector d = search_direction(r.bfgs);
          L2OForward fw = l2o_forward(model, r.rnn, r.bfgs.x, r.bfgs.grad, d);
          DenseVector x_next(d.size());
          for (std::size_t i = 0; i < d.size(); ++i) x_next[i] = r.bfgs.x[i] - fw.p[i] * d[i];
          auto [f_next, g_next] = r.problem->eval_grad(x_next);
          if (!std::isfinite(f_next) || !all_finite(g_next))
            fail(ErrorKind::numeric, "diverged");
          r.loss = meta_loss(f_next, fw.p, cfg.lambda_reg);
          r.grad = l2o_backward(model, fw.tape, d, g_next, fw.p, cfg.lambda_reg);
          r.bfgs = accept_point(r.bfgs, std::move(x_next), f_next, std::move(g_next));
          r.rnn = std::move(fw.state);
        } catch (const Error&) {
          r.alive = false;
          r.diverged = true;
        }
      });

      // Fixed index-order reduction keeps results independent of worker count.
      std::fill(mean_grad.begin(), mean_grad.end(), 0.0);
      std::size_t active = 0;
      for (const Rollout& r : slots) {
        if (!r.alive) continue;
        ++active;
        loss_sum += r.loss;
        ++loss_count;
        for (std::size_t j = 0; j < nparams; ++j) mean_grad[j] += r.grad[j];
      }
      if (active == 0) break;
      const double inv = 1.0 / static_cast<double>(active);
      for (double& v : mean_grad) v *= inv;
      adam_step(state.model.params(), mean_grad, state.adam, cfg);
    }

    TrainLogEntry entry;
    entry.update = state.update_count + 1;
    entry.mean_meta_loss =
        loss_count > 0 ? loss_sum / static_cast<double>(loss_count)
                       : std::numeric_limits<double>::quiet_NaN();
    entry.diverged_count = static_cast<int>(
        std::count_if(slots.begin(), slots.end(), [](const Rollout& r) { return r.diverged; }));
    state.log.push_back(entry);
    state.update_count += 1;
    if (opts.on_checkpoint && opts.checkpoint_every > 0 &&
        state.update_count % opts.checkpoint_every == 0)
      opts.on_checkpoint(state);
  }
}

}  // namespace cwss
