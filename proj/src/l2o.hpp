#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strategies.hpp"

namespace cwss {

/// Shared coordinate-wise LSTM cell (input 3, hidden hd) followed by an MLP
/// head hd → hm (tanh) → 1. Parameters live in one flat buffer so the
/// optimizer and gradient checks can treat them uniformly.
///
/// Layout: W[4hd×3] | U[4hd×hd] | b[4hd] | W1[hm×hd] | b1[hm] | w2[hm] | b2[1].
/// Gate order inside the 4hd blocks is input, forget, cell, output.
class L2OModel {
 public:
  L2OModel(int hd, int hm);

  /// PyTorch-style uniform(±1/√fan_in) initialization from a named stream.
  static L2OModel initialized(int hd, int hm, std::uint64_t seed);

  int hd() const noexcept { return hd_; }
  int hm() const noexcept { return hm_; }
  static std::size_t parameter_count(int hd, int hm);
  std::size_t parameter_count() const noexcept { return params_.size(); }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  struct Offsets {
    std::size_t w, u, b, w1, b1, w2, b2, end;
  };
  Offsets offsets() const noexcept { return offsets_; }

  std::span<const double> lstm_w() const { return slice(offsets_.w, offsets_.u); }
  std::span<const double> lstm_u() const { return slice(offsets_.u, offsets_.b); }
  std::span<const double> lstm_b() const { return slice(offsets_.b, offsets_.w1); }
  std::span<const double> mlp_w1() const { return slice(offsets_.w1, offsets_.b1); }
  std::span<const double> mlp_b1() const { return slice(offsets_.b1, offsets_.w2); }
  std::span<const double> mlp_w2() const { return slice(offsets_.w2, offsets_.b2); }
  double mlp_b2() const { return params_[offsets_.b2]; }

  /// Zeroes the output layer so that every emitted step size is exactly 1.
  void zero_output_layer();

 private:
  std::span<const double> slice(std::size_t a, std::size_t b) const {
    return std::span<const double>(params_).subspan(a, b - a);
  }

  int hd_;
  int hm_;
  Offsets offsets_;
  std::vector<double> params_;
};

/// Per-coordinate recurrent state for one optimization run (n×hd each).
struct L2ORunState {
  DenseMatrix h;
  DenseMatrix c;

  static L2ORunState zeros(std::size_t n, int hd);
  /// h, c ~ N(0, stddev²), drawn from the given stream seed.
  static L2ORunState random(std::size_t n, int hd, std::uint64_t seed, double stddev = 0.1);
};

/// Input features are clipped to [−kInputClip, kInputClip].
inline constexpr double kInputClip = 10.0;

/// Intermediates of one forward pass, enough for a single-step backward pass.
struct L2OTape {
  std::size_t n = 0;
  int hd = 0;
  int hm = 0;
  std::vector<double> inputs;  // n×3 (clipped)
  std::vector<double> h_prev;  // n×hd
  std::vector<double> c_prev;  // n×hd
  std::vector<double> gates;   // n×4hd, activated
  std::vector<double> tanh_c;  // n×hd
  std::vector<double> h_new;   // n×hd
  std::vector<double> z;       // n×hm
  std::vector<double> logits;  // n, the head output p_i before 2σ(·)
};

struct L2OForward {
  CwssMatrix p;
  L2ORunState state;
  L2OTape tape;
};

/// Feeds (x_i, g_i, d_i) of every coordinate through the shared cell; the
/// step size of coordinate i is 2σ(p_i) ∈ (0, 2).
L2OForward l2o_forward(const L2OModel& model, const L2ORunState& state, const DenseVector& x,
                       const DenseVector& grad, const DenseVector& d);

/// f_next + λ Σ (p_i − 1)².
double meta_loss(double f_next, const CwssMatrix& p, double lambda_reg);

/// ∂ meta_loss / ∂ params for one step, truncated to that step (incoming h, c
/// are constants). grad_next is ∇f(x − P⊙d).
std::vector<double> l2o_backward(const L2OModel& model, const L2OTape& tape, const DenseVector& d,
                                 const DenseVector& grad_next, const CwssMatrix& p,
                                 double lambda_reg);

struct MetaConfig {
  double adam_lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch = 64;
  int total_updates = 200;
  int inner_k = 30;
  double lambda_reg = 1e-3;
  double grad_clip = 1.0;
  double state_init_std = 0.1;
  int hd = 20;
  int hm = 20;

  void validate() const;
};

struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
  long long t = 0;

  static AdamMoments zeros(std::size_t count) {
    return {std::vector<double>(count, 0.0), std::vector<double>(count, 0.0), 0};
  }
};

/// One bias-corrected Adam step after clipping grads to global norm
/// cfg.grad_clip. Increments moments.t before use.
void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
               const MetaConfig& cfg);

/// Step-size strategy backed by a trained model. Each reset() draws a fresh
/// random recurrent state from the configured stream.
class L2OStrategy final : public StepStrategy {
 public:
  L2OStrategy(std::shared_ptr<const L2OModel> model, std::uint64_t state_seed,
              double state_init_std = 0.1);
  void reset(const ObjectiveProblem& problem) override;
  CwssMatrix propose(const ObjectiveProblem& problem, const BfgsState& s,
                     const DenseVector& d) override;
  std::string name() const override { return "l2o"; }

 private:
  std::shared_ptr<const L2OModel> model_;
  std::uint64_t state_seed_;
  double state_init_std_;
  L2ORunState state_;
};

/// Source of training problems, indexed deterministically.
class ProblemSampler {
 public:
  virtual ~ProblemSampler() = default;
  virtual std::size_t size() const = 0;
  virtual const ObjectiveProblem& at(std::size_t index) const = 0;
};

class VectorSampler final : public ProblemSampler {
 public:
  explicit VectorSampler(std::vector<ObjectiveProblem> problems);
  std::size_t size() const override { return problems_.size(); }
  const ObjectiveProblem& at(std::size_t index) const override { return problems_.at(index); }

 private:
  std::vector<ObjectiveProblem> problems_;
};

struct TrainLogEntry {
  int update = 0;
  double mean_meta_loss = 0.0;
  int diverged_count = 0;
};

struct TrainState {
  L2OModel model;
  AdamMoments adam;
  int update_count = 0;
  std::vector<TrainLogEntry> log;
};

struct TrainOptions {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  int checkpoint_every = 0;  // 0 disables the callback
  std::function<void(const TrainState&)> on_checkpoint;
};

/// Fresh training state (seeded model, zero moments).
TrainState initial_train_state(const MetaConfig& cfg, std::uint64_t seed);

/// Runs outer updates until state.update_count == cfg.total_updates. Each
/// outer update draws `batch` problems, rolls every one of them forward
/// inner_k BFGS iterations and takes one Adam step per inner iteration on the
/// batch-averaged meta-gradient. All draws depend only on (seed, update,
/// slot), so resuming from a saved state reproduces an uninterrupted run.
void train(TrainState& state, const MetaConfig& cfg, const ProblemSampler& sampler,
           const TrainOptions& opts);

// Checkpoint JSON (schema 1), arrays as hex-float strings.
std::string checkpoint_to_json(const TrainState& state);
TrainState checkpoint_from_json(std::string_view text);
void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace cwss
