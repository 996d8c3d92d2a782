#include "harness.hpp"
#include "hexfloat.hpp"

namespace cwss::harness {

namespace {

/// Non-owning view over the train split.
class SplitSampler final : public ProblemSampler {
 public:
  explicit SplitSampler(const std::vector<ObjectiveProblem>& problems) : problems_(problems) {}
  std::size_t size() const override { return problems_.size(); }
  const ObjectiveProblem& at(std::size_t index) const override { return problems_.at(index); }

 private:
  const std::vector<ObjectiveProblem>& problems_;
};

}  // namespace

std::string train_log_to_csv(const std::vector<TrainLogEntry>& log) {
  std::string out = "update,mean_meta_loss,diverged_count\n";
  for (const auto& e : log)
    out += std::to_string(e.update) + "," + format_g17(e.mean_meta_loss) + "," +
           std::to_string(e.diverged_count) + "\n";
  return out;
}

TrainRun train_model(const Dataset& ds, std::optional<TrainState> resume, unsigned workers,
                     int checkpoint_every, std::function<void(const TrainState&)> on_checkpoint) {
  const MetaConfig& cfg = ds.config.meta;
  if (ds.train.empty() && cfg.total_updates > 0)
    fail(ErrorKind::invalid_argument, "no instances in the train split");
  TrainState state = resume ? std::move(*resume) : initial_train_state(cfg, ds.config.seed);
  if (state.model.hd() != cfg.hd || state.model.hm() != cfg.hm)
    fail(ErrorKind::invalid_argument, "checkpoint model size does not match config.meta");
  if (state.update_count > cfg.total_updates)
    fail(ErrorKind::invalid_argument, "checkpoint is past config.meta.total_updates");
  SplitSampler sampler(ds.train);
  TrainOptions opts;
  opts.seed = ds.config.seed;
  opts.workers = workers;
  opts.checkpoint_every = checkpoint_every;
  opts.on_checkpoint = std::move(on_checkpoint);
  train(state, cfg, sampler, opts);
  std::string csv = train_log_to_csv(state.log);
  return {std::move(state), std::move(csv)};
}

}  // namespace cwss::harness
