#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "l2o.hpp"
#include "theory.hpp"

namespace cwss::harness {

/// Family-specific sizes. Least squares and logistic use (m, n); log-sum-exp
/// uses m terms in dimension d.
struct Dims {
  std::size_t m = 60;
  std::size_t n = 120;
  double rho = 1e-2;  // logistic only
};

struct ExperimentConfig {
  ProblemKind family = ProblemKind::least_squares;
  Dims dims;
  int n_train = 2000;
  int n_test = 128;
  std::vector<std::string> strategies{"ls", "hgd", "l2o"};
  StopCriteria stop;
  std::uint64_t seed = 42;
  MetaConfig meta;
  LineSearchConfig line_search;
  HgdConfig hgd;

  /// Throws ErrorKind::invalid_argument naming the offending field.
  void validate() const;
};

enum class Preset { desk, paper };
Preset parse_preset(std::string_view name);

/// Preset defaults for a family (desk: LS 60×120, logistic 120×60, LSE 120×20).
ExperimentConfig preset_config(Preset preset, ProblemKind family = ProblemKind::least_squares);

/// Overlays the fields present in `text` onto the preset selected by its
/// optional "preset" field (or `fallback`). Unknown fields are rejected.
ExperimentConfig config_from_json(std::string_view text, Preset fallback = Preset::desk);
ExperimentConfig load_config(const std::string& path, Preset fallback = Preset::desk);

/// Fully resolved config as JSON with sorted keys.
std::string config_to_json(const ExperimentConfig& cfg);

/// 16 hex digits of FNV-1a over the canonical JSON.
std::string config_hash(const ExperimentConfig& cfg);

// --- datasets -------------------------------------------------------------

/// In-memory dataset; instance i of the combined (train, test) sequence has
/// seed cfg.seed + i.
struct Dataset {
  ExperimentConfig config;
  std::vector<ObjectiveProblem> train;
  std::vector<ObjectiveProblem> test;
};

ObjectiveProblem generate_instance(const ExperimentConfig& cfg, std::uint64_t seed);
Dataset generate_dataset(const ExperimentConfig& cfg, unsigned workers = 1);

/// Writes manifest.json plus train/NNNNNN.json and test/NNNNNN.json.
void write_dataset(const Dataset& ds, const std::string& dir);

/// Reads the manifest and every instance it lists. A dataset whose manifest
/// was produced from `expected` must hash identically when given.
Dataset read_dataset(const std::string& dir, bool load_train = true);

// --- training -------------------------------------------------------------

struct TrainRun {
  TrainState state;
  std::string log_csv;
};

std::string train_log_to_csv(const std::vector<TrainLogEntry>& log);

/// Trains on the train split. `resume` continues from a partial state; the
/// callback fires every `checkpoint_every` updates.
TrainRun train_model(const Dataset& ds, std::optional<TrainState> resume, unsigned workers,
                     int checkpoint_every = 25,
                     std::function<void(const TrainState&)> on_checkpoint = {});

// --- benchmarking ---------------------------------------------------------

struct RunOutcome {
  std::string strategy;
  std::size_t instance = 0;
  std::vector<ConvergenceRecord> trace;
  std::vector<ConditionReport> monitor;  // one per step when monitoring
  bool converged = false;
  bool diverged = false;
  /// Iterations to tolerance; max_iters + 1 when the run did not converge.
  int iterations = 0;
};

struct Quantiles {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr() const { return q3 - q1; }
};

struct StrategySummary {
  std::string name;
  int runs = 0;
  int converged = 0;
  int divergence_count = 0;
  Quantiles iterations;
  Quantiles final_f;
  Quantiles final_grad_norm;
  std::vector<double> curve_mean;
  std::vector<double> curve_std;
};

struct BenchSummary {
  std::string config_hash;
  ProblemKind family = ProblemKind::least_squares;
  std::size_t instances = 0;
  StopCriteria stop;
  std::vector<StrategySummary> strategies;
};

/// Linear-interpolation quantile of already sorted values.
double sorted_quantile(const std::vector<double>& sorted, double q);

struct BenchOptions {
  unsigned workers = 1;
  bool monitor = false;
  /// Required when any strategy is "l2o".
  std::shared_ptr<const L2OModel> model;
};

/// Rejects unknown names and an l2o request without a model before any run.
void validate_strategies(const std::vector<std::string>& names, bool have_model);

/// Builds a strategy from its name: ls | hgd | l2o | fixed:<alpha>.
std::unique_ptr<StepStrategy> make_strategy(const std::string& name, const ExperimentConfig& cfg,
                                            std::shared_ptr<const L2OModel> model,
                                            std::uint64_t run_seed);

/// Shared starting point of test instance `index`.
DenseVector bench_x0(const ExperimentConfig& cfg, std::size_t index, std::size_t n);

/// Every (strategy × test instance) run, sorted by (strategy order, instance).
std::vector<RunOutcome> run_bench(const Dataset& ds, const std::vector<std::string>& strategies,
                                  const BenchOptions& opts);

BenchSummary summarize(const ExperimentConfig& cfg, const std::vector<std::string>& strategies,
                       const std::vector<RunOutcome>& runs);
std::string summary_to_json(const BenchSummary& s);

/// Per-run CSV; monitor columns are appended when the run carries them.
std::string run_to_csv(const RunOutcome& run);

/// Mean objective vs iteration with ±1 std bands, log-scale y.
std::string render_svg(const BenchSummary& s);

/// Writes runs/<strategy>/<instance>.csv, summary.json and curves.svg.
void write_bench(const BenchSummary& s, const std::vector<RunOutcome>& runs,
                 const std::string& dir);

// --- verification ---------------------------------------------------------

struct VerifyFailure {
  std::string suite;
  std::uint64_t seed = 0;
  std::string detail;
};

struct VerifyReport {
  int checks = 0;
  std::vector<VerifyFailure> failures;
  std::vector<std::string> notes;
  bool ok() const { return failures.empty(); }
};

struct VerifyOptions {
  std::size_t max_instances = 16;  // per split
  int fd_points = 3;
  int trajectory_steps = 5;
};

VerifyReport verify_dataset(const Dataset& ds, const VerifyOptions& opts = {});
std::string report_to_text(const VerifyReport& r);

// --- small io helpers -----------------------------------------------------

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace cwss::harness
