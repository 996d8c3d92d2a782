#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cwss/cwss.h"

namespace {

struct Options {
  std::string config;
  std::string preset = "desk";
  std::string family;
  std::vector<std::string> strategies;
  std::string out;
  std::string data;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  bool monitor = false;
};

struct Failure {
  cwss_status status;
};

void check(cwss_status st, const char* what) {
  if (st == CWSS_OK) return;
  std::fprintf(stderr, "error: %s: %s\n", what, cwss_last_error());
  throw Failure{st};
}

struct Freer {
  void operator()(cwss_config* p) const { cwss_config_free(p); }
  void operator()(cwss_dataset* p) const { cwss_dataset_free(p); }
  void operator()(cwss_model* p) const { cwss_model_free(p); }
  void operator()(char* p) const { cwss_string_free(p); }
};
using ConfigPtr = std::unique_ptr<cwss_config, Freer>;
using DatasetPtr = std::unique_ptr<cwss_dataset, Freer>;
using ModelPtr = std::unique_ptr<cwss_model, Freer>;
using StringPtr = std::unique_ptr<char, Freer>;

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

ConfigPtr make_config(const Options& o) {
  cwss_config* cfg = nullptr;
  if (!o.config.empty())
    check(cwss_config_load(o.config.c_str(), o.preset.c_str(), &cfg), "config");
  else
    check(cwss_config_preset(o.preset.c_str(), opt(o.family), &cfg), "config");
  ConfigPtr owned(cfg);
  if (o.seed) check(cwss_config_set_seed(cfg, *o.seed), "config");
  if (!o.strategies.empty()) {
    std::vector<const char*> names;
    for (const auto& s : o.strategies) names.push_back(s.c_str());
    check(cwss_config_set_strategies(cfg, names.data(), names.size()), "config");
  }
  return owned;
}

/// Reads the dataset and applies --config/--seed/--strategy overrides.
DatasetPtr open_dataset(const Options& o, bool load_train) {
  if (o.data.empty()) {
    std::fprintf(stderr, "error: --data <dir> is required\n");
    throw Failure{CWSS_E_INVALID_ARGUMENT};
  }
  cwss_dataset* raw = nullptr;
  check(cwss_dataset_read(o.data.c_str(), load_train ? 1 : 0, &raw), "dataset");
  DatasetPtr ds(raw);
  cwss_config* cfg = nullptr;
  if (!o.config.empty()) {
    check(cwss_config_load(o.config.c_str(), o.preset.c_str(), &cfg), "config");
  } else {
    check(cwss_dataset_config(ds.get(), &cfg), "config");
  }
  ConfigPtr owned(cfg);
  if (o.seed) check(cwss_config_set_seed(cfg, *o.seed), "config");
  if (!o.strategies.empty()) {
    std::vector<const char*> names;
    for (const auto& s : o.strategies) names.push_back(s.c_str());
    check(cwss_config_set_strategies(cfg, names.data(), names.size()), "config");
  }
  check(cwss_dataset_set_config(ds.get(), cfg), "config");
  return ds;
}

std::string join(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_out(const Options& o) {
  if (o.out.empty()) {
    std::fprintf(stderr, "error: --out <dir> is required\n");
    throw Failure{CWSS_E_INVALID_ARGUMENT};
  }
  std::error_code ec;
  std::filesystem::create_directories(o.out, ec);
  if (ec) {
    std::fprintf(stderr, "error: cannot create '%s': %s\n", o.out.c_str(), ec.message().c_str());
    throw Failure{CWSS_E_IO};
  }
}

void write_text(const std::string& path, const char* text) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f || std::fputs(text, f) < 0) {
    if (f) std::fclose(f);
    std::fprintf(stderr, "error: cannot write '%s'\n", path.c_str());
    throw Failure{CWSS_E_IO};
  }
  std::fclose(f);
}

void cmd_generate(const Options& o) {
  ensure_out(o);
  ConfigPtr cfg = make_config(o);
  cwss_dataset* raw = nullptr;
  check(cwss_dataset_generate(cfg.get(), o.workers, &raw), "generate");
  DatasetPtr ds(raw);
  check(cwss_dataset_write(ds.get(), o.out.c_str()), "generate");
  size_t n_train = 0, n_test = 0;
  check(cwss_dataset_counts(ds.get(), &n_train, &n_test), "generate");
  std::printf("wrote %zu train and %zu test instances to %s\n", n_train, n_test, o.out.c_str());
}

void cmd_train(const Options& o) {
  ensure_out(o);
  DatasetPtr ds = open_dataset(o, true);
  ModelPtr resume;
  if (!o.checkpoint.empty()) {
    cwss_model* m = nullptr;
    check(cwss_model_load(o.checkpoint.c_str(), &m), "checkpoint");
    resume.reset(m);
  }
  const std::string partial = join(o.out, "checkpoint.partial.json");
  cwss_model* trained = nullptr;
  check(cwss_train(ds.get(), resume.get(), o.workers, partial.c_str(), &trained), "train");
  ModelPtr model(trained);
  check(cwss_model_save(model.get(), join(o.out, "checkpoint.json").c_str()), "train");
  char* csv = nullptr;
  check(cwss_model_train_log_csv(model.get(), &csv), "train");
  StringPtr csv_owned(csv);
  write_text(join(o.out, "train_log.csv"), csv);
  int updates = 0;
  check(cwss_model_update_count(model.get(), &updates), "train");
  std::printf("trained %d updates; checkpoint at %s\n", updates,
              join(o.out, "checkpoint.json").c_str());
}

void cmd_bench(const Options& o) {
  ensure_out(o);
  DatasetPtr ds = open_dataset(o, false);
  ModelPtr model;
  if (!o.checkpoint.empty()) {
    cwss_model* m = nullptr;
    check(cwss_model_load(o.checkpoint.c_str(), &m), "checkpoint");
    model.reset(m);
  }
  char* summary = nullptr;
  check(cwss_bench(ds.get(), model.get(), o.workers, o.monitor ? 1 : 0, o.out.c_str(), &summary),
        "bench");
  StringPtr owned(summary);
  std::printf("%s", summary);
}

int cmd_verify(const Options& o) {
  DatasetPtr ds = open_dataset(o, true);
  char* report = nullptr;
  size_t failures = 0;
  const cwss_status st = cwss_verify(ds.get(), &report, &failures);
  StringPtr owned(report);
  if (report) std::printf("%s", report);
  if (st != CWSS_OK && st != CWSS_E_PROPERTY) check(st, "verify");
  if (st == CWSS_E_PROPERTY) std::fprintf(stderr, "error: verify: %s\n", cwss_last_error());
  return cwss_exit_code(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordinate-wise step size BFGS experiments"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment config (JSON)");
    sub->add_option("--preset", o.preset, "Base preset: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--seed", o.seed, "Base seed");
    sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* gen = app.add_subcommand("generate", "Generate train and test instances");
  common(gen);
  gen->add_option("--family", o.family, "least_squares | logistic | logsumexp");
  gen->add_option("--out", o.out, "Dataset directory")->required();

  auto* train = app.add_subcommand("train", "Train the L2O step-size model");
  common(train);
  train->add_option("--data", o.data, "Dataset directory")->required();
  train->add_option("--out", o.out, "Output directory")->required();
  train->add_option("--checkpoint", o.checkpoint, "Resume from this checkpoint");

  auto* bench = app.add_subcommand("bench", "Run strategies on the test split");
  common(bench);
  bench->add_option("--data", o.data, "Dataset directory")->required();
  bench->add_option("--out", o.out, "Output directory")->required();
  bench->add_option("--strategy", o.strategies, "ls | hgd | l2o | fixed:<alpha> (repeatable)");
  bench->add_option("--checkpoint", o.checkpoint, "Trained model for the l2o strategy");
  bench->add_flag("--monitor", o.monitor, "Record theorem-condition columns per step");

  auto* verify = app.add_subcommand("verify", "Run certificate and gradient suites");
  common(verify);
  verify->add_option("--data", o.data, "Dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) cmd_generate(o);
    if (*train) cmd_train(o);
    if (*bench) cmd_bench(o);
    if (*verify) return cmd_verify(o);
  } catch (const Failure& f) {
    return cwss_exit_code(f.status);
  }
  return 0;
}
