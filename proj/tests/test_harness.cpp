#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "harness/harness.hpp"

using namespace cwss;
using namespace cwss::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cwss_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig tiny_config() {
  ExperimentConfig c = preset_config(Preset::desk);
  c.dims = {6, 8, 1e-2};
  c.n_train = 4;
  c.n_test = 3;
  c.strategies = {"ls", "fixed:0.5"};
  c.meta.hd = 3;
  c.meta.hm = 2;
  c.meta.batch = 2;
  c.meta.inner_k = 2;
  c.meta.total_updates = 2;
  return c;
}

}  // namespace

TEST(Config, PresetsMatchDeskAndPaperScale) {
  const auto desk = preset_config(Preset::desk);
  EXPECT_EQ(desk.dims.m, 60u);
  EXPECT_EQ(desk.dims.n, 120u);
  EXPECT_EQ(desk.n_train, 2000);
  EXPECT_EQ(desk.n_test, 128);
  const auto paper = preset_config(Preset::paper, ProblemKind::logistic);
  EXPECT_EQ(paper.n_train, 32000);
  EXPECT_EQ(paper.n_test, 1024);
  EXPECT_EQ(paper.dims.m, 120u);
  EXPECT_EQ(paper.dims.n, 60u);
  EXPECT_EQ(preset_config(Preset::desk, ProblemKind::logsumexp).dims.n, 20u);
}

TEST(Config, JsonOverlaysPreset) {
  const auto c = config_from_json(R"({"family":"logsumexp","dims":{"d":100},"n_test":5})");
  EXPECT_EQ(c.family, ProblemKind::logsumexp);
  EXPECT_EQ(c.dims.n, 100u);
  EXPECT_EQ(c.dims.m, 120u);
  EXPECT_EQ(c.n_test, 5);
  EXPECT_EQ(config_from_json(config_to_json(c)).dims.n, 100u);
}

TEST(Config, ErrorsNameTheField) {
  auto message = [](const char* text) {
    try {
      config_from_json(text);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(R"({"n_test":0})").find("n_test"), std::string::npos);
  EXPECT_NE(message(R"({"meta":{"batch":"x"}})").find("meta.batch"), std::string::npos);
  EXPECT_NE(message(R"({"bogus":1})").find("bogus"), std::string::npos);
  EXPECT_NE(message(R"({"strategies":[]})").find("strategies"), std::string::npos);
  EXPECT_NE(message(R"({"strategies":["newton"]})").find("newton"), std::string::npos);
  EXPECT_NE(message(R"({"dims":{"m":0}})").find("dims.m"), std::string::npos);
}

TEST(Config, HashTracksEveryField) {
  const ExperimentConfig base = tiny_config();
  const std::string h = config_hash(base);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(config_hash(base), h);
  auto changed = base;
  changed.seed += 1;
  EXPECT_NE(config_hash(changed), h);
  changed = base;
  changed.meta.lambda_reg *= 2;
  EXPECT_NE(config_hash(changed), h);
  changed = base;
  changed.hgd.eta = 0.5;
  EXPECT_NE(config_hash(changed), h);
}

TEST(Dataset, SeedsAreBasePlusIndex) {
  const Dataset ds = generate_dataset(tiny_config());
  ASSERT_EQ(ds.train.size(), 4u);
  ASSERT_EQ(ds.test.size(), 3u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(ds.train[i].seed(), 42 + i);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(ds.test[i].seed(), 46 + i);
}

TEST(Dataset, WriteIsDeterministicAndReadable) {
  const fs::path a = scratch("ds_a"), b = scratch("ds_b");
  write_dataset(generate_dataset(tiny_config(), 1), a.string());
  write_dataset(generate_dataset(tiny_config(), 3), b.string());
  EXPECT_EQ(read_file((a / "manifest.json").string()), read_file((b / "manifest.json").string()));
  EXPECT_EQ(read_file((a / "test/000002.json").string()),
            read_file((b / "test/000002.json").string()));
  const Dataset back = read_dataset(a.string());
  EXPECT_EQ(back.train.size(), 4u);
  EXPECT_EQ(config_hash(back.config), config_hash(tiny_config()));
  EXPECT_EQ(problem_to_json(back.test[1]), problem_to_json(generate_dataset(tiny_config()).test[1]));
}

TEST(Dataset, SparsityOfThreeTrainFiles) {
  ExperimentConfig c = tiny_config();
  c.n_train = 3;
  const Dataset ds = generate_dataset(c);
  for (const auto& p : ds.train) {
    const auto& a = std::get<LeastSquaresPayload>(p.payload()).a;
    EXPECT_EQ(std::count(a.flat().begin(), a.flat().end(), 0.0), 44);  // ⌈0.9·48⌉
  }
}

TEST(Dataset, CorruptedFileIsNamed) {
  const fs::path dir = scratch("ds_bad");
  write_dataset(generate_dataset(tiny_config()), dir.string());
  const fs::path victim = dir / "test/000001.json";
  std::string text = read_file(victim.string());
  text[text.find("0x") + 1] = 'y';
  write_file(victim.string(), text);
  try {
    read_dataset(dir.string());
    FAIL() << "expected failure";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("000001.json"), std::string::npos);
  }
}

TEST(Dataset, EmptyDirectoryHasNoInstances) {
  const fs::path dir = scratch("ds_empty");
  fs::create_directories(dir);
  try {
    read_dataset(dir.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no instances"), std::string::npos);
  }
  Dataset empty;
  empty.config = tiny_config();
  try {
    verify_dataset(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()), "no instances");
  }
}

TEST(Training, ZeroUpdatesEqualsSeededInitialization) {
  ExperimentConfig c = tiny_config();
  c.meta.total_updates = 0;
  const Dataset ds = generate_dataset(c);
  const TrainRun run = train_model(ds, std::nullopt, 1);
  EXPECT_EQ(checkpoint_to_json(run.state), checkpoint_to_json(initial_train_state(c.meta, c.seed)));
  EXPECT_EQ(run.log_csv, "update,mean_meta_loss,diverged_count\n");
}

TEST(Training, LogHasOneRowPerUpdate) {
  const TrainRun run = train_model(generate_dataset(tiny_config()), std::nullopt, 1);
  EXPECT_EQ(std::count(run.log_csv.begin(), run.log_csv.end(), '\n'), 3);
}

TEST(Bench, L2oWithoutModelFailsBeforeRunning) {
  const Dataset ds = generate_dataset(tiny_config());
  EXPECT_THROW(run_bench(ds, {"ls", "l2o"}, {}), Error);
  EXPECT_THROW(run_bench(ds, {"fixed:-1"}, {}), Error);
}

TEST(Bench, SharedStartingPointPerInstance) {
  const Dataset ds = generate_dataset(tiny_config());
  const auto runs = run_bench(ds, {"ls", "fixed:0.5"}, {});
  ASSERT_EQ(runs.size(), 6u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(runs[i].strategy, "ls");
    EXPECT_EQ(runs[3 + i].strategy, "fixed:0.5");
    EXPECT_EQ(runs[i].trace[0].f, runs[3 + i].trace[0].f);
  }
}

TEST(Bench, SummaryIsIndependentOfWorkers) {
  const Dataset ds = generate_dataset(tiny_config());
  const auto s1 = summary_to_json(summarize(ds.config, ds.config.strategies,
                                            run_bench(ds, ds.config.strategies, {1, false, {}})));
  const auto s4 = summary_to_json(summarize(ds.config, ds.config.strategies,
                                            run_bench(ds, ds.config.strategies, {4, false, {}})));
  EXPECT_EQ(s1, s4);
}

TEST(Bench, SummaryStatisticsMatchHandComputation) {
  ExperimentConfig c = tiny_config();
  std::vector<RunOutcome> runs(4);
  const double fs_[4][2] = {{5, 1}, {4, 2}, {6, 3}, {2, 2}};
  for (int i = 0; i < 4; ++i) {
    runs[i].strategy = "ls";
    runs[i].instance = i;
    runs[i].converged = i != 3;
    runs[i].iterations = i == 3 ? c.stop.max_iters + 1 : 10 + i;
    runs[i].trace.push_back({0, fs_[i][0], 1.0, 0.0, false, 0.0});
    if (i != 2) runs[i].trace.push_back({1, fs_[i][1], 0.5, 0.0, false, 0.0});
  }
  const BenchSummary s = summarize(c, {"ls"}, runs);
  const auto& st = s.strategies[0];
  // iterations {10, 11, 12, 501}: median 11.5, q1 10.75, q3 134.25
  EXPECT_DOUBLE_EQ(st.iterations.median, 11.5);
  EXPECT_DOUBLE_EQ(st.iterations.q1, 10.75);
  EXPECT_DOUBLE_EQ(st.iterations.q3, 134.25);
  EXPECT_EQ(st.converged, 3);
  ASSERT_EQ(st.curve_mean.size(), 2u);
  EXPECT_DOUBLE_EQ(st.curve_mean[0], 17.0 / 4);
  // Run 2 stopped at k=0 and holds f=6.
  EXPECT_DOUBLE_EQ(st.curve_mean[1], (1 + 2 + 6 + 2) / 4.0);
}

TEST(Bench, MonitorAddsColumns) {
  const Dataset ds = generate_dataset(tiny_config());
  BenchOptions opts;
  opts.monitor = true;
  const auto runs = run_bench(ds, {"ls"}, opts);
  const std::string csv = run_to_csv(runs[0]);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "k,f,grad_norm,p_dev_frob,skipped,elapsed_ms,t1_upper,t1_lower,t2_ok,gamma_est");
  EXPECT_EQ(runs[0].monitor.size() + 1, runs[0].trace.size());
}

TEST(Bench, WritesArtifactsAndDeterministicSvg) {
  const Dataset ds = generate_dataset(tiny_config());
  const auto runs = run_bench(ds, ds.config.strategies, {});
  const BenchSummary s = summarize(ds.config, ds.config.strategies, runs);
  const fs::path dir = scratch("bench");
  write_bench(s, runs, dir.string());
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "runs/fixed_0.5/000002.csv"));
  const std::string svg = render_svg(s);
  EXPECT_EQ(svg, render_svg(s));
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("polygon"), std::string::npos);
  EXPECT_EQ(read_file((dir / "curves.svg").string()), svg);
}

TEST(Verify, FreshDatasetPasses) {
  ExperimentConfig c = tiny_config();
  c.family = ProblemKind::logsumexp;
  c.dims = {12, 4, 1e-2};
  const VerifyReport r = verify_dataset(generate_dataset(c));
  EXPECT_GT(r.checks, 0);
  EXPECT_TRUE(r.ok()) << report_to_text(r);
}
