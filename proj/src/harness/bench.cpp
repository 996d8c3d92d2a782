#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "harness.hpp"
#include "parallel.hpp"

namespace cwss::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::optional<double> fixed_alpha(const std::string& name) {
  if (name.rfind("fixed:", 0) != 0) return std::nullopt;
  const std::string_view rest = std::string_view(name).substr(6);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
  if (ec != std::errc() || ptr != rest.data() + rest.size() || !(v > 0.0) || !std::isfinite(v))
    fail(ErrorKind::invalid_argument, "strategy '" + name + "': alpha must be a positive number");
  return v;
}

}  // namespace

void validate_strategies(const std::vector<std::string>& names, bool have_model) {
  if (names.empty()) fail(ErrorKind::invalid_argument, "at least one strategy is required");
  for (const auto& n : names) {
    if (n == "ls" || n == "hgd") continue;
    if (n == "l2o") {
      if (!have_model)
        fail(ErrorKind::invalid_argument, "strategy l2o requires a checkpoint (--checkpoint)");
      continue;
    }
    if (fixed_alpha(n)) continue;
    fail(ErrorKind::invalid_argument, "unknown strategy '" + n + "' (ls|hgd|l2o|fixed:<alpha>)");
  }
}

std::unique_ptr<StepStrategy> make_strategy(const std::string& name, const ExperimentConfig& cfg,
                                            std::shared_ptr<const L2OModel> model,
                                            std::uint64_t run_seed) {
  if (name == "ls") return std::make_unique<LineSearchStrategy>(cfg.line_search);
  if (name == "hgd") return std::make_unique<HgdStrategy>(cfg.hgd);
  if (name == "l2o") {
    if (!model) fail(ErrorKind::invalid_argument, "strategy l2o requires a checkpoint");
    return std::make_unique<L2OStrategy>(std::move(model), run_seed, cfg.meta.state_init_std);
  }
  if (auto a = fixed_alpha(name)) return std::make_unique<FixedStrategy>(*a);
  fail(ErrorKind::invalid_argument, "unknown strategy '" + name + "'");
}

DenseVector bench_x0(const ExperimentConfig& cfg, std::size_t index, std::size_t n) {
  Rng rng = make_rng(cfg.seed, "bench/x0", index);
  return unit_gaussian(rng, n);
}

std::vector<RunOutcome> run_bench(const Dataset& ds, const std::vector<std::string>& strategies,
                                  const BenchOptions& opts) {
  validate_strategies(strategies, opts.model != nullptr);
  if (ds.test.empty()) fail(ErrorKind::invalid_argument, "no instances in the test split");
  const ExperimentConfig& cfg = ds.config;
  const std::size_t n_inst = ds.test.size();
  std::vector<RunOutcome> out(strategies.size() * n_inst);

  parallel_for(out.size(), opts.workers, [&](std::size_t job) {
    const std::size_t si = job / n_inst;
    const std::size_t ii = job % n_inst;
    const ObjectiveProblem& problem = ds.test[ii];
    RunOutcome& r = out[job];
    r.strategy = strategies[si];
    r.instance = ii;
    auto strategy = make_strategy(strategies[si], cfg, opts.model,
                                  stream_seed(cfg.seed, "bench/run-state", ii));
    Theorem1Params t1;
    t1.lipschitz = problem.lipschitz();
    StepObserver observer;
    if (opts.monitor)
      observer = [&](const StepEvent& e) {
        r.monitor.push_back(condition_report(e.p, e.before.h_inv, e.before.grad, t1));
      };
    try {
      RunResult res = run(problem, bench_x0(cfg, ii, problem.dimension()), *strategy, cfg.stop,
                          observer);
      r.trace = std::move(res.trace);
      r.converged = res.converged;
    } catch (const RunAborted& e) {
      r.trace = e.trace();
      r.diverged = true;
    }
    if (!r.trace.empty() && !std::isfinite(r.trace.back().f)) r.diverged = true;
    if (r.monitor.size() + 1 > r.trace.size())
      r.monitor.resize(r.trace.empty() ? 0 : r.trace.size() - 1);
    r.iterations = r.converged ? r.trace.back().k : cfg.stop.max_iters + 1;
  });
  return out;
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

Quantiles quantiles(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return {sorted_quantile(v, 0.5), sorted_quantile(v, 0.25), sorted_quantile(v, 0.75)};
}

json quantiles_json(const Quantiles& q) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"median", num(q.median)}, {"q1", num(q.q1)}, {"q3", num(q.q3)}, {"iqr", num(q.iqr())}};
}

}  // namespace

BenchSummary summarize(const ExperimentConfig& cfg, const std::vector<std::string>& strategies,
                       const std::vector<RunOutcome>& runs) {
  BenchSummary s;
  s.config_hash = config_hash(cfg);
  s.family = cfg.family;
  s.stop = cfg.stop;
  for (const auto& name : strategies) {
    StrategySummary st;
    st.name = name;
    std::vector<double> iters, final_f, final_g;
    std::vector<const RunOutcome*> finite_runs;
    std::size_t longest = 0;
    for (const auto& r : runs) {
      if (r.strategy != name) continue;
      ++st.runs;
      st.converged += r.converged ? 1 : 0;
      iters.push_back(r.iterations);
      if (r.diverged) {
        ++st.divergence_count;
        continue;
      }
      final_f.push_back(r.trace.back().f);
      final_g.push_back(r.trace.back().grad_norm);
      finite_runs.push_back(&r);
      longest = std::max(longest, r.trace.size());
    }
    st.iterations = quantiles(iters);
    st.final_f = quantiles(final_f);
    st.final_grad_norm = quantiles(final_g);
    // Finished runs hold their last value so every curve point averages the
    // same set of runs.
    for (std::size_t k = 0; k < longest; ++k) {
      double sum = 0.0;
      for (const RunOutcome* r : finite_runs) sum += r->trace[std::min(k, r->trace.size() - 1)].f;
      const double mean = sum / static_cast<double>(finite_runs.size());
      double sq = 0.0;
      for (const RunOutcome* r : finite_runs) {
        const double dv = r->trace[std::min(k, r->trace.size() - 1)].f - mean;
        sq += dv * dv;
      }
      st.curve_mean.push_back(mean);
      st.curve_std.push_back(std::sqrt(sq / static_cast<double>(finite_runs.size())));
    }
    s.strategies.push_back(std::move(st));
  }
  s.instances = runs.empty() ? 0 : runs.size() / strategies.size();
  return s;
}

std::string summary_to_json(const BenchSummary& s) {
  json j;
  j["schema"] = 1;
  j["config_hash"] = s.config_hash;
  j["family"] = std::string(to_string(s.family));
  j["instances"] = s.instances;
  j["stop"] = {{"grad_tol", s.stop.grad_tol}, {"max_iters", s.stop.max_iters}};
  json arr = json::array();
  for (const auto& st : s.strategies) {
    arr.push_back({{"name", st.name},
                   {"runs", st.runs},
                   {"converged", st.converged},
                   {"divergence_count", st.divergence_count},
                   {"iterations", quantiles_json(st.iterations)},
                   {"final_f", quantiles_json(st.final_f)},
                   {"final_grad_norm", quantiles_json(st.final_grad_norm)},
                   {"curve", {{"mean", st.curve_mean}, {"std", st.curve_std}}}});
  }
  j["strategies"] = std::move(arr);
  return j.dump(1) + "\n";
}

std::string run_to_csv(const RunOutcome& run) {
  std::string csv = trace_to_csv(run.trace);
  if (run.monitor.empty()) return csv;
  // Monitor values describe the step taken from row k, so the final row is blank.
  std::string out;
  std::size_t row = 0, pos = 0;
  while (pos < csv.size()) {
    const std::size_t eol = csv.find('\n', pos);
    out.append(csv, pos, eol - pos);
    if (row == 0) {
      out += ",t1_upper,t1_lower,t2_ok,gamma_est";
    } else if (row - 1 < run.monitor.size()) {
      const ConditionReport& m = run.monitor[row - 1];
      out += std::string(",") + (m.theorem1_upper_ok ? "1" : "0") + "," +
             (m.theorem1_lower_ok ? "1" : "0") + "," + (m.theorem2_ok ? "1" : "0") + "," +
             format_g17(m.gamma_est);
    } else {
      out += ",,,,";
    }
    out += '\n';
    pos = eol + 1;
    ++row;
  }
  return out;
}

void write_bench(const BenchSummary& s, const std::vector<RunOutcome>& runs,
                 const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create '" + dir + "': " + ec.message());
  for (const auto& r : runs) {
    std::string safe = r.strategy;
    std::replace(safe.begin(), safe.end(), ':', '_');
    const fs::path sub = fs::path(dir) / "runs" / safe;
    fs::create_directories(sub, ec);
    if (ec) fail(ErrorKind::io, "cannot create '" + sub.string() + "': " + ec.message());
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.csv", r.instance);
    write_file((sub / name).string(), run_to_csv(r));
  }
  write_file((fs::path(dir) / "summary.json").string(), summary_to_json(s));
  write_file((fs::path(dir) / "curves.svg").string(), render_svg(s));
}

}  // namespace cwss::harness
