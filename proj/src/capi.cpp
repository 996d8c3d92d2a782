#include <cstdlib>
#include <cstring>
#include <new>

#include "cwss/cwss.h"
#include "harness/harness.hpp"

struct cwss_config {
  cwss::harness::ExperimentConfig cfg;
};

struct cwss_dataset {
  cwss::harness::Dataset ds;
};

struct cwss_model {
  cwss::TrainState state;
};

struct cwss_problem {
  cwss::ObjectiveProblem p;
};

namespace {

thread_local std::string g_last_error;

cwss_status status_of(cwss::ErrorKind kind) {
  using cwss::ErrorKind;
  switch (kind) {
    case ErrorKind::invalid_argument: return CWSS_E_INVALID_ARGUMENT;
    case ErrorKind::dimension_mismatch: return CWSS_E_DIMENSION;
    case ErrorKind::numeric: return CWSS_E_NUMERIC;
    case ErrorKind::not_converged: return CWSS_E_NOT_CONVERGED;
    case ErrorKind::io: return CWSS_E_IO;
    case ErrorKind::schema: return CWSS_E_SCHEMA;
    case ErrorKind::property_failure: return CWSS_E_PROPERTY;
  }
  return CWSS_E_INTERNAL;
}

template <class Fn>
cwss_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return CWSS_OK;
  } catch (const cwss::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CWSS_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CWSS_E_INTERNAL;
  }
}

void need(const void* ptr, const char* name) {
  if (!ptr) cwss::fail(cwss::ErrorKind::invalid_argument, std::string(name) + " is NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

cwss::harness::Preset preset_or_desk(const char* preset) {
  return preset ? cwss::harness::parse_preset(preset) : cwss::harness::Preset::desk;
}

}  // namespace

extern "C" {

const char* cwss_last_error(void) { return g_last_error.c_str(); }

const char* cwss_status_name(cwss_status status) {
  switch (status) {
    case CWSS_OK: return "ok";
    case CWSS_E_INVALID_ARGUMENT: return "invalid argument";
    case CWSS_E_DIMENSION: return "dimension mismatch";
    case CWSS_E_NUMERIC: return "numeric failure";
    case CWSS_E_NOT_CONVERGED: return "not converged";
    case CWSS_E_IO: return "io error";
    case CWSS_E_SCHEMA: return "schema error";
    case CWSS_E_PROPERTY: return "property failure";
    case CWSS_E_INTERNAL: return "internal error";
  }
  return "unknown";
}

void cwss_string_free(char* s) { std::free(s); }

int cwss_exit_code(cwss_status status) {
  switch (status) {
    case CWSS_OK: return 0;
    case CWSS_E_INVALID_ARGUMENT:
    case CWSS_E_DIMENSION:
    case CWSS_E_SCHEMA: return 1;
    case CWSS_E_PROPERTY: return 2;
    default: return 3;
  }
}

cwss_status cwss_config_preset(const char* preset, const char* family, cwss_config** out) {
  return guarded([&] {
    need(out, "out");
    const auto kind = family ? cwss::parse_problem_kind(family) : cwss::ProblemKind::least_squares;
    *out = new cwss_config{cwss::harness::preset_config(preset_or_desk(preset), kind)};
  });
}

cwss_status cwss_config_parse(const char* json, const char* preset, cwss_config** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = new cwss_config{cwss::harness::config_from_json(json, preset_or_desk(preset))};
  });
}

cwss_status cwss_config_load(const char* path, const char* preset, cwss_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cwss_config{cwss::harness::load_config(path, preset_or_desk(preset))};
  });
}

cwss_status cwss_config_set_seed(cwss_config* cfg, uint64_t seed) {
  return guarded([&] {
    need(cfg, "cfg");
    cfg->cfg.seed = seed;
  });
}

cwss_status cwss_config_set_strategies(cwss_config* cfg, const char* const* names, size_t count) {
  return guarded([&] {
    need(cfg, "cfg");
    if (count > 0) need(names, "names");
    std::vector<std::string> list;
    for (size_t i = 0; i < count; ++i) {
      need(names[i], "strategy name");
      list.emplace_back(names[i]);
    }
    cwss::harness::validate_strategies(list, true);
    cfg->cfg.strategies = std::move(list);
  });
}

cwss_status cwss_config_to_json(const cwss_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup(cwss::harness::config_to_json(cfg->cfg));
  });
}

cwss_status cwss_config_hash(const cwss_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup(cwss::harness::config_hash(cfg->cfg));
  });
}

void cwss_config_free(cwss_config* cfg) { delete cfg; }

cwss_status cwss_dataset_generate(const cwss_config* cfg, unsigned workers, cwss_dataset** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = new cwss_dataset{cwss::harness::generate_dataset(cfg->cfg, workers)};
  });
}

cwss_status cwss_dataset_write(const cwss_dataset* ds, const char* dir) {
  return guarded([&] {
    need(ds, "ds");
    need(dir, "dir");
    cwss::harness::write_dataset(ds->ds, dir);
  });
}

cwss_status cwss_dataset_read(const char* dir, int load_train, cwss_dataset** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new cwss_dataset{cwss::harness::read_dataset(dir, load_train != 0)};
  });
}

cwss_status cwss_dataset_counts(const cwss_dataset* ds, size_t* n_train, size_t* n_test) {
  return guarded([&] {
    need(ds, "ds");
    if (n_train) *n_train = ds->ds.train.size();
    if (n_test) *n_test = ds->ds.test.size();
  });
}

cwss_status cwss_dataset_config(const cwss_dataset* ds, cwss_config** out) {
  return guarded([&] {
    need(ds, "ds");
    need(out, "out");
    *out = new cwss_config{ds->ds.config};
  });
}

cwss_status cwss_dataset_set_config(cwss_dataset* ds, const cwss_config* cfg) {
  return guarded([&] {
    need(ds, "ds");
    need(cfg, "cfg");
    const auto& a = ds->ds.config;
    const auto& b = cfg->cfg;
    if (a.family != b.family)
      cwss::fail(cwss::ErrorKind::invalid_argument,
                 "config.family '" + std::string(cwss::to_string(b.family)) +
                     "' does not match the dataset ('" + std::string(cwss::to_string(a.family)) +
                     "')");
    if (a.dims.m != b.dims.m || a.dims.n != b.dims.n)
      cwss::fail(cwss::ErrorKind::invalid_argument, "config.dims do not match the dataset");
    b.validate();
    ds->ds.config = b;
  });
}

void cwss_dataset_free(cwss_dataset* ds) { delete ds; }

cwss_status cwss_train(const cwss_dataset* ds, const cwss_model* resume, unsigned workers,
                       const char* partial_path, cwss_model** out) {
  return guarded([&] {
    need(ds, "ds");
    need(out, "out");
    std::optional<cwss::TrainState> start;
    if (resume) start = resume->state;
    std::function<void(const cwss::TrainState&)> cb;
    if (partial_path) {
      const std::string path = partial_path;
      cb = [path](const cwss::TrainState& s) { cwss::save_checkpoint(s, path); };
    }
    auto run = cwss::harness::train_model(ds->ds, std::move(start), workers, 25, std::move(cb));
    *out = new cwss_model{std::move(run.state)};
  });
}

cwss_status cwss_model_load(const char* path, cwss_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cwss_model{cwss::load_checkpoint(path)};
  });
}

cwss_status cwss_model_save(const cwss_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    cwss::save_checkpoint(model->state, path);
  });
}

cwss_status cwss_model_update_count(const cwss_model* model, int* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = model->state.update_count;
  });
}

cwss_status cwss_model_train_log_csv(const cwss_model* model, char** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = dup(cwss::harness::train_log_to_csv(model->state.log));
  });
}

void cwss_model_free(cwss_model* model) { delete model; }

cwss_status cwss_bench(const cwss_dataset* ds, const cwss_model* model, unsigned workers,
                       int monitor, const char* out_dir, char** summary_json) {
  return guarded([&] {
    need(ds, "ds");
    cwss::harness::BenchOptions opts;
    opts.workers = workers;
    opts.monitor = monitor != 0;
    if (model) opts.model = std::make_shared<const cwss::L2OModel>(model->state.model);
    const auto& strategies = ds->ds.config.strategies;
    auto runs = cwss::harness::run_bench(ds->ds, strategies, opts);
    auto summary = cwss::harness::summarize(ds->ds.config, strategies, runs);
    if (out_dir) cwss::harness::write_bench(summary, runs, out_dir);
    if (summary_json) *summary_json = dup(cwss::harness::summary_to_json(summary));
  });
}

cwss_status cwss_verify(const cwss_dataset* ds, char** report, size_t* failures) {
  cwss::harness::VerifyReport rep;
  const cwss_status st = guarded([&] {
    need(ds, "ds");
    rep = cwss::harness::verify_dataset(ds->ds);
    if (report) *report = dup(cwss::harness::report_to_text(rep));
    if (failures) *failures = rep.failures.size();
  });
  if (st != CWSS_OK) return st;
  if (!rep.ok()) {
    g_last_error = std::to_string(rep.failures.size()) + " certificate check(s) failed";
    return CWSS_E_PROPERTY;
  }
  return CWSS_OK;
}

cwss_status cwss_problem_generate(const char* family, size_t m, size_t n, uint64_t seed,
                                  cwss_problem** out) {
  return guarded([&] {
    need(family, "family");
    need(out, "out");
    auto cfg = cwss::harness::preset_config(cwss::harness::Preset::desk,
                                            cwss::parse_problem_kind(family));
    cfg.dims.m = m;
    cfg.dims.n = n;
    *out = new cwss_problem{cwss::harness::generate_instance(cfg, seed)};
  });
}

cwss_status cwss_problem_load(const char* path, cwss_problem** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cwss_problem{cwss::load_problem(path)};
  });
}

size_t cwss_problem_dimension(const cwss_problem* p) { return p ? p->p.dimension() : 0; }

cwss_status cwss_problem_eval(const cwss_problem* p, const double* x, double* f, double* grad) {
  return guarded([&] {
    need(p, "problem");
    need(x, "x");
    const cwss::DenseVector xv(std::vector<double>(x, x + p->p.dimension()));
    if (grad) {
      auto [fv, g] = p->p.eval_grad(xv);
      std::copy(g.begin(), g.end(), grad);
      if (f) *f = fv;
    } else if (f) {
      *f = p->p.eval(xv);
    }
  });
}

cwss_status cwss_problem_solve(const cwss_problem* p, const double* x0, const char* strategy,
                               const cwss_model* model, double grad_tol, int max_iters,
                               int* iterations, int* converged, double* x_final) {
  return guarded([&] {
    need(p, "problem");
    need(x0, "x0");
    need(strategy, "strategy");
    const std::size_t n = p->p.dimension();
    cwss::harness::ExperimentConfig cfg;
    std::shared_ptr<const cwss::L2OModel> m;
    if (model) m = std::make_shared<const cwss::L2OModel>(model->state.model);
    auto strat = cwss::harness::make_strategy(strategy, cfg, m, p->p.seed());
    cwss::StopCriteria stop{grad_tol, max_iters};
    auto res = cwss::run(p->p, cwss::DenseVector(std::vector<double>(x0, x0 + n)), *strat, stop);
    if (iterations) *iterations = res.final_state.k;
    if (converged) *converged = res.converged ? 1 : 0;
    if (x_final) std::copy(res.final_state.x.begin(), res.final_state.x.end(), x_final);
  });
}

void cwss_problem_free(cwss_problem* p) { delete p; }

}  // extern "C"
