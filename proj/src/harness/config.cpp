#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "harness.hpp"
#include "rng.hpp"

namespace cwss::harness {

using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
  fail(ErrorKind::invalid_argument, "config." + field + ": " + what);
}

void check_keys(const json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) bad_field(where, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      bad_field(where.empty() ? key : where + "." + key, "unknown field");
}

template <class T>
T number(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  const std::string name = where.empty() ? key : where + "." + key;
  if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) bad_field(name, "expected a number");
    return v.get<T>();
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!v.is_number_unsigned()) bad_field(name, "expected a non-negative integer");
    return v.get<T>();
  } else {
    if (!v.is_number_integer()) bad_field(name, "expected an integer");
    return v.get<T>();
  }
}

template <class T>
void maybe(const json& obj, const char* key, const std::string& where, T& out) {
  if (obj.contains(key)) out = number<T>(obj, key, where);
}

}  // namespace

Preset parse_preset(std::string_view name) {
  if (name == "desk") return Preset::desk;
  if (name == "paper") return Preset::paper;
  fail(ErrorKind::invalid_argument, "unknown preset '" + std::string(name) + "' (desk|paper)");
}

ExperimentConfig preset_config(Preset preset, ProblemKind family) {
  ExperimentConfig c;
  c.family = family;
  switch (family) {
    case ProblemKind::least_squares: c.dims = {60, 120, 1e-2}; break;
    case ProblemKind::logistic: c.dims = {120, 60, 1e-2}; break;
    case ProblemKind::logsumexp: c.dims = {120, 20, 1e-2}; break;
  }
  if (preset == Preset::paper) {
    c.n_train = 32000;
    c.n_test = 1024;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (dims.m < 1) bad_field("dims.m", "must be at least 1");
  if (dims.n < 1) bad_field(family == ProblemKind::logsumexp ? "dims.d" : "dims.n",
                            "must be at least 1");
  if (family == ProblemKind::logistic && !(dims.rho > 0.0)) bad_field("dims.rho", "must be positive");
  if (n_train < 0) bad_field("n_train", "must be non-negative");
  if (n_test < 1) bad_field("n_test", "must be at least 1");
  if (strategies.empty()) bad_field("strategies", "at least one strategy is required");
  if (!(stop.grad_tol > 0.0)) bad_field("stop.grad_tol", "must be positive");
  if (stop.max_iters < 1) bad_field("stop.max_iters", "must be at least 1");
  try {
    meta.validate();
  } catch (const Error& e) {
    bad_field("meta", e.what());
  }
  try {
    line_search.validate();
  } catch (const Error& e) {
    bad_field("line_search", e.what());
  }
  try {
    hgd.validate();
  } catch (const Error& e) {
    bad_field("hgd", e.what());
  }
  validate_strategies(strategies, true);
}

ExperimentConfig config_from_json(std::string_view text, Preset fallback) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("config: malformed JSON: ") + e.what());
  }
  check_keys(j, "",
             {"preset", "family", "dims", "n_train", "n_test", "strategies", "stop", "seed", "meta",
              "line_search", "hgd"});
  Preset preset = fallback;
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) bad_field("preset", "expected a string");
    preset = parse_preset(j["preset"].get<std::string>());
  }
  ProblemKind family = ProblemKind::least_squares;
  if (j.contains("family")) {
    if (!j["family"].is_string()) bad_field("family", "expected a string");
    try {
      family = parse_problem_kind(j["family"].get<std::string>());
    } catch (const Error& e) {
      bad_field("family", e.what());
    }
  }
  ExperimentConfig c = preset_config(preset, family);

  if (j.contains("dims")) {
    const json& d = j["dims"];
    if (family == ProblemKind::logsumexp) {
      check_keys(d, "dims", {"m", "d"});
      maybe(d, "d", "dims", c.dims.n);
    } else if (family == ProblemKind::logistic) {
      check_keys(d, "dims", {"m", "n", "rho"});
      maybe(d, "n", "dims", c.dims.n);
      maybe(d, "rho", "dims", c.dims.rho);
    } else {
      check_keys(d, "dims", {"m", "n"});
      maybe(d, "n", "dims", c.dims.n);
    }
    maybe(d, "m", "dims", c.dims.m);
  }
  maybe(j, "n_train", "", c.n_train);
  maybe(j, "n_test", "", c.n_test);
  maybe(j, "seed", "", c.seed);
  if (j.contains("strategies")) {
    const json& s = j["strategies"];
    if (!s.is_array()) bad_field("strategies", "expected an array of names");
    c.strategies.clear();
    for (const auto& v : s) {
      if (!v.is_string()) bad_field("strategies", "expected an array of names");
      c.strategies.push_back(v.get<std::string>());
    }
  }
  if (j.contains("stop")) {
    check_keys(j["stop"], "stop", {"grad_tol", "max_iters"});
    maybe(j["stop"], "grad_tol", "stop", c.stop.grad_tol);
    maybe(j["stop"], "max_iters", "stop", c.stop.max_iters);
  }
  if (j.contains("meta")) {
    const json& m = j["meta"];
    check_keys(m, "meta",
               {"adam_lr", "adam_beta1", "adam_beta2", "adam_eps", "batch", "total_updates",
                "inner_k", "lambda", "grad_clip", "state_init_std", "hd", "hm"});
    maybe(m, "adam_lr", "meta", c.meta.adam_lr);
    maybe(m, "adam_beta1", "meta", c.meta.adam_beta1);
    maybe(m, "adam_beta2", "meta", c.meta.adam_beta2);
    maybe(m, "adam_eps", "meta", c.meta.adam_eps);
    maybe(m, "batch", "meta", c.meta.batch);
    maybe(m, "total_updates", "meta", c.meta.total_updates);
    maybe(m, "inner_k", "meta", c.meta.inner_k);
    maybe(m, "lambda", "meta", c.meta.lambda_reg);
    maybe(m, "grad_clip", "meta", c.meta.grad_clip);
    maybe(m, "state_init_std", "meta", c.meta.state_init_std);
    maybe(m, "hd", "meta", c.meta.hd);
    maybe(m, "hm", "meta", c.meta.hm);
  }
  if (j.contains("line_search")) {
    const json& l = j["line_search"];
    check_keys(l, "line_search", {"alpha0", "shrink", "c1", "max_backtracks"});
    maybe(l, "alpha0", "line_search", c.line_search.alpha0);
    maybe(l, "shrink", "line_search", c.line_search.shrink);
    maybe(l, "c1", "line_search", c.line_search.c1);
    maybe(l, "max_backtracks", "line_search", c.line_search.max_backtracks);
  }
  if (j.contains("hgd")) {
    const json& h = j["hgd"];
    check_keys(h, "hgd", {"eta", "inner_steps", "clip_min"});
    maybe(h, "eta", "hgd", c.hgd.eta);
    maybe(h, "inner_steps", "hgd", c.hgd.inner_steps);
    maybe(h, "clip_min", "hgd", c.hgd.clip_min);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, Preset fallback) {
  return config_from_json(read_file(path), fallback);
}

namespace {

json config_json(const ExperimentConfig& c) {
  json dims;
  dims["m"] = c.dims.m;
  if (c.family == ProblemKind::logsumexp) {
    dims["d"] = c.dims.n;
  } else {
    dims["n"] = c.dims.n;
    if (c.family == ProblemKind::logistic) dims["rho"] = c.dims.rho;
  }
  const MetaConfig& m = c.meta;
  return {{"family", std::string(to_string(c.family))},
          {"dims", dims},
          {"n_train", c.n_train},
          {"n_test", c.n_test},
          {"strategies", c.strategies},
          {"stop", {{"grad_tol", c.stop.grad_tol}, {"max_iters", c.stop.max_iters}}},
          {"seed", c.seed},
          {"meta",
           {{"adam_lr", m.adam_lr},
            {"adam_beta1", m.adam_beta1},
            {"adam_beta2", m.adam_beta2},
            {"adam_eps", m.adam_eps},
            {"batch", m.batch},
            {"total_updates", m.total_updates},
            {"inner_k", m.inner_k},
            {"lambda", m.lambda_reg},
            {"grad_clip", m.grad_clip},
            {"state_init_std", m.state_init_std},
            {"hd", m.hd},
            {"hm", m.hm}}},
          {"line_search",
           {{"alpha0", c.line_search.alpha0},
            {"shrink", c.line_search.shrink},
            {"c1", c.line_search.c1},
            {"max_backtracks", c.line_search.max_backtracks}}},
          {"hgd",
           {{"eta", c.hgd.eta},
            {"inner_steps", c.hgd.inner_steps},
            {"clip_min", c.hgd.clip_min}}}};
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(); }

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config_to_json(cfg))));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) fail(ErrorKind::io, "write failed for '" + path + "'");
}

}  // namespace cwss::harness
