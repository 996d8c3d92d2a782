#include <cstdio>
#include <filesystem>

#include <json.hpp>

#include "harness.hpp"
#include "parallel.hpp"

namespace cwss::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kManifestSchema = 1;

std::string instance_name(const char* split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s/%06zu.json", split, i);
  return buf;
}

[[noreturn]] void manifest_error(const std::string& dir, const std::string& what) {
  fail(ErrorKind::schema, (fs::path(dir) / "manifest.json").string() + ": " + what);
}

}  // namespace

ObjectiveProblem generate_instance(const ExperimentConfig& cfg, std::uint64_t seed) {
  switch (cfg.family) {
    case ProblemKind::least_squares: return gen_least_squares(cfg.dims.m, cfg.dims.n, seed);
    case ProblemKind::logistic: return gen_logistic(cfg.dims.m, cfg.dims.n, cfg.dims.rho, seed);
    case ProblemKind::logsumexp: return gen_logsumexp(cfg.dims.m, cfg.dims.n, seed);
  }
  fail(ErrorKind::invalid_argument, "unknown family");
}

Dataset generate_dataset(const ExperimentConfig& cfg, unsigned workers) {
  cfg.validate();
  const std::size_t total = static_cast<std::size_t>(cfg.n_train) + cfg.n_test;
  std::vector<std::optional<ObjectiveProblem>> slots(total);
  parallel_for(total, workers,
               [&](std::size_t i) { slots[i].emplace(generate_instance(cfg, cfg.seed + i)); });
  Dataset ds{cfg, {}, {}};
  ds.train.reserve(cfg.n_train);
  ds.test.reserve(cfg.n_test);
  for (std::size_t i = 0; i < total; ++i)
    (i < static_cast<std::size_t>(cfg.n_train) ? ds.train : ds.test).push_back(std::move(*slots[i]));
  return ds;
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "train", ec);
  fs::create_directories(fs::path(dir) / "test", ec);
  if (ec) fail(ErrorKind::io, "cannot create dataset directory '" + dir + "': " + ec.message());

  json manifest;
  manifest["schema"] = kManifestSchema;
  manifest["config"] = json::parse(config_to_json(ds.config));
  manifest["config_hash"] = config_hash(ds.config);
  manifest["family"] = std::string(to_string(ds.config.family));
  json train = json::array(), test = json::array();
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    const std::string name = instance_name("train", i);
    save_problem(ds.train[i], (fs::path(dir) / name).string());
    train.push_back({{"file", name}, {"seed", ds.train[i].seed()}});
  }
  for (std::size_t i = 0; i < ds.test.size(); ++i) {
    const std::string name = instance_name("test", i);
    save_problem(ds.test[i], (fs::path(dir) / name).string());
    test.push_back({{"file", name}, {"seed", ds.test[i].seed()}});
  }
  manifest["train"] = std::move(train);
  manifest["test"] = std::move(test);
  write_file((fs::path(dir) / "manifest.json").string(), manifest.dump(1) + "\n");
}

Dataset read_dataset(const std::string& dir, bool load_train) {
  const std::string path = (fs::path(dir) / "manifest.json").string();
  if (!fs::exists(path)) fail(ErrorKind::io, "no instances: '" + path + "' does not exist");
  json m;
  try {
    m = json::parse(read_file(path));
  } catch (const json::exception& e) {
    manifest_error(dir, std::string("malformed JSON: ") + e.what());
  }
  if (!m.is_object() || !m.contains("config") || !m.contains("train") || !m.contains("test") ||
      !m["train"].is_array() || !m["test"].is_array())
    manifest_error(dir, "missing config, train or test");
  if (m.value("schema", 0) != kManifestSchema) manifest_error(dir, "unsupported schema version");

  Dataset ds;
  ds.config = config_from_json(m["config"].dump());
  if (m.contains("config_hash") && m["config_hash"] != config_hash(ds.config))
    manifest_error(dir, "config_hash does not match the recorded config");
  if (m["train"].empty() && m["test"].empty()) fail(ErrorKind::invalid_argument, "no instances");

  auto load_split = [&](const json& entries, std::vector<ObjectiveProblem>& out) {
    for (const auto& e : entries) {
      if (!e.is_object() || !e.contains("file") || !e["file"].is_string())
        manifest_error(dir, "instance entry without a file name");
      ObjectiveProblem p = load_problem((fs::path(dir) / e["file"].get<std::string>()).string());
      if (p.kind() != ds.config.family)
        fail(ErrorKind::schema, e["file"].get<std::string>() + ": family does not match manifest");
      out.push_back(std::move(p));
    }
  };
  if (load_train) load_split(m["train"], ds.train);
  load_split(m["test"], ds.test);
  return ds;
}

}  // namespace cwss::harness
