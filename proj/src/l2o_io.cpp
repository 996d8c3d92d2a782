#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hexfloat.hpp"
#include "l2o.hpp"

namespace cwss {

using nlohmann::json;

namespace {

constexpr int kCheckpointSchema = 1;

json hex_array(std::span<const double> values) {
  json arr = json::array();
  for (double v : values) arr.push_back(to_hex(v));
  return arr;
}

[[noreturn]] void schema_error(const std::string& what) {
  fail(ErrorKind::schema, "checkpoint: " + what);
}

const json& field(const json& obj, const char* name) {
  if (!obj.is_object()) schema_error("expected an object around '" + std::string(name) + "'");
  auto it = obj.find(name);
  if (it == obj.end()) schema_error(std::string("missing field '") + name + "'");
  return *it;
}

void read_into(const json& arr, const char* name, std::span<double> out) {
  if (!arr.is_array() || arr.size() != out.size())
    schema_error(std::string(name) + " must have " + std::to_string(out.size()) + " entries");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!arr[i].is_string()) schema_error(std::string(name) + " entries must be hex strings");
    auto v = from_hex(arr[i].get<std::string>());
    if (!v) schema_error(std::string(name) + " contains a non-finite or malformed value");
    out[i] = *v;
  }
}

}  // namespace

std::string checkpoint_to_json(const TrainState& state) {
  const L2OModel& m = state.model;
  json j;
  j["schema"] = kCheckpointSchema;
  j["hd"] = m.hd();
  j["hm"] = m.hm();
  j["lstm"] = {{"W", hex_array(m.lstm_w())}, {"U", hex_array(m.lstm_u())},
               {"b", hex_array(m.lstm_b())}};
  j["mlp"] = {{"W1", hex_array(m.mlp_w1())},
              {"b1", hex_array(m.mlp_b1())},
              {"w2", hex_array(m.mlp_w2())},
              {"b2", to_hex(m.mlp_b2())}};
  j["adam_moments"] = {{"m", hex_array(state.adam.m)},
                       {"v", hex_array(state.adam.v)},
                       {"t", state.adam.t}};
  j["update_count"] = state.update_count;
  json log = json::array();
  for (const auto& e : state.log)
    log.push_back({{"update", e.update},
                   {"mean_meta_loss", to_hex(e.mean_meta_loss)},
                   {"diverged_count", e.diverged_count}});
  j["log"] = std::move(log);
  return j.dump();
}

static TrainState checkpoint_from_json_impl(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    schema_error(std::string("malformed JSON: ") + e.what());
  }
  const json& schema = field(j, "schema");
  if (!schema.is_number_integer() || schema.get<int>() != kCheckpointSchema)
    schema_error("unsupported schema version");
  const json& hd_j = field(j, "hd");
  const json& hm_j = field(j, "hm");
  if (!hd_j.is_number_integer() || !hm_j.is_number_integer() || hd_j.get<int>() < 1 ||
      hm_j.get<int>() < 1 || hd_j.get<int>() > 4096 || hm_j.get<int>() > 4096)
    schema_error("hd and hm must be positive integers");

  L2OModel model(hd_j.get<int>(), hm_j.get<int>());
  const auto o = model.offsets();
  auto params = model.params();
  const json& lstm = field(j, "lstm");
  const json& mlp = field(j, "mlp");
  read_into(field(lstm, "W"), "lstm.W", params.subspan(o.w, o.u - o.w));
  read_into(field(lstm, "U"), "lstm.U", params.subspan(o.u, o.b - o.u));
  read_into(field(lstm, "b"), "lstm.b", params.subspan(o.b, o.w1 - o.b));
  read_into(field(mlp, "W1"), "mlp.W1", params.subspan(o.w1, o.b1 - o.w1));
  read_into(field(mlp, "b1"), "mlp.b1", params.subspan(o.b1, o.w2 - o.b1));
  read_into(field(mlp, "w2"), "mlp.w2", params.subspan(o.w2, o.b2 - o.w2));
  read_into(json::array({field(mlp, "b2")}), "mlp.b2", params.subspan(o.b2, 1));

  AdamMoments adam = AdamMoments::zeros(model.parameter_count());
  const json& am = field(j, "adam_moments");
  read_into(field(am, "m"), "adam_moments.m", adam.m);
  read_into(field(am, "v"), "adam_moments.v", adam.v);
  const json& t = field(am, "t");
  if (!t.is_number_integer() || t.get<long long>() < 0) schema_error("adam_moments.t invalid");
  adam.t = t.get<long long>();

  const json& uc = field(j, "update_count");
  if (!uc.is_number_integer() || uc.get<int>() < 0) schema_error("update_count invalid");

  TrainState state{std::move(model), std::move(adam), uc.get<int>(), {}};
  if (auto it = j.find("log"); it != j.end()) {
    if (!it->is_array()) schema_error("log must be an array");
    for (const auto& e : *it) {
      TrainLogEntry entry;
      entry.update = field(e, "update").get<int>();
      double loss = 0.0;
      read_into(json::array({field(e, "mean_meta_loss")}), "log.mean_meta_loss", {&loss, 1});
      entry.mean_meta_loss = loss;
      entry.diverged_count = field(e, "diverged_count").get<int>();
      state.log.push_back(entry);
    }
  }
  return state;
}

TrainState checkpoint_from_json(std::string_view text) {
  try {
    return checkpoint_from_json_impl(text);
  } catch (const json::exception& e) {
    schema_error(std::string("unexpected value: ") + e.what());
  }
}

void save_checkpoint(const TrainState& state, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot open '" + tmp + "' for writing");
    out << checkpoint_to_json(state) << '\n';
    if (!out) fail(ErrorKind::io, "write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    fail(ErrorKind::io, "cannot move checkpoint into place at '" + path + "'");
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open checkpoint '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return checkpoint_from_json(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace cwss
