#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hexfloat.hpp"
#include "problems.hpp"

namespace cwss {

using nlohmann::json;

namespace {

constexpr int kProblemSchema = 1;

json hex_array(std::span<const double> values) {
  json arr = json::array();
  for (double v : values) arr.push_back(to_hex(v));
  return arr;
}

json hex_rows(const DenseMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(hex_array(m.row(i)));
  return rows;
}

[[noreturn]] void schema_error(const std::string& what) {
  fail(ErrorKind::schema, "problem file: " + what);
}

double parse_hex(const json& j, const char* field) {
  if (!j.is_string()) schema_error(std::string(field) + " must be a hex-float string");
  auto v = from_hex(j.get<std::string>());
  if (!v) schema_error(std::string(field) + " is not a finite hex float");
  return *v;
}

DenseVector parse_vector(const json& j, const char* field, std::size_t expected) {
  if (!j.is_array()) schema_error(std::string(field) + " must be an array");
  if (j.size() != expected)
    schema_error(std::string(field) + " has length " + std::to_string(j.size()) + ", expected " +
                 std::to_string(expected));
  DenseVector v(expected);
  for (std::size_t i = 0; i < expected; ++i) v[i] = parse_hex(j[i], field);
  return v;
}

DenseMatrix parse_matrix(const json& j, const char* field, std::size_t rows, std::size_t cols) {
  if (!j.is_array() || j.size() != rows)
    schema_error(std::string(field) + " must have " + std::to_string(rows) + " rows");
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const DenseVector r = parse_vector(j[i], field, cols);
    std::copy(r.begin(), r.end(), m.row(i).begin());
  }
  return m;
}

const json& field(const json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) schema_error(std::string("missing field '") + name + "'");
  return *it;
}

}  // namespace

std::string problem_to_json(const ObjectiveProblem& p) {
  json j;
  j["schema"] = kProblemSchema;
  j["kind"] = std::string(to_string(p.kind()));
  j["n"] = p.dimension();
  j["m"] = p.rows();
  j["seed"] = p.seed();
  j["lipschitz"] = to_hex(p.lipschitz());
  j["known_optimum"] = p.known_optimum() ? hex_array(p.known_optimum()->span()) : json(nullptr);
  j["known_optimal_value"] =
      p.known_optimal_value() ? json(to_hex(*p.known_optimal_value())) : json(nullptr);
  json payload;
  std::visit(
      [&payload](const auto& pl) {
        using T = std::decay_t<decltype(pl)>;
        if constexpr (std::is_same_v<T, LogisticPayload>) {
          payload["features"] = hex_rows(pl.features);
          payload["labels"] = pl.labels;
          payload["rho"] = to_hex(pl.rho);
        } else {
          payload["A"] = hex_rows(pl.a);
          payload["b"] = hex_array(pl.b.span());
        }
      },
      p.payload());
  j["payload"] = std::move(payload);
  return j.dump();
}

ObjectiveProblem problem_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    schema_error(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) schema_error("top level must be an object");
  const json& schema = field(j, "schema");
  if (!schema.is_number_integer() || schema.get<int>() != kProblemSchema)
    schema_error("unsupported schema version");
  const json& kind_j = field(j, "kind");
  if (!kind_j.is_string()) schema_error("kind must be a string");
  ProblemKind kind;
  try {
    kind = parse_problem_kind(kind_j.get<std::string>());
  } catch (const Error&) {
    schema_error("unknown kind '" + kind_j.get<std::string>() + "'");
  }
  const json& n_j = field(j, "n");
  const json& m_j = field(j, "m");
  const json& seed_j = field(j, "seed");
  if (!n_j.is_number_unsigned() || !m_j.is_number_unsigned() || !seed_j.is_number_unsigned())
    schema_error("n, m and seed must be non-negative integers");
  const auto n = n_j.get<std::size_t>();
  const auto m = m_j.get<std::size_t>();
  const auto seed = seed_j.get<std::uint64_t>();
  if (n == 0 || m == 0) schema_error("n and m must be positive");
  const double lip = parse_hex(field(j, "lipschitz"), "lipschitz");
  if (!(lip > 0.0)) schema_error("lipschitz must be positive");

  std::optional<DenseVector> xstar;
  if (const json& xs = field(j, "known_optimum"); !xs.is_null())
    xstar = parse_vector(xs, "known_optimum", n);
  std::optional<double> fstar;
  if (const json& fs = field(j, "known_optimal_value"); !fs.is_null())
    fstar = parse_hex(fs, "known_optimal_value");

  const json& pl = field(j, "payload");
  if (!pl.is_object()) schema_error("payload must be an object");
  try {
    switch (kind) {
      case ProblemKind::least_squares:
        return ObjectiveProblem(LeastSquaresPayload{parse_matrix(field(pl, "A"), "A", m, n),
                                                    parse_vector(field(pl, "b"), "b", m)},
                                seed, lip, std::move(xstar), fstar);
      case ProblemKind::logsumexp:
        return ObjectiveProblem(LogSumExpPayload{parse_matrix(field(pl, "A"), "A", m, n),
                                                 parse_vector(field(pl, "b"), "b", m)},
                                seed, lip, std::move(xstar), fstar);
      case ProblemKind::logistic: {
        const json& lj = field(pl, "labels");
        if (!lj.is_array() || lj.size() != m) schema_error("labels must have length m");
        std::vector<int> labels;
        for (const auto& l : lj) {
          if (!l.is_number_integer() || (l.get<int>() != 0 && l.get<int>() != 1))
            schema_error("labels must be 0 or 1");
          labels.push_back(l.get<int>());
        }
        return ObjectiveProblem(
            LogisticPayload{parse_matrix(field(pl, "features"), "features", m, n),
                            std::move(labels), parse_hex(field(pl, "rho"), "rho")},
            seed, lip, std::move(xstar), fstar);
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::schema) throw;
    schema_error(e.what());
  }
  schema_error("unreachable kind");
}

void save_problem(const ObjectiveProblem& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  out << problem_to_json(p) << '\n';
  if (!out) fail(ErrorKind::io, "write failed for '" + path + "'");
}

ObjectiveProblem load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return problem_from_json(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace cwss
