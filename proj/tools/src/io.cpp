#include "destab/cli/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace destab::cli {
namespace {

using nlohmann::json;

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

void check_header(const json& doc, const char* expected_kind) {
  if (!doc.is_object()) throw ConfigError("expected a JSON object at the top level");
  if (!doc.contains("version") || doc["version"] != kFormatVersion) {
    throw ConfigError(std::string("missing or unsupported \"version\" (expected \"") +
                      kFormatVersion + "\")");
  }
  if (expected_kind != nullptr && (!doc.contains("kind") || doc["kind"] != expected_kind)) {
    throw ConfigError(std::string("expected \"kind\": \"") + expected_kind + "\"");
  }
}

double number(const json& value, const std::string& where) {
  if (!value.is_number()) throw ConfigError(where + ": expected a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + ": non-finite number");
  return v;
}

std::size_t count(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number_integer() || doc[key].get<long long>() < 0) {
    throw ConfigError(std::string("\"") + key + "\" must be a nonnegative integer");
  }
  return doc[key].get<std::size_t>();
}

// Row-major nested array; [] is an empty matrix whose shape is filled in later.
RealMatrix matrix(const json& doc, const char* key) {
  if (!doc.contains(key)) return RealMatrix(0, 0);
  const json& rows = doc[key];
  const std::string where = std::string("matrix ") + key;
  if (!rows.is_array()) throw ConfigError(where + ": expected an array of rows");
  if (rows.empty()) return RealMatrix(0, 0);
  const std::size_t cols = rows[0].is_array() ? rows[0].size() : 0;
  RealMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != cols) {
      throw ConfigError(where + ": rows must be arrays of equal length");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          number(rows[i][j], where + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
  }
  return out;
}

// Fills in empty blocks from the dimensions the other blocks imply.
StateSpace state_space(const json& doc) {
  RealMatrix a = matrix(doc, "A"), b = matrix(doc, "B"), c = matrix(doc, "C"),
             d = matrix(doc, "D");
  const Eigen::Index n = std::max({a.rows(), b.rows(), c.cols()});
  const Eigen::Index m = d.size() > 0 ? d.cols() : b.cols();
  const Eigen::Index p = d.size() > 0 ? d.rows() : c.rows();
  if (a.size() == 0) a = RealMatrix::Zero(n, n);
  if (b.size() == 0) b = RealMatrix::Zero(n, m);
  if (c.size() == 0) c = RealMatrix::Zero(p, n);
  if (d.size() == 0) d = RealMatrix::Zero(p, m);
  return StateSpace(a, b, c, d);
}

json matrix_json(const RealMatrix& m) {
  json rows = json::array();
  if (m.size() == 0) return rows;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

void put_matrices(json& doc, const StateSpace& g) {
  doc["A"] = matrix_json(g.a());
  doc["B"] = matrix_json(g.b());
  doc["C"] = matrix_json(g.c());
  doc["D"] = matrix_json(g.d());
}

std::vector<std::string> strings(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) {
    throw ConfigError(std::string("\"") + key + "\" must be an array of strings");
  }
  std::vector<std::string> out;
  for (const json& item : doc[key]) {
    if (!item.is_string()) throw ConfigError(std::string("\"") + key + "\" must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

LoadedSystem load_system_text(const std::string& text) {
  const json doc = parse_json(text);
  check_header(doc, nullptr);
  const std::string kind = doc.contains("kind") && doc["kind"].is_string()
                               ? doc["kind"].get<std::string>()
                               : std::string("linear");
  if (kind == "linear") {
    StateSpace g = state_space(doc);
    return LoadedSystem{g, NonlinearSystem::from_linear(g), true};
  }
  if (kind == "nonlinear") {
    const std::size_t n = count(doc, "state_dim");
    const std::size_t m = count(doc, "input_dim");
    FieldSpec spec = parse_field(n, m, strings(doc, "equations"), strings(doc, "outputs"));
    std::optional<StateSpace> lin;
    if (doc.contains("linearization") && !doc["linearization"].is_null()) {
      lin = state_space(doc["linearization"]);
    }
    NonlinearSystem sys = NonlinearSystem::from_field_spec(std::move(spec), lin);
    StateSpace g = linearize(sys);
    return LoadedSystem{g, std::move(sys), false};
  }
  throw ConfigError("unknown system kind \"" + kind + "\" (expected linear or nonlinear)");
}

LoadedSystem load_system_file(const std::string& path) { return load_system_text(read_file(path)); }

AttackSystem load_attack_text(const std::string& text) {
  const json doc = parse_json(text);
  check_header(doc, "attack");
  AttackSystem att{state_space(doc), std::nullopt, 0.0, 0.0, Construction::kSiso, 0.0};
  if (doc.contains("metadata")) {
    const json& meta = doc["metadata"];
    if (!meta.is_object()) throw ConfigError("\"metadata\" must be an object");
    if (meta.contains("omega0")) {
      att.target_omega0 = meta["omega0"].is_null() ? std::numeric_limits<double>::infinity()
                                                   : number(meta["omega0"], "metadata.omega0");
    }
    if (meta.contains("claimed_norm")) {
      att.claimed_norm = number(meta["claimed_norm"], "metadata.claimed_norm");
    }
    if (meta.contains("epsilon")) att.epsilon = number(meta["epsilon"], "metadata.epsilon");
    if (meta.contains("construction")) {
      const auto name = meta["construction"].is_string()
                            ? construction_from_string(meta["construction"].get<std::string>())
                            : std::nullopt;
      if (!name) throw ConfigError("metadata.construction must be siso, mimo or near_minimal");
      att.construction = *name;
    }
  }
  return att;
}

AttackSystem load_attack_file(const std::string& path) { return load_attack_text(read_file(path)); }

std::string system_to_json(const StateSpace& g) {
  json doc;
  doc["version"] = kFormatVersion;
  doc["kind"] = "linear";
  put_matrices(doc, g);
  return doc.dump(2) + "\n";
}

std::string attack_to_json(const AttackSystem& att) {
  json doc;
  doc["version"] = kFormatVersion;
  doc["kind"] = "attack";
  put_matrices(doc, att.realization);
  json meta;
  meta["omega0"] = std::isfinite(att.target_omega0) ? json(att.target_omega0) : json(nullptr);
  meta["claimed_norm"] = att.claimed_norm;
  meta["construction"] = to_string(att.construction);
  meta["epsilon"] = att.epsilon;
  doc["metadata"] = meta;
  return doc.dump(2) + "\n";
}

std::string example_system_json() {
  json doc;
  doc["version"] = kFormatVersion;
  doc["kind"] = "nonlinear";
  doc["state_dim"] = 2;
  doc["input_dim"] = 1;
  doc["equations"] = {"x2", "-x1 - x2 - x2^3 + w1"};
  doc["outputs"] = {"x2"};
  json lin;
  put_matrices(lin, *cubic_damped_oscillator().linearization());
  doc["linearization"] = lin;
  return doc.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << contents)) throw ConfigError("cannot write " + path);
}

}  // namespace destab::cli
