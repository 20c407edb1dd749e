#include "mflq/model_io.hpp"

#include <fstream>

namespace mflq {

using nlohmann::json;

namespace {

Matrix parse_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw ModelError(name + ": expected a non-empty nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) throw ModelError(name + ": matrix rows must be arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ModelError(name + ": ragged matrix row " + std::to_string(r));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ModelError(name + ": non-numeric entry");
      out(r, c) = v.get<double>();
    }
  }
  return out;
}

bool is_matrix(const json& j) {
  return j.is_array() && !j.empty() && j[0].is_array() && (j[0].empty() || !j[0][0].is_array());
}

CoefficientTrack parse_track(const json& j, const std::string& name) {
  if (is_matrix(j)) return CoefficientTrack(parse_matrix(j, name));
  if (!j.is_array() || j.empty()) throw ModelError(name + ": expected a matrix or a list of matrices");
  std::vector<Matrix> values;
  values.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    values.push_back(parse_matrix(j[i], name + "[" + std::to_string(i) + "]"));
  }
  return CoefficientTrack(std::move(values));
}

CoefficientTrack track_or_zero(const json& j, const char* key, Eigen::Index rows, Eigen::Index cols) {
  if (!j.contains(key)) return CoefficientTrack::zero(rows, cols);
  return parse_track(j.at(key), key);
}

std::vector<CoefficientTrack> atom_tracks(const json& j, const char* key, std::size_t K,
                                          Eigen::Index rows, Eigen::Index cols) {
  if (!j.contains(key)) return std::vector<CoefficientTrack>(K, CoefficientTrack::zero(rows, cols));
  const json& list = j.at(key);
  if (!list.is_array()) throw ModelError(std::string(key) + ": expected a list indexed by atom");
  std::vector<CoefficientTrack> out;
  for (std::size_t k = 0; k < list.size(); ++k) {
    out.push_back(parse_track(list[k], std::string(key) + "[" + std::to_string(k) + "]"));
  }
  return out;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json track_to_json(const CoefficientTrack& t) {
  if (t.is_constant()) return matrix_to_json(t.at(0));
  json list = json::array();
  for (const auto& v : t.values()) list.push_back(matrix_to_json(v));
  return list;
}

template <class T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw ModelError(std::string("model is missing required key '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

ModelSpec parse_model(const json& j, std::vector<std::string>* warnings) {
  if (!j.is_object()) throw ModelError("model must be a JSON object");
  ModelSpec s;
  try {
    s.n = required<int>(j, "n");
    s.m = required<int>(j, "m");
    s.T = required<double>(j, "T");
    s.n_steps = required<int>(j, "n_steps");
    s.delta = required<double>(j, "delta");
    const auto x0 = required<std::vector<double>>(j, "x0");
    s.x0 = Eigen::Map<const Vector>(x0.data(), static_cast<Eigen::Index>(x0.size()));
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed model header: ") + e.what());
  }
  if (s.n < 1 || s.m < 1) throw ModelError("dimensions n and m must be positive");

  if (j.contains("jump")) {
    const json& jump = j.at("jump");
    if (jump.contains("atoms")) {
      for (const auto& a : jump.at("atoms")) {
        JumpAtom atom;
        atom.label = a.value("label", "theta" + std::to_string(s.jump.atoms.size() + 1));
        if (!a.contains("nu") || !a.at("nu").is_number()) throw ModelError("jump atom without numeric 'nu'");
        atom.nu = a.at("nu").get<double>();
        s.jump.atoms.push_back(std::move(atom));
      }
    }
  }
  const std::size_t K = s.jump.size();
  const Eigen::Index n = s.n, m = s.m;
  s.A = track_or_zero(j, "A", n, n);
  s.Abar = track_or_zero(j, "Abar", n, n);
  s.C = track_or_zero(j, "C", n, n);
  s.Cbar = track_or_zero(j, "Cbar", n, n);
  s.Q = track_or_zero(j, "Q", n, n);
  s.Qbar = track_or_zero(j, "Qbar", n, n);
  s.B = track_or_zero(j, "B", n, m);
  s.Bbar = track_or_zero(j, "Bbar", n, m);
  s.D = track_or_zero(j, "D", n, m);
  s.Dbar = track_or_zero(j, "Dbar", n, m);
  s.N = track_or_zero(j, "N", m, m);
  s.Nbar = track_or_zero(j, "Nbar", m, m);
  s.E = atom_tracks(j, "E", K, n, n);
  s.Ebar = atom_tracks(j, "Ebar", K, n, n);
  s.F = atom_tracks(j, "F", K, n, m);
  s.Fbar = atom_tracks(j, "Fbar", K, n, m);
  s.G = j.contains("G") ? parse_matrix(j.at("G"), "G") : Matrix::Zero(n, n);
  s.Gbar = j.contains("Gbar") ? parse_matrix(j.at("Gbar"), "Gbar") : Matrix::Zero(n, n);

  auto w = symmetrize_weights(s);
  if (warnings) warnings->insert(warnings->end(), w.begin(), w.end());
  return s;
}

ModelSpec load_model(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ModelError("cannot parse model file " + path.string() + ": " + e.what());
  }
  return parse_model(j, warnings);
}

json model_to_json(const ModelSpec& s) {
  json j;
  j["n"] = s.n;
  j["m"] = s.m;
  j["T"] = s.T;
  j["n_steps"] = s.n_steps;
  j["x0"] = std::vector<double>(s.x0.data(), s.x0.data() + s.x0.size());
  j["delta"] = s.delta;
  json atoms = json::array();
  for (const auto& a : s.jump.atoms) atoms.push_back({{"label", a.label}, {"nu", a.nu}});
  j["jump"] = {{"atoms", atoms}};
  j["A"] = track_to_json(s.A);
  j["Abar"] = track_to_json(s.Abar);
  j["B"] = track_to_json(s.B);
  j["Bbar"] = track_to_json(s.Bbar);
  j["C"] = track_to_json(s.C);
  j["Cbar"] = track_to_json(s.Cbar);
  j["D"] = track_to_json(s.D);
  j["Dbar"] = track_to_json(s.Dbar);
  auto per_atom = [](const std::vector<CoefficientTrack>& ts) {
    json list = json::array();
    for (const auto& t : ts) list.push_back(track_to_json(t));
    return list;
  };
  j["E"] = per_atom(s.E);
  j["Ebar"] = per_atom(s.Ebar);
  j["F"] = per_atom(s.F);
  j["Fbar"] = per_atom(s.Fbar);
  j["Q"] = track_to_json(s.Q);
  j["Qbar"] = track_to_json(s.Qbar);
  j["N"] = track_to_json(s.N);
  j["Nbar"] = track_to_json(s.Nbar);
  j["G"] = matrix_to_json(s.G);
  j["Gbar"] = matrix_to_json(s.Gbar);
  return j;
}

void save_model(const ModelSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write model file " + path.string());
  out << model_to_json(spec).dump(2) << '\n';
}

}  // namespace mflq
