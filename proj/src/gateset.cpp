// Copyright 2026 The fbtomo developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fbtomo/gateset.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "fbtomo/parity.hpp"

namespace fbt {

int NoisyGateSet::gate_index(std::string_view label) const {
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  throw std::out_of_range("unknown gate label: " + std::string(label));
}

bool NoisyGateSet::has_gate(std::string_view label) const {
  for (const auto& l : labels)
    if (l == label) return true;
  return false;
}

const Mat& NoisyGateSet::ideal_of(std::string_view label) const {
  return ideal[gate_index(label)];
}

const Mat& NoisyGateSet::noise_of(std::string_view label) const {
  return noise[gate_index(label)];
}

Mat& NoisyGateSet::noise_of(std::string_view label) {
  return noise[gate_index(label)];
}

const RowVec& NoisyGateSet::effect_row(std::string_view projection) const {
  if (projection == "native") return effect0;
  for (const auto& [name, row] : effects)
    if (name == projection) return row;
  throw std::out_of_range("unknown projection label: " + std::string(projection));
}

Mat NoisyGateSet::sequence_ptm(const GateSequence& seq) const {
  Mat acc = Mat::Identity(dim2(), dim2());
  for (const auto& label : seq) {
    const int g = gate_index(label);
    acc = ideal[g] * (noise[g] * acc);
  }
  return acc;
}

CMat cz_unitary() {
  CMat u = CMat::Identity(4, 4);
  u(3, 3) = -1.0;
  return u;
}

CMat dcz_unitary() {
  const CMat xx = kron(pauli_matrix('X'), pauli_matrix('X'));
  return xx * cz_unitary() * xx;  // diag(-1, 1, 1, 1)
}

NoisyGateSet ideal_two_qubit_gateset(CzVariant variant) {
  const PauliBasis& basis = PauliBasis::two_qubit();
  const int dd = basis.size();

  NoisyGateSet gs;
  gs.labels = {"x1", "x2", "z1", "z2", variant == CzVariant::cz ? "cz" : "dcz"};
  gs.ideal = {
      ptm_from_unitary(on_qubit(rx_unitary(M_PI / 2.0), 1)),
      ptm_from_unitary(on_qubit(rx_unitary(M_PI / 2.0), 2)),
      ptm_from_unitary(on_qubit(rz_unitary(M_PI / 2.0), 1)),
      ptm_from_unitary(on_qubit(rz_unitary(M_PI / 2.0), 2)),
      ptm_from_unitary(variant == CzVariant::cz ? cz_unitary() : dcz_unitary()),
  };
  gs.noise.assign(gs.labels.size(), Mat::Identity(dd, dd));
  gs.noise_effect = Mat::Identity(dd, dd);
  gs.noise_prep = Mat::Identity(dd, dd);

  // |down,down><down,down| in the up-first computational basis.
  CMat rho = CMat::Zero(4, 4);
  rho(3, 3) = 1.0;
  gs.rho0 = vec_state(rho, basis);
  gs.effect0 = parity_povm_odd();

  gs.effects.emplace_back("odd", parity_povm_odd());
  gs.effects.emplace_back("even", parity_povm_even());
  return gs;
}

void ClampStats::note(double raw) {
  const double excess = raw < 0.0 ? -raw : (raw > 1.0 ? raw - 1.0 : 0.0);
  if (excess > 0.0) {
    ++events;
    if (excess > worst_excess) worst_excess = excess;
  }
}

double exact_outcome_raw(const NoisyGateSet& gs, const GateSequence& seq,
                         std::string_view projection) {
  Vec v = gs.noise_prep * gs.rho0;
  for (const auto& label : seq) {
    const int g = gs.gate_index(label);
    v = gs.noise[g] * v;
    v = gs.ideal[g] * v;
  }
  v = gs.noise_effect * v;
  return gs.effect_row(projection).dot(v);
}

double exact_outcome(const NoisyGateSet& gs, const GateSequence& seq,
                     ClampStats* stats, std::string_view projection) {
  const double raw = exact_outcome_raw(gs, seq, projection);
  if (stats) stats->note(raw);
  return std::min(1.0, std::max(0.0, raw));
}

namespace {

nlohmann::json matrix_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.size();
  if (rows == 0) throw std::invalid_argument("empty matrix");
  const auto cols = j.at(0).size();
  Mat m(rows, cols);
  for (size_t i = 0; i < rows; ++i)
    for (size_t c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  return m;
}

nlohmann::json vector_to_json(const Vec& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vec vector_from_json(const nlohmann::json& j) {
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

}  // namespace

nlohmann::json gateset_to_json(const NoisyGateSet& gs) {
  nlohmann::json doc;
  doc["format"] = "fbtomo/gateset@1";
  doc["convention"] = {
      {"basis_order", "lexicographic IXYZ, qubit 1 first"},
      {"basis_normalization", "P/sqrt(d)"},
      {"ptm_entry", "Tr(P_i Phi(P_j))/d"},
      {"choi_trace", "d for TP"},
      {"noisy_gate", "G * Lambda (noise before ideal gate)"},
      {"matrix_layout", "row-major nested arrays"},
  };
  doc["labels"] = gs.labels;
  nlohmann::json gates = nlohmann::json::object();
  for (size_t i = 0; i < gs.labels.size(); ++i) {
    gates[gs.labels[i]] = {{"ideal", matrix_to_json(gs.ideal[i])},
                           {"noise", matrix_to_json(gs.noise[i])}};
  }
  doc["gates"] = std::move(gates);
  doc["spam"] = {{"noise_effect", matrix_to_json(gs.noise_effect)},
                 {"noise_prep", matrix_to_json(gs.noise_prep)},
                 {"rho0", vector_to_json(gs.rho0)},
                 {"effect0", vector_to_json(gs.effect0.transpose())}};
  nlohmann::json effects = nlohmann::json::object();
  for (const auto& [name, row] : gs.effects)
    effects[name] = vector_to_json(row.transpose());
  doc["effects"] = std::move(effects);
  return doc;
}

NoisyGateSet gateset_from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "fbtomo/gateset@1")
    throw std::invalid_argument("unsupported gateset format tag");
  NoisyGateSet gs;
  gs.labels = doc.at("labels").get<std::vector<std::string>>();
  for (const auto& label : gs.labels) {
    const auto& g = doc.at("gates").at(label);
    gs.ideal.push_back(matrix_from_json(g.at("ideal")));
    gs.noise.push_back(matrix_from_json(g.at("noise")));
  }
  const auto& spam = doc.at("spam");
  gs.noise_effect = matrix_from_json(spam.at("noise_effect"));
  gs.noise_prep = matrix_from_json(spam.at("noise_prep"));
  gs.rho0 = vector_from_json(spam.at("rho0"));
  gs.effect0 = vector_from_json(spam.at("effect0")).transpose();
  if (doc.contains("effects"))
    for (const auto& [name, arr] : doc.at("effects").items())
      gs.effects.emplace_back(name, vector_from_json(arr).transpose());
  return gs;
}

void save_gateset(const NoisyGateSet& gs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << gateset_to_json(gs).dump(2) << "\n";
}

NoisyGateSet load_gateset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json doc;
  in >> doc;
  return gateset_from_json(doc);
}

}  // namespace fbt
