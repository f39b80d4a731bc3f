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

#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fbtomo/pauli.hpp"

namespace fbt {

using GateSequence = std::vector<std::string>;

// A noisy gate set: ideal PTMs G_i plus per-gate noise channels Lambda_i, SPAM
// noise channels Lambda_E / Lambda_rho, and the native prep/effect vectors.
// Composition order is fixed: the noisy gate is G_i * Lambda_i, i.e. the noise
// channel acts before the ideal gate.
struct NoisyGateSet {
  std::vector<std::string> labels;
  std::vector<Mat> ideal;
  std::vector<Mat> noise;
  Mat noise_effect;  // Lambda_E
  Mat noise_prep;    // Lambda_rho
  Vec rho0;          // |rho>>
  RowVec effect0;    // native <<E| (odd-parity POVM element by default)
  // Named measurement effects for projection-absorbed analysis ("odd","even").
  std::vector<std::pair<std::string, RowVec>> effects;

  int dim2() const { return static_cast<int>(rho0.size()); }
  int gate_index(std::string_view label) const;  // throws on unknown label
  bool has_gate(std::string_view label) const;
  const Mat& ideal_of(std::string_view label) const;
  const Mat& noise_of(std::string_view label) const;
  Mat& noise_of(std::string_view label);
  const RowVec& effect_row(std::string_view projection) const;  // "native" -> effect0

  // Noisy composite PTM of a full sequence (SPAM channels excluded).
  Mat sequence_ptm(const GateSequence& seq) const;
};

enum class CzVariant { cz, dcz };

// The five-gate two-qubit set {x1, x2, z1, z2, cz|dcz} with identity noise,
// |down,down> preparation and native odd-parity measurement.
NoisyGateSet ideal_two_qubit_gateset(CzVariant variant = CzVariant::cz);

// Ideal unitaries used to build the set (exposed for tests and the simulator).
CMat cz_unitary();
CMat dcz_unitary();  // CZ conjugated by a pi-pulse on both qubits

struct ClampStats {
  long events = 0;
  double worst_excess = 0.0;
  void note(double raw);
};

// <<E| Lambda_E prod(G_i Lambda_i) Lambda_rho |rho>>, clamped to [0,1] at the
// output only; clamp events are recorded in `stats` when provided. Unknown
// labels throw std::out_of_range.
double exact_outcome(const NoisyGateSet& gs, const GateSequence& seq,
                     ClampStats* stats = nullptr,
                     std::string_view projection = "native");

// Same bilinear form without the output clamp.
double exact_outcome_raw(const NoisyGateSet& gs, const GateSequence& seq,
                         std::string_view projection = "native");

// Serialization: a single JSON document with a convention header. Doubles are
// emitted with shortest-round-trip formatting, so the round trip is bit exact.
nlohmann::json gateset_to_json(const NoisyGateSet& gs);
NoisyGateSet gateset_from_json(const nlohmann::json& doc);
void save_gateset(const NoisyGateSet& gs, const std::string& path);
NoisyGateSet load_gateset(const std::string& path);

}  // namespace fbt
