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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fbtomo/pauli.hpp"
#include "fbtomo/records.hpp"

namespace fbt {

// Symmetrized parity effect vectors,
//   odd  = 1/2 (<<up,down| + <<down,up|),
//   even = 1/2 (<<up,up|   + <<down,down|),
// satisfying odd + even = vec(I/2) and even = odd * ptm(x2)^2.
//
// Note these carry the conventional 1/2 weight; the POVM elements used as the
// gate set's native measurement are the unweighted projector sums below, so
// that outcome probabilities land in [0,1].
struct ParityEffects {
  RowVec odd;
  RowVec even;
};

ParityEffects make_parity_effects();
RowVec parity_povm_odd();
RowVec parity_povm_even();
RowVec identity_effect();  // vec(I/2): odd + even completeness target

// A measurement projection realized by a gate prefix before the native
// readout, e.g. the parity inversion [x2, x2].
struct ProjectionSpec {
  std::string label;
  GateSequence prefix;
};

std::vector<ProjectionSpec> default_parity_projections();  // odd (empty), even ([x2,x2])

// How multi-projection datasets are fed to the estimator:
//   A: one projection kept, prefix discarded, effect labeled per projection.
//   B: one projection kept, prefix appended to the sequence, native effect.
//   C: all projections kept as effect-labeled rows sharing one linearization
//      point (grouped records).
//   D: all projections, each absorbed as in B; M sequences become N_E * M.
enum class ReadoutMode { A, B, C, D };

struct ProjectionOutcome {
  double freq = 0.0;
  int shots = 0;
  double timestamp = 0.0;
  std::optional<int> batch_id;
};

struct MultiProjectionRecord {
  GateSequence sequence;
  std::map<std::string, ProjectionOutcome> outcomes;
};

// Throws std::invalid_argument when an outcome required by the mode is missing.
// `keep` selects the projection for modes A and B (default: first spec).
std::vector<ObservationRecord> unpack_to_native(
    const std::vector<MultiProjectionRecord>& records,
    const std::vector<ProjectionSpec>& projections, ReadoutMode mode,
    const std::string& keep = "");

}  // namespace fbt
