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

#include "fbtomo/parity.hpp"

#include <stdexcept>

namespace fbt {

namespace {

CMat basis_projector(int index) {
  CMat p = CMat::Zero(4, 4);
  p(index, index) = 1.0;
  return p;
}

// up = |0>, down = |1>; odd parity = antiparallel spins.
RowVec projector_sum_effect(int a, int b, double weight) {
  const PauliBasis& basis = PauliBasis::two_qubit();
  const CMat e = weight * (basis_projector(a) + basis_projector(b));
  return vec_effect(e, basis);
}

}  // namespace

ParityEffects make_parity_effects() {
  ParityEffects eff;
  eff.odd = projector_sum_effect(1, 2, 0.5);   // |up,down>, |down,up>
  eff.even = projector_sum_effect(0, 3, 0.5);  // |up,up>, |down,down>
  return eff;
}

RowVec parity_povm_odd() { return projector_sum_effect(1, 2, 1.0); }

RowVec parity_povm_even() { return projector_sum_effect(0, 3, 1.0); }

RowVec identity_effect() {
  const PauliBasis& basis = PauliBasis::two_qubit();
  return vec_effect(0.5 * CMat::Identity(4, 4), basis);
}

std::vector<ProjectionSpec> default_parity_projections() {
  return {{"odd", {}}, {"even", {"x2", "x2"}}};
}

namespace {

const ProjectionSpec& find_projection(const std::vector<ProjectionSpec>& projections,
                                      const std::string& label) {
  for (const auto& p : projections)
    if (p.label == label) return p;
  throw std::invalid_argument("unknown projection label: " + label);
}

const ProjectionOutcome& outcome_for(const MultiProjectionRecord& rec,
                                     const std::string& label) {
  auto it = rec.outcomes.find(label);
  if (it == rec.outcomes.end())
    throw std::invalid_argument("record is missing outcome for projection '" +
                                label + "'");
  return it->second;
}

ObservationRecord base_record(const MultiProjectionRecord& rec,
                              const ProjectionOutcome& out) {
  ObservationRecord r;
  r.sequence = rec.sequence;
  r.observed_frequency = out.freq;
  r.shots = out.shots;
  r.timestamp = out.timestamp;
  r.batch_id = out.batch_id;
  return r;
}

}  // namespace

std::vector<ObservationRecord> unpack_to_native(
    const std::vector<MultiProjectionRecord>& records,
    const std::vector<ProjectionSpec>& projections, ReadoutMode mode,
    const std::string& keep) {
  if (projections.empty()) throw std::invalid_argument("no projections given");
  const std::string kept = keep.empty() ? projections.front().label : keep;

  std::vector<ObservationRecord> out;
  int group = 0;
  for (const auto& rec : records) {
    switch (mode) {
      case ReadoutMode::A: {
        const auto& spec = find_projection(projections, kept);
        ObservationRecord r = base_record(rec, outcome_for(rec, kept));
        r.projection = spec.label;  // prefix treated as part of the measurement
        out.push_back(std::move(r));
        break;
      }
      case ReadoutMode::B: {
        const auto& spec = find_projection(projections, kept);
        ObservationRecord r = base_record(rec, outcome_for(rec, kept));
        r.sequence.insert(r.sequence.end(), spec.prefix.begin(), spec.prefix.end());
        out.push_back(std::move(r));
        break;
      }
      case ReadoutMode::C: {
        const int g = group++;
        for (const auto& spec : projections) {
          ObservationRecord r = base_record(rec, outcome_for(rec, spec.label));
          r.projection = spec.label;
          r.group = g;
          out.push_back(std::move(r));
        }
        break;
      }
      case ReadoutMode::D: {
        for (const auto& spec : projections) {
          ObservationRecord r = base_record(rec, outcome_for(rec, spec.label));
          r.sequence.insert(r.sequence.end(), spec.prefix.begin(), spec.prefix.end());
          out.push_back(std::move(r));
        }
        break;
      }
    }
  }
  return out;
}

}  // namespace fbt
