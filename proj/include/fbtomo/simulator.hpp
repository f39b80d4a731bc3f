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
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "fbtomo/gateset.hpp"
#include "fbtomo/parity.hpp"
#include "fbtomo/records.hpp"

namespace fbt {

// Lab-time dependence of one generator coefficient.
struct TimeFunction {
  std::string kind = "constant";  // constant|linear|sinusoid|random_walk
  double value = 0.0;             // constant offset
  double slope = 0.0;             // linear: value + slope * t
  double amplitude = 0.0;         // sinusoid: value + amplitude * sin(2 pi t / period + phase)
  double period = 1.0;
  double phase = 0.0;
  double step_seconds = 1.0;      // random_walk: value + sigma * W(floor(t / step))
  double step_sigma = 0.0;
  std::uint64_t seed = 0;

  double eval(double t) const;
};

// Dependence on the cumulative microwave pulse count within a sequence.
struct LengthFunction {
  std::string kind = "linear";  // linear|saturating
  double rate = 0.0;            // increment per pulse
  double saturation = 0.0;      // cap for the saturating variant (0 = none)

  double eval(int pulse_count) const;
};

// Injectable error model: static generator coefficients per gate, slow drift
// in lab time, and intra-sequence pulse-count dependence. Coefficients are
// keyed "gate/CLASS/label", e.g. "x1/H/IX" or "x1/S/ZI".
struct NoiseInjection {
  std::map<std::string, double> static_coeffs;
  std::map<std::string, TimeFunction> drift;
  std::map<std::string, LengthFunction> length_dependent;
  std::vector<std::string> pulse_gates = {"x1", "x2"};
  // SPAM injections use pseudo-gate names "E" and "rho" in the key.
  std::map<std::string, double> spam_coeffs;
  double cptp_threshold = 1e-8;
  double drift_resolution_seconds = 0.0;  // 0 = auto

  bool empty() const {
    return static_coeffs.empty() && drift.empty() && length_dependent.empty() &&
           spam_coeffs.empty();
  }
  static NoiseInjection from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct ExperimentPlan {
  std::string kind = "generic";  // length_sweep|drift_tracking|generic
  std::vector<int> lengths = {8, 16, 32, 64, 128};
  int n_sequences = 5000;
  int shots = 100;
  int batch_size = 80;
  int n_batches = 500;
  double batch_window_seconds = 32.4;
  bool rasterized = true;
  std::uint64_t seed = 0;
  std::map<std::string, double> gate_durations;  // seconds per primitive gate
  double readout_seconds = 1e-3;

  double duration_of(const GateSequence& seq) const;
  static ExperimentPlan from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Uniform i.i.d. draws over the gate labels, seed-deterministic.
std::vector<GateSequence> generate_random_sequences(
    const std::vector<std::string>& labels, int length, int count,
    std::uint64_t seed);

struct ScheduleEntry {
  int sequence_index = 0;
  int shot_index = 0;
  double lab_time = 0.0;
  int batch_id = 0;
};

// Shot-major (rasterized) or sequence-major schedule for one corpus. Lab times
// follow the plan's duration model, shifted to start at `t0`; when
// `fit_window` > 0 durations are scaled so the corpus spans exactly that many
// seconds (batch quantization).
std::vector<ScheduleEntry> rasterize(const ExperimentPlan& plan,
                                     const std::vector<GateSequence>& sequences,
                                     double t0 = 0.0, int batch_id = 0,
                                     double fit_window = -1.0);

struct SimStats {
  long clamp_events = 0;
  double max_cptp_correction = 0.0;
  long channel_evaluations = 0;
};

// Runs the plan against the gate set with the injected error model: builds an
// instantaneous noisy gate set per scheduled shot (static + drift(lab time) +
// pulse-count terms), samples Bernoulli outcomes from per-entry derived RNG
// streams, and aggregates per-sequence observed frequencies.
// Throws when a constructed channel needs a CPTP correction above threshold.
std::vector<ObservationRecord> simulate(const ExperimentPlan& plan,
                                        const NoiseInjection& injection,
                                        const NoisyGateSet& gateset,
                                        SimStats* stats = nullptr);

// The noise channel exp(sum coeff * elementary generator) a gate experiences
// at the given lab time and pulse count (identity when nothing is injected).
Mat injected_channel(const NoiseInjection& injection, const std::string& gate,
                     double lab_time, int pulse_count, const PauliBasis& basis,
                     double* correction = nullptr);

// Multi-projection datasets for the parity readout studies: every main
// sequence is executed once per projection with the prefix physically applied
// (noise included) before the native readout.
std::vector<MultiProjectionRecord> simulate_with_projections(
    const ExperimentPlan& plan, const NoiseInjection& injection,
    const NoisyGateSet& gateset, const std::vector<ProjectionSpec>& projections,
    SimStats* stats = nullptr);

}  // namespace fbt
