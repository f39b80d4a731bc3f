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

#include "fbtomo/bootstrap.hpp"
#include "fbtomo/postproc.hpp"
#include "fbtomo/session.hpp"
#include "fbtomo/simulator.hpp"

namespace fbt {

struct AnalysisConfig {
  BootstrapConfig boot;
  SessionConfig session;
  double gauge_wg = 1.0;
  double gauge_ws = 1e-3;
  int ci_draws = 1000;           // posterior draws behind credible intervals
  int ci_draws_per_batch = 200;  // drift tracking, per-batch intervals
  std::uint64_t ci_seed = 1;
  // Inter-batch boot for drift tracking: "full" inherits the complete
  // posterior; "partial" re-inflates the covariance via the resampling boot.
  std::string rewarm = "full";
  double rewarm_cov_scale = 0.0;
  int rewarm_samples = 200;
  bool reactivate_approx = true;
};

// Post-processed view of one posterior mean: CPTP projection, gauge
// optimization against the ideal set, per-gate taxonomy.
struct GateSnapshot {
  std::string gate;
  Mat noise;  // gauge-optimized noise channel
  ErrorGeneratorDecomposition decomposition;
  InfidelityReport infidelity;
};

struct PosteriorSnapshot {
  std::vector<GateSnapshot> gates;
  Mat gauge;
  double gauge_objective = 0.0;
};

PosteriorSnapshot postprocess_estimate(const NoisyGateSet& ideal,
                                       const ResidualRegistry& reg, const Vec& mean,
                                       double w_g = 1.0, double w_s = 1e-3);

// ---------------------------------------------------------------------------
// Sequence-length dependency experiment

struct CoefficientRow {
  std::string gate;
  char cls = 'H';
  std::string label;
  int length = 0;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct LengthSweepResult {
  std::vector<int> lengths;
  std::map<int, PosteriorSnapshot> snapshots;
  std::vector<CoefficientRow> table;  // H and S coefficients, 99.7% intervals
  std::map<int, bool> converged;      // diagnostics flag per length
};

// One independent estimation session per length; no state is shared. Per-length
// seeds derive from the config seed and the length, so analysis order cannot
// matter.
LengthSweepResult run_length_sweep(
    const std::map<int, std::vector<ObservationRecord>>& records_per_length,
    const NoisyGateSet& ideal, const AnalysisConfig& config);

// Convenience wrapper that simulates per-length corpora first.
LengthSweepResult run_length_sweep_simulated(const ExperimentPlan& plan_template,
                                             const NoiseInjection& injection,
                                             const NoisyGateSet& truth_gateset,
                                             const NoisyGateSet& ideal,
                                             const std::vector<int>& lengths,
                                             const AnalysisConfig& config);

// ---------------------------------------------------------------------------
// Slow-drift tracking experiment

struct DriftRow {
  int batch = 0;
  double lab_time = 0.0;
  std::string gate;
  double eps_ent = 0.0;
  std::vector<GeneratorContribution> top;  // top-k by |contribution|
};

struct DriftTrackResult {
  std::vector<DriftRow> rows;
  std::vector<double> batch_times;
  std::vector<double> cov_traces;  // posterior covariance trace per batch
  // Per-batch coefficient series keyed "gate/CLASS/label", with resampled
  // 99.7% half-widths alongside.
  std::map<std::string, std::vector<double>> series;
  std::map<std::string, std::vector<double>> series_halfwidth;
};

// Records must arrive ordered by batch id and lab time; out-of-order batches
// are rejected. Batch 1 boots per config; later batches inherit the posterior
// (full warm boot) or re-inflate it (partial) per config.rewarm.
DriftTrackResult run_drift_tracking(const std::vector<ObservationRecord>& records,
                                    const NoisyGateSet& ideal,
                                    const AnalysisConfig& config, int top_k = 6);

// ---------------------------------------------------------------------------
// Table exports (the data behind the figure-style outputs)

std::string length_sweep_csv(const LengthSweepResult& result);
nlohmann::json length_sweep_json(const LengthSweepResult& result);
std::string drift_track_csv(const DriftTrackResult& result);
nlohmann::json drift_track_json(const DriftTrackResult& result);

}  // namespace fbt
