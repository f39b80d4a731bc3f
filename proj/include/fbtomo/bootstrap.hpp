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
#include <optional>
#include <string>
#include <vector>

#include "fbtomo/updater.hpp"

namespace fbt {

// Configuration for the four prior bootstrap strategies. Owners are gate
// labels plus "E" and "rho" for the SPAM channels.
struct BootstrapConfig {
  std::string strategy = "blind_cold";  // blind_cold|fidelity_cold|partial_warm|full_warm

  // blind_cold: guessed depolarization strength per owner.
  std::map<std::string, double> depolarization;
  double default_depolarization = 0.0;

  // Per-component prior variance (diagonal covariance) per owner.
  std::map<std::string, double> cov_scale;
  double default_cov_scale = 1e-4;

  // fidelity_cold: per-gate mean fidelity and fidelity variance.
  std::map<std::string, std::pair<double, double>> fidelity;

  // partial_warm: previous mean (inline or from a checkpoint) + guessed
  // covariance (defaults to the diagonal built from cov_scale).
  std::optional<Vec> prev_mean;
  std::optional<Mat> guessed_cov;
  std::string mean_checkpoint;  // read mean from this checkpoint when set

  // full_warm: complete previous state.
  std::string checkpoint;

  int n_samples = 1000;
  std::uint64_t seed = 0;
  // Freeze physical trace preservation into cold priors (zero variance on the
  // first row of every residual block).
  bool tp_constrained = true;
  // Gates whose residual blocks get zero prior variance (virtual z gates can
  // be pinned to their software-perfect model).
  std::vector<std::string> freeze;

  static BootstrapConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

GaussianState blind_cold_boot(const NoisyGateSet& gs, const BootstrapConfig& cfg);
GaussianState fidelity_cold_boot(const NoisyGateSet& gs, const BootstrapConfig& cfg);
GaussianState partial_warm_boot(const NoisyGateSet& gs, const BootstrapConfig& cfg);
GaussianState full_warm_boot(const NoisyGateSet& gs, const BootstrapConfig& cfg);

// Dispatch on cfg.strategy.
GaussianState bootstrap_prior(const NoisyGateSet& gs, const BootstrapConfig& cfg);

// The sampling loop shared by the warm/fidelity strategies: draw residuals
// from N(mean, cov), CPTP-project every channel, and return the sample mean
// and covariance of the projected population (seed-deterministic; diagonal
// jitter 1e-12 is added when the sample covariance is rank deficient).
struct ResampleResult {
  Vec mean;
  Mat cov;
  bool jittered = false;
  double max_correction = 0.0;  // largest CPTP projection correction seen
};
ResampleResult resample_cptp(const NoisyGateSet& base, const ResidualRegistry& reg,
                             const Vec& mean, const Mat& cov, int n_samples,
                             std::uint64_t seed, int n_threads = 0);

// PTM of the uniform depolarizing channel diag(1, 1-p, ..., 1-p).
Mat depolarizing_ptm(double strength, int dim2);

// Entanglement fidelity convention used throughout: F_ent = Tr(R)/d^2.
double entanglement_fidelity(const Mat& noise_ptm);

}  // namespace fbt
