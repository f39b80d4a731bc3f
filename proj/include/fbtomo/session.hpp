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

#include <vector>

#include "fbtomo/updater.hpp"

namespace fbt {

struct SessionConfig {
  // Linearization means are refreshed from the Gaussian mean every
  // `relinearize_interval` updates (grouped records are never split).
  int relinearize_interval = 50;
  int approx_samples = 100;
  double approx_drop_ratio = 0.01;
  int approx_drop_window = 20;
  std::uint64_t seed = 0;
  int n_threads = 0;  // 0 = hardware concurrency
  bool track_history = true;
};

struct UpdateSummary {
  long index = 0;
  double timestamp = 0.0;
  int sequence_length = 0;
  std::string projection;
  double predicted = 0.0;
  double observed = 0.0;
  double var_shot = 0.0;
  double var_approx = 0.0;
  bool approx_active = false;
};

// Single-writer estimation pipeline: linearize around cached means, compute
// noise variances, apply the conjugate update, manage the approximation-error
// drop rule and the re-linearization cadence.
class EstimationSession {
 public:
  // `ideal` supplies gates/SPAM structure; its noise channels are ignored.
  EstimationSession(NoisyGateSet ideal, GaussianState boot, SessionConfig config = {});

  UpdateSummary ingest(const ObservationRecord& record);
  std::vector<UpdateSummary> ingest_all(const std::vector<ObservationRecord>& records);

  const GaussianState& state() const { return state_; }
  GaussianState& state() { return state_; }
  const NoisyGateSet& ideal() const { return ideal_; }
  const ResidualRegistry& registry() const { return state_.registry; }
  const std::vector<UpdateSummary>& history() const { return history_; }
  const ClampStats& clamp_stats() const { return clamps_; }

  // Gate set whose noise channels are I + unvec(mean).
  NoisyGateSet mean_gateset() const;
  void refresh_linearization();

  // Replace the Gaussian (warm reboot). Reactivates approximation-error
  // sampling when `reactivate_approx` is set.
  void reboot(GaussianState state, bool reactivate_approx);

 private:
  NoisyGateSet ideal_;
  GaussianState state_;
  SessionConfig cfg_;
  Vec lin_mean_;
  NoisyGateSet lin_gateset_;
  long updates_since_refresh_ = 0;
  std::optional<int> active_group_;
  std::vector<UpdateSummary> history_;
  ClampStats clamps_;
};

}  // namespace fbt
