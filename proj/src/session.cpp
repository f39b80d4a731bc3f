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

#include "fbtomo/session.hpp"

#include <algorithm>
#include <stdexcept>

namespace fbt {

EstimationSession::EstimationSession(NoisyGateSet ideal, GaussianState boot,
                                     SessionConfig config)
    : ideal_(std::move(ideal)), state_(std::move(boot)), cfg_(config) {
  const ResidualRegistry expected = ResidualRegistry::for_gateset(ideal_);
  if (!state_.registry.matches(expected))
    throw std::invalid_argument("bootstrap registry does not match the gate set");
  refresh_linearization();
}

void EstimationSession::refresh_linearization() {
  lin_mean_ = state_.mean;
  lin_gateset_ = apply_residual(ideal_, state_.registry, lin_mean_);
  updates_since_refresh_ = 0;
}

NoisyGateSet EstimationSession::mean_gateset() const {
  return apply_residual(ideal_, state_.registry, state_.mean);
}

void EstimationSession::reboot(GaussianState state, bool reactivate_approx) {
  if (!state.registry.matches(state_.registry))
    throw std::invalid_argument("reboot registry does not match the session");
  state_ = std::move(state);
  if (reactivate_approx) {
    state_.approx_error_active = true;
    state_.approx_below_count = 0;
  }
  refresh_linearization();
}

UpdateSummary EstimationSession::ingest(const ObservationRecord& record) {
  record.validate();

  const bool same_group =
      record.group && active_group_ && *record.group == *active_group_;
  if (updates_since_refresh_ >= cfg_.relinearize_interval && !same_group)
    refresh_linearization();
  active_group_ = record.group;

  const LinearizedSequence lin =
      linearize(lin_gateset_, record.sequence, state_.registry, record.projection);

  double var_approx = 0.0;
  if (state_.approx_error_active) {
    var_approx = approximation_error_variance(
        state_, ideal_, lin, lin_mean_, cfg_.approx_samples,
        cfg_.seed ^ static_cast<std::uint64_t>(state_.update_count), cfg_.n_threads);
  }
  // Shot noise at the predicted mean, not the observed frequency.
  const double predicted = predict(state_, lin, &lin_mean_);
  const double var_shot =
      shot_noise_variance(std::clamp(predicted, 0.0, 1.0), record.shots);

  UpdateDiagnostics diag;
  update(state_, lin, record, var_shot, var_approx, &lin_mean_, &diag);
  ++updates_since_refresh_;
  clamps_.note(diag.predicted);

  maybe_drop_approximation_error(state_, var_approx, diag.var_shot,
                                 cfg_.approx_drop_ratio, cfg_.approx_drop_window);

  UpdateSummary summary;
  summary.index = state_.update_count;
  summary.timestamp = record.timestamp;
  summary.sequence_length = static_cast<int>(record.sequence.size());
  summary.projection = record.projection;
  summary.predicted = diag.predicted;
  summary.observed = record.observed_frequency;
  summary.var_shot = diag.var_shot;
  summary.var_approx = var_approx;
  summary.approx_active = state_.approx_error_active;
  if (cfg_.track_history) history_.push_back(summary);
  return summary;
}

std::vector<UpdateSummary> EstimationSession::ingest_all(
    const std::vector<ObservationRecord>& records) {
  std::vector<UpdateSummary> summaries;
  summaries.reserve(records.size());
  for (const auto& rec : records) summaries.push_back(ingest(rec));
  return summaries;
}

}  // namespace fbt
