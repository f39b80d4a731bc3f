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

#include <optional>
#include <string>

#include "fbtomo/linearize.hpp"
#include "fbtomo/records.hpp"
#include "fbtomo/rng.hpp"

namespace fbt {

// Multivariate Gaussian over the stacked residual vector. The covariance is
// kept symmetric after every update; a factor M with M M^T = cov is maintained
// lazily for sampling and refreshed by rank-one downdates where possible.
struct GaussianState {
  ResidualRegistry registry;
  Vec mean;
  Mat cov;
  long update_count = 0;
  bool approx_error_active = true;
  std::string provenance;
  int approx_below_count = 0;  // consecutive updates below the drop threshold

  void symmetrize();
  // Draw mean + M z with z standard normal. Builds the factor on demand.
  Vec sample(rng::Stream& stream);
  void invalidate_factor();
  // Diagnostics: smallest eigenvalue of cov (dense solve; test use only).
  double min_cov_eigenvalue() const;

  // Factor cache, managed by sample()/update().
  Mat factor;
  bool factor_valid = false;
  bool factor_triangular = false;
};

GaussianState make_gaussian_state(const ResidualRegistry& reg);

struct UpdateDiagnostics {
  double innovation = 0.0;
  double predicted = 0.0;
  double var_shot = 0.0;
  double var_approx = 0.0;
  double s2 = 0.0;
  double prior_direction_var = 0.0;  // a^T Gamma a before the update
  double post_direction_var = 0.0;   // a^T Gamma' a after the update
};

// Scalar-observation conjugate update with s^2 = var_shot + var_approx.
// `lin_mean` is the residual mean the linearization was built around (defaults
// to state.mean); the innovation is corrected by a_row . (state.mean -
// lin_mean) so that sequential updates with a frozen linearization point match
// the joint GLS posterior exactly. Throws on s^2 <= 0 or non-finite inputs.
void update(GaussianState& state, const LinearizedSequence& lin,
            const ObservationRecord& obs, double var_shot, double var_approx,
            const Vec* lin_mean = nullptr, UpdateDiagnostics* diag = nullptr);

// Corrected mean prediction for a record under a possibly stale linearization.
double predict(const GaussianState& state, const LinearizedSequence& lin,
               const Vec* lin_mean = nullptr);

// Binomial variance at the predicted mean with floor 1/(4 shots^2).
double shot_noise_variance(double m_pred, long shots);

// Monte-Carlo estimate of the linearization-error variance: sample residuals
// from `state`, CPTP-project every sampled channel, and return the sample
// variance of exact-minus-linear over `n_samples` draws.
double approximation_error_variance(GaussianState& state, const NoisyGateSet& base,
                                    const LinearizedSequence& lin,
                                    const Vec& lin_mean, int n_samples,
                                    std::uint64_t seed, int n_threads = 0);

// Drop rule: deactivate approximation-error sampling once var_approx stays
// below ratio * var_shot for `window` consecutive updates. Returns the active
// flag after applying the rule.
bool maybe_drop_approximation_error(GaussianState& state, double var_approx,
                                    double var_shot, double ratio = 0.01,
                                    int window = 20);

// Rank-one Cholesky downdate of a lower-triangular factor: L L^T - w w^T.
// Returns false (factor unspecified) when the downdate is not positive.
bool cholesky_downdate(Mat& l, Vec w);

// Binary checkpoint with a JSON header; round trips bit exactly.
void save_checkpoint(const GaussianState& state, const std::string& path);
GaussianState load_checkpoint(const std::string& path);

}  // namespace fbt
