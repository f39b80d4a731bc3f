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

#include <string>
#include <string_view>
#include <vector>

#include "fbtomo/gateset.hpp"

namespace fbt {

// Layout of the stacked residual vector x: vec(eps_i) for every gate in
// registry order, then vec(eps_E), then vec(eps_rho). Residuals are deviations
// of the noise channels from identity, Lambda = I + eps.
struct ResidualRegistry {
  struct Entry {
    std::string owner;
    int offset = 0;
    int length = 0;
  };

  std::vector<Entry> entries;
  int block_dim = 0;  // d^2; each block stores a block_dim x block_dim matrix
  int total = 0;

  static ResidualRegistry for_gateset(const NoisyGateSet& gs);
  int offset_of(std::string_view owner) const;  // throws on unknown owner
  bool matches(const ResidualRegistry& other) const;
};

// Column-major vectorization, the single vec convention used everywhere.
Vec vec_mat(const Mat& m);
Mat unvec_mat(const Vec& v, int rows, int cols);

// Gate set whose noise channels are Lambda = I + eps from the residual vector.
// `base` supplies ideal gates and the prep/effect vectors; its own noise
// channels are ignored.
NoisyGateSet apply_residual(const NoisyGateSet& base, const ResidualRegistry& reg,
                            const Vec& x);

// Residual vector extracted from a gate set's noise channels (eps = Lambda - I).
Vec residual_from_gateset(const NoisyGateSet& gs, const ResidualRegistry& reg);

// First-order model of one sequence outcome around the gate-set means,
//   m(x) ~= m_bar + a_row . (x - x_mean).
struct LinearizedSequence {
  double m_bar = 0.0;
  Vec a_row;
  GateSequence sequence;
  std::string projection = "native";
};

// gs_mean must hold the current prior-mean channels Lambda_bar. Sensitivities
// are accumulated with prefix/suffix caching, O(N) matrix-vector products.
LinearizedSequence linearize(const NoisyGateSet& gs_mean, const GateSequence& seq,
                             const ResidualRegistry& reg,
                             std::string_view projection = "native");

}  // namespace fbt
