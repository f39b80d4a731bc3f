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

#include "fbtomo/linearize.hpp"

#include <cmath>
#include <stdexcept>

namespace fbt {

ResidualRegistry ResidualRegistry::for_gateset(const NoisyGateSet& gs) {
  ResidualRegistry reg;
  reg.block_dim = gs.dim2();
  const int len = reg.block_dim * reg.block_dim;
  int offset = 0;
  for (const auto& label : gs.labels) {
    reg.entries.push_back({label, offset, len});
    offset += len;
  }
  reg.entries.push_back({"E", offset, len});
  offset += len;
  reg.entries.push_back({"rho", offset, len});
  offset += len;
  reg.total = offset;
  return reg;
}

int ResidualRegistry::offset_of(std::string_view owner) const {
  for (const auto& e : entries)
    if (e.owner == owner) return e.offset;
  throw std::out_of_range("unknown residual owner: " + std::string(owner));
}

bool ResidualRegistry::matches(const ResidualRegistry& other) const {
  if (block_dim != other.block_dim || total != other.total ||
      entries.size() != other.entries.size())
    return false;
  for (size_t i = 0; i < entries.size(); ++i)
    if (entries[i].owner != other.entries[i].owner ||
        entries[i].offset != other.entries[i].offset ||
        entries[i].length != other.entries[i].length)
      return false;
  return true;
}

Vec vec_mat(const Mat& m) { return m.reshaped(); }

Mat unvec_mat(const Vec& v, int rows, int cols) {
  if (v.size() != Eigen::Index(rows) * cols)
    throw std::invalid_argument("unvec length mismatch");
  return v.reshaped(rows, cols);
}

NoisyGateSet apply_residual(const NoisyGateSet& base, const ResidualRegistry& reg,
                            const Vec& x) {
  if (x.size() != reg.total) throw std::invalid_argument("residual length mismatch");
  const int d2 = reg.block_dim;
  NoisyGateSet gs = base;
  const Mat id = Mat::Identity(d2, d2);
  for (size_t i = 0; i < gs.labels.size(); ++i)
    gs.noise[i] = id + unvec_mat(x.segment(reg.entries[i].offset, d2 * d2), d2, d2);
  gs.noise_effect = id + unvec_mat(x.segment(reg.offset_of("E"), d2 * d2), d2, d2);
  gs.noise_prep = id + unvec_mat(x.segment(reg.offset_of("rho"), d2 * d2), d2, d2);
  return gs;
}

Vec residual_from_gateset(const NoisyGateSet& gs, const ResidualRegistry& reg) {
  const int d2 = reg.block_dim;
  const Mat id = Mat::Identity(d2, d2);
  Vec x = Vec::Zero(reg.total);
  for (size_t i = 0; i < gs.labels.size(); ++i)
    x.segment(reg.entries[i].offset, d2 * d2) = vec_mat(gs.noise[i] - id);
  x.segment(reg.offset_of("E"), d2 * d2) = vec_mat(gs.noise_effect - id);
  x.segment(reg.offset_of("rho"), d2 * d2) = vec_mat(gs.noise_prep - id);
  return x;
}

namespace {

// Coefficient block for an insertion L eps R: with column-major vec the
// coefficient of eps(a,b) is L(a) * R(b), i.e. vec(L^T R^T).
inline void add_block(Vec& a_row, int offset, const RowVec& left, const Vec& right) {
  const int d2 = static_cast<int>(left.size());
  Eigen::Map<Mat> block(a_row.data() + offset, d2, d2);
  block.noalias() += left.transpose() * right.transpose();
}

}  // namespace

LinearizedSequence linearize(const NoisyGateSet& gs_mean, const GateSequence& seq,
                             const ResidualRegistry& reg,
                             std::string_view projection) {
  const int n = static_cast<int>(seq.size());

  std::vector<int> gate_of(n);
  for (int p = 0; p < n; ++p) gate_of[p] = gs_mean.gate_index(seq[p]);

  // Forward states: fwd[p] = [prod_{i<p} G_i Lb_i] Lb_rho |rho>>.
  std::vector<Vec> fwd(n + 1);
  fwd[0] = gs_mean.noise_prep * gs_mean.rho0;
  for (int p = 0; p < n; ++p)
    fwd[p + 1] = gs_mean.ideal[gate_of[p]] * (gs_mean.noise[gate_of[p]] * fwd[p]);

  // Backward rows: bwd[p] = <<E| Lb_E [prod_{i>p} G_i Lb_i] for p = n..0.
  const RowVec& effect = gs_mean.effect_row(projection);
  std::vector<RowVec> bwd(n + 1);
  bwd[n] = effect * gs_mean.noise_effect;
  for (int p = n - 1; p >= 0; --p)
    bwd[p] = (bwd[p + 1] * gs_mean.ideal[gate_of[p]]) * gs_mean.noise[gate_of[p]];

  LinearizedSequence lin;
  lin.sequence = seq;
  lin.projection = std::string(projection);
  lin.m_bar = bwd[n].dot(fwd[n]);
  if (!std::isfinite(lin.m_bar))
    throw std::runtime_error("non-finite mean prediction; pathological prior means");
  lin.a_row = Vec::Zero(reg.total);

  // Gate residual insertions: <<E| Lb_E [suffix] G_p eps [prefix] Lb_rho |rho>>.
  for (int p = 0; p < n; ++p) {
    const RowVec left = bwd[p + 1] * gs_mean.ideal[gate_of[p]];
    add_block(lin.a_row, reg.entries[gate_of[p]].offset, left, fwd[p]);
  }
  // SPAM insertions (second and fourth expansion terms).
  add_block(lin.a_row, reg.offset_of("E"), effect, fwd[n]);
  add_block(lin.a_row, reg.offset_of("rho"), bwd[0], gs_mean.rho0);

  if (!lin.a_row.allFinite())
    throw std::runtime_error("non-finite sensitivity row; pathological prior means");
  return lin;
}

}  // namespace fbt
