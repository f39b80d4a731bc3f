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

#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "fbtomo/pauli.hpp"
#include "fbtomo/rng.hpp"

namespace fbt::test {

template <typename A, typename B>
double max_abs_diff(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// Haar-ish random unitary via QR of a complex Gaussian matrix.
inline CMat random_unitary(int dim, rng::Stream& stream) {
  CMat g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = Complex(stream.normal(), stream.normal());
  Eigen::HouseholderQR<CMat> qr(g);
  CMat q = qr.householderQ();
  const CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    const Complex d = r(j, j) / std::abs(r(j, j));
    q.col(j) *= std::conj(d);
  }
  return q;
}

// Random CPTP channel near the identity: unitary part + Pauli noise mixture.
inline Mat random_near_identity_channel(const PauliBasis& basis, double strength,
                                        rng::Stream& stream) {
  const int d = basis.dim();
  CMat h = CMat::Zero(d, d);
  for (int i = 1; i < basis.size(); ++i)
    h += (strength * stream.normal()) * basis.ops[i];
  const CMat u = ((Complex(0, -1)) * h).exp();
  Mat r = ptm_from_unitary(u);
  // Mix in Pauli channels: sum_p q_p * P ptm, with q ~ small.
  Mat mix = Mat::Zero(basis.size(), basis.size());
  double total = 0.0;
  for (int i = 1; i < basis.size(); ++i) {
    const double q = strength * std::abs(stream.normal());
    total += q;
    mix += q * ptm_from_unitary(basis.ops[i]);
  }
  return (1.0 - total) * r + mix * r;  // convex mixture of unitary channels
}

}  // namespace fbt::test
