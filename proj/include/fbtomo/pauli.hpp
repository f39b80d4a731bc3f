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

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

namespace fbt {

using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Conventions (fixed here, consumed everywhere else in the library):
//
//  * Pauli strings are ordered lexicographically in {I,X,Y,Z}, qubit 1 first:
//    "II","IX","IY","IZ","XI",... so "ZI" is Z on qubit 1. Index 0 is the
//    identity string.
//  * The Hilbert-Schmidt-orthonormal basis element for string s is P_s/sqrt(d)
//    with P_s the unnormalized Pauli tensor product and d = 2^n.
//  * States and effects are vectorized in that normalized basis:
//    |rho>>_i = Tr(P_i rho)/sqrt(d),  <<E|_i = Tr(P_i E)/sqrt(d),
//    so <<E|rho>> = Tr(E rho) exactly.
//  * PTM entries: R[i][j] = Tr(P_i Phi(P_j))/d, real for Hermiticity-preserving
//    maps. Channels act on state vectors by left multiplication: |Phi(rho)>> =
//    R |rho>>. compose(a, b) = a*b applies b first.
//  * Choi matrix: C = sum_{mn} R[m][n] sigma_m (x) sigma_n^T with sigma the
//    normalized basis. Tr(C) = d for trace-preserving channels; the map
//    PTM <-> Choi is a Frobenius isometry. CP <=> C is PSD.
//  * Computational basis: |0> = |up> (+1 eigenstate of Z), |1> = |down>.
// ---------------------------------------------------------------------------

struct PauliBasis {
  int n_qubits = 0;
  std::vector<std::string> labels;
  std::vector<CMat> ops;  // unnormalized tensor-product Paulis, kron order = label order

  int dim() const { return 1 << n_qubits; }
  int size() const { return static_cast<int>(labels.size()); }
  int index_of(std::string_view label) const;

  static PauliBasis make(int n_qubits);
  static const PauliBasis& one_qubit();
  static const PauliBasis& two_qubit();
};

CMat kron(const CMat& a, const CMat& b);

// Single-qubit primitives.
CMat pauli_matrix(char p);
CMat rx_unitary(double theta);  // exp(-i theta X / 2)
CMat rz_unitary(double theta);  // exp(-i theta Z / 2)

// Lift a single-qubit unitary onto qubit 1 or 2 of a two-qubit register.
CMat on_qubit(const CMat& u, int qubit);

// PTM of a unitary channel rho -> U rho U^dagger. Throws std::invalid_argument
// with a norm diagnostic when u is not unitary to `tol`.
Mat ptm_from_unitary(const CMat& u, double tol = 1e-10);

// a*b, i.e. b applied first. Throws on dimension mismatch.
Mat compose(const Mat& a, const Mat& b);

CMat ptm_to_choi(const Mat& r);
Mat choi_to_ptm(const CMat& c);

Vec vec_state(const CMat& rho, const PauliBasis& basis);
RowVec vec_effect(const CMat& effect, const PauliBasis& basis);
CMat unvec_state(const Vec& v, const PauliBasis& basis);

bool is_trace_preserving(const Mat& r, double tol = 1e-12);
bool is_unital(const Mat& r, double tol = 1e-12);

}  // namespace fbt
