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

#include "fbtomo/pauli.hpp"

#include <map>
#include <stdexcept>

namespace fbt {

namespace {
constexpr Complex kI{0.0, 1.0};
}

CMat pauli_matrix(char p) {
  CMat m(2, 2);
  switch (p) {
    case 'I':
      m << 1, 0, 0, 1;
      break;
    case 'X':
      m << 0, 1, 1, 0;
      break;
    case 'Y':
      m << 0, -kI, kI, 0;
      break;
    case 'Z':
      m << 1, 0, 0, -1;
      break;
    default:
      throw std::invalid_argument("unknown Pauli label character");
  }
  return m;
}

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

PauliBasis PauliBasis::make(int n_qubits) {
  if (n_qubits < 1) throw std::invalid_argument("n_qubits must be positive");
  static const char kChars[4] = {'I', 'X', 'Y', 'Z'};
  PauliBasis basis;
  basis.n_qubits = n_qubits;
  const int count = 1 << (2 * n_qubits);
  basis.labels.reserve(count);
  basis.ops.reserve(count);
  for (int idx = 0; idx < count; ++idx) {
    std::string label(n_qubits, 'I');
    CMat op = CMat::Identity(1, 1);
    for (int q = 0; q < n_qubits; ++q) {
      const int digit = (idx >> (2 * (n_qubits - 1 - q))) & 3;
      label[q] = kChars[digit];
      op = kron(op, pauli_matrix(kChars[digit]));
    }
    basis.labels.push_back(std::move(label));
    basis.ops.push_back(std::move(op));
  }
  return basis;
}

const PauliBasis& PauliBasis::one_qubit() {
  static const PauliBasis basis = make(1);
  return basis;
}

const PauliBasis& PauliBasis::two_qubit() {
  static const PauliBasis basis = make(2);
  return basis;
}

int PauliBasis::index_of(std::string_view label) const {
  if (static_cast<int>(label.size()) != n_qubits)
    throw std::invalid_argument("Pauli label length mismatch");
  int idx = 0;
  for (char c : label) {
    int digit;
    switch (c) {
      case 'I': digit = 0; break;
      case 'X': digit = 1; break;
      case 'Y': digit = 2; break;
      case 'Z': digit = 3; break;
      default: throw std::invalid_argument("unknown Pauli label character");
    }
    idx = idx * 4 + digit;
  }
  return idx;
}

CMat rx_unitary(double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  CMat u(2, 2);
  u << Complex(c, 0), Complex(0, -s), Complex(0, -s), Complex(c, 0);
  return u;
}

CMat rz_unitary(double theta) {
  CMat u = CMat::Zero(2, 2);
  u(0, 0) = std::exp(Complex(0, -theta / 2.0));
  u(1, 1) = std::exp(Complex(0, theta / 2.0));
  return u;
}

CMat on_qubit(const CMat& u, int qubit) {
  const CMat id = CMat::Identity(2, 2);
  if (qubit == 1) return kron(u, id);
  if (qubit == 2) return kron(id, u);
  throw std::invalid_argument("qubit index must be 1 or 2");
}

namespace {

const PauliBasis& basis_for_dim(Eigen::Index d) {
  if (d == 2) return PauliBasis::one_qubit();
  if (d == 4) return PauliBasis::two_qubit();
  static thread_local std::map<Eigen::Index, PauliBasis> cache;
  auto it = cache.find(d);
  if (it != cache.end()) return it->second;
  int n = 0;
  while ((Eigen::Index(1) << n) < d) ++n;
  if ((Eigen::Index(1) << n) != d)
    throw std::invalid_argument("dimension is not a power of two");
  return cache.emplace(d, PauliBasis::make(n)).first->second;
}

// Columns are the column-major vectorizations of the normalized basis ops;
// unitary, since the normalized basis is Hilbert-Schmidt orthonormal.
CMat basis_change_matrix(const PauliBasis& basis) {
  const int d = basis.dim();
  CMat b(d * d, basis.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int n = 0; n < basis.size(); ++n)
    b.col(n) = (scale * basis.ops[n]).reshaped();
  return b;
}

const CMat& cached_basis_change(const PauliBasis& basis) {
  static const CMat one = basis_change_matrix(PauliBasis::one_qubit());
  static const CMat two = basis_change_matrix(PauliBasis::two_qubit());
  if (basis.n_qubits == 1) return one;
  if (basis.n_qubits == 2) return two;
  static thread_local std::map<int, CMat> cache;
  auto it = cache.find(basis.n_qubits);
  if (it != cache.end()) return it->second;
  return cache.emplace(basis.n_qubits, basis_change_matrix(basis)).first->second;
}

}  // namespace

Mat ptm_from_unitary(const CMat& u, double tol) {
  if (u.rows() != u.cols()) throw std::invalid_argument("unitary must be square");
  const double defect = (u.adjoint() * u - CMat::Identity(u.rows(), u.cols())).norm();
  if (defect > tol)
    throw std::invalid_argument("input is not unitary: ||u^dag u - I|| = " +
                                std::to_string(defect));
  const PauliBasis& basis = basis_for_dim(u.rows());
  // Column-major vec: vec(U rho U^dag) = (conj(U) (x) U) vec(rho).
  const CMat superop = kron(u.conjugate(), u);
  const CMat& b = cached_basis_change(basis);
  const CMat r = b.adjoint() * superop * b;
  if (r.imag().cwiseAbs().maxCoeff() > 1e-12)
    throw std::runtime_error("PTM of a unitary should be real");
  return r.real();
}

Mat compose(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows() || a.rows() != a.cols() || b.rows() != b.cols())
    throw std::invalid_argument("PTM dimension mismatch in compose");
  return a * b;
}

// Both conversions go through the column-major superoperator and a reshuffle:
// Choi[(a d + i), (b d + j)] = S[(a + d b), (i + d j)], with S = B R B^dag.
CMat ptm_to_choi(const Mat& r) {
  const Eigen::Index dd = r.rows();
  if (r.cols() != dd) throw std::invalid_argument("PTM must be square");
  const PauliBasis& basis = basis_for_dim(
      static_cast<Eigen::Index>(std::lround(std::sqrt(double(dd)))));
  const int d = basis.dim();
  const CMat& b = cached_basis_change(basis);
  const CMat superop = b * r * b.adjoint();
  CMat choi(dd, dd);
  for (int a = 0; a < d; ++a)
    for (int i = 0; i < d; ++i)
      for (int bb = 0; bb < d; ++bb)
        for (int j = 0; j < d; ++j)
          choi(a * d + i, bb * d + j) = superop(a + d * bb, i + d * j);
  return choi;
}

Mat choi_to_ptm(const CMat& c) {
  const Eigen::Index dd = c.rows();
  if (c.cols() != dd) throw std::invalid_argument("Choi matrix must be square");
  const PauliBasis& basis = basis_for_dim(
      static_cast<Eigen::Index>(std::lround(std::sqrt(double(dd)))));
  const int d = basis.dim();
  CMat superop(dd, dd);
  for (int a = 0; a < d; ++a)
    for (int i = 0; i < d; ++i)
      for (int bb = 0; bb < d; ++bb)
        for (int j = 0; j < d; ++j)
          superop(a + d * bb, i + d * j) = c(a * d + i, bb * d + j);
  const CMat& b = cached_basis_change(basis);
  return (b.adjoint() * superop * b).real();
}

Vec vec_state(const CMat& rho, const PauliBasis& basis) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(basis.dim()));
  Vec v(basis.size());
  for (int i = 0; i < basis.size(); ++i)
    v(i) = ((basis.ops[i] * rho).trace() * scale).real();
  return v;
}

RowVec vec_effect(const CMat& effect, const PauliBasis& basis) {
  return vec_state(effect, basis).transpose();
}

CMat unvec_state(const Vec& v, const PauliBasis& basis) {
  if (v.size() != basis.size()) throw std::invalid_argument("state vector length mismatch");
  const double scale = 1.0 / std::sqrt(static_cast<double>(basis.dim()));
  CMat rho = CMat::Zero(basis.dim(), basis.dim());
  for (int i = 0; i < basis.size(); ++i) rho += v(i) * scale * basis.ops[i];
  return rho;
}

bool is_trace_preserving(const Mat& r, double tol) {
  RowVec first = RowVec::Zero(r.cols());
  first(0) = 1.0;
  return (r.row(0) - first).cwiseAbs().maxCoeff() <= tol;
}

bool is_unital(const Mat& r, double tol) {
  Vec first = Vec::Zero(r.rows());
  first(0) = 1.0;
  return (r.col(0) - first).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace fbt
