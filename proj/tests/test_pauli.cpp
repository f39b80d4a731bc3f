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

#include <Eigen/Eigenvalues>

#include "fbtomo/pauli.hpp"
#include "test_util.hpp"

using namespace fbt;

namespace {

// Independent oracle: PTM entries by the defining trace formula, looped
// entry by entry. The implementation goes through the vectorized superoperator
// instead, so the two routes are algebraically distinct.
Mat ptm_bruteforce(const CMat& u, const PauliBasis& basis) {
  const int d = basis.dim();
  Mat r(basis.size(), basis.size());
  for (int i = 0; i < basis.size(); ++i)
    for (int j = 0; j < basis.size(); ++j) {
      const Complex v =
          (basis.ops[i] * u * basis.ops[j] * u.adjoint()).trace() /
          static_cast<double>(d);
      r(i, j) = v.real();
    }
  return r;
}

}  // namespace

TEST_SUITE("pauli") {

TEST_CASE("two-qubit basis ordering and orthonormality") {
  const PauliBasis& basis = PauliBasis::two_qubit();
  CHECK(basis.size() == 16);
  CHECK(basis.labels[0] == "II");
  CHECK(basis.labels[1] == "IX");
  CHECK(basis.labels[4] == "XI");
  CHECK(basis.labels[15] == "ZZ");
  CHECK(basis.index_of("ZI") == 12);

  const int d = basis.dim();
  for (int i = 0; i < basis.size(); ++i)
    for (int j = 0; j < basis.size(); ++j) {
      const Complex hs =
          (basis.ops[i].adjoint() * basis.ops[j]).trace() / static_cast<double>(d);
      CHECK(std::abs(hs - (i == j ? 1.0 : 0.0)) < 1e-14);
    }
}

TEST_CASE("label order is lexicographic for every n <= 2") {
  for (int n = 1; n <= 2; ++n) {
    const PauliBasis basis = PauliBasis::make(n);
    for (size_t i = 1; i < basis.labels.size(); ++i)
      CHECK(basis.labels[i - 1] < basis.labels[i]);
  }
}

TEST_CASE("identity unitary gives identity PTM") {
  const Mat r = ptm_from_unitary(CMat::Identity(4, 4));
  CHECK(test::max_abs_diff(r, Mat::Identity(16, 16)) < 1e-14);
}

TEST_CASE("x pi/2 on qubit 2 maps IY->IZ and IZ->-IY") {
  const PauliBasis& basis = PauliBasis::two_qubit();
  const CMat u = on_qubit(rx_unitary(M_PI / 2.0), 2);
  const Mat r = ptm_from_unitary(u);
  CHECK(test::max_abs_diff(r, ptm_bruteforce(u, basis)) < 1e-12);

  const int iy = basis.index_of("IY"), iz = basis.index_of("IZ");
  const int ix = basis.index_of("IX"), ii = basis.index_of("II");
  CHECK(r(iz, iy) == doctest::Approx(1.0).epsilon(1e-12));  // IY -> IZ
  CHECK(r(iy, iz) == doctest::Approx(-1.0).epsilon(1e-12));  // IZ -> -IY
  CHECK(r(ix, ix) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r(ii, ii) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cz PTM against the brute-force oracle, XI -> XZ") {
  const PauliBasis& basis = PauliBasis::two_qubit();
  CMat cz = CMat::Identity(4, 4);
  cz(3, 3) = -1.0;
  const Mat r = ptm_from_unitary(cz);
  CHECK(test::max_abs_diff(r, ptm_bruteforce(cz, basis)) < 1e-12);
  CHECK(r(basis.index_of("XZ"), basis.index_of("XI")) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ptm of a unitary is orthogonal, TP, unital") {
  rng::Stream stream(7);
  for (int trial = 0; trial < 20; ++trial) {
    const CMat u = test::random_unitary(4, stream);
    const Mat r = ptm_from_unitary(u);
    CHECK(test::max_abs_diff(r.transpose() * r, Mat::Identity(16, 16)) < 1e-10);
    CHECK(is_trace_preserving(r, 1e-12));
    CHECK(is_unital(r, 1e-12));
  }
}

TEST_CASE("non-unitary input is rejected with a norm diagnostic") {
  CMat bad = CMat::Identity(4, 4);
  bad(0, 0) = 1.5;
  CHECK_THROWS_WITH_AS(ptm_from_unitary(bad),
                       doctest::Contains("not unitary"), std::invalid_argument);
}

TEST_CASE("compose applies the right factor first") {
  rng::Stream stream(11);
  const CMat u = test::random_unitary(4, stream);
  const Mat r = ptm_from_unitary(u);
  CHECK(test::max_abs_diff(compose(r, Mat::Identity(16, 16)), r) == 0.0);

  const CMat x2 = on_qubit(rx_unitary(M_PI / 2.0), 2);
  const Mat half = ptm_from_unitary(x2);
  const Mat full = ptm_from_unitary(on_qubit(rx_unitary(M_PI), 2));
  CHECK(test::max_abs_diff(compose(half, half), full) < 1e-12);

  CHECK_THROWS_AS(compose(r, Mat::Identity(4, 4)), std::invalid_argument);
}

TEST_CASE("ptm_from_unitary is a homomorphism on 100 random pairs") {
  rng::Stream stream(13);
  for (int trial = 0; trial < 100; ++trial) {
    const CMat u = test::random_unitary(4, stream);
    const CMat v = test::random_unitary(4, stream);
    const Mat lhs = ptm_from_unitary(u * v);
    const Mat rhs = compose(ptm_from_unitary(u), ptm_from_unitary(v));
    CHECK(test::max_abs_diff(lhs, rhs) < 1e-10);
  }
}

TEST_CASE("four-gate sequence composition matches the composed unitary") {
  rng::Stream stream(17);
  CMat total = CMat::Identity(4, 4);
  Mat composed = Mat::Identity(16, 16);
  for (int k = 0; k < 4; ++k) {
    const CMat u = test::random_unitary(4, stream);
    total = u * total;                               // u applied after
    composed = compose(ptm_from_unitary(u), composed);
  }
  CHECK(test::max_abs_diff(composed, ptm_from_unitary(total)) < 1e-10);
}

TEST_CASE("choi conventions: identity and depolarizing") {
  const Mat id_ptm = Mat::Identity(16, 16);
  const CMat choi = ptm_to_choi(id_ptm);
  // Identity channel: Choi = d * |Omega><Omega| (rank one, trace d).
  CHECK(std::abs(choi.trace().real() - 4.0) < 1e-12);
  Eigen::SelfAdjointEigenSolver<CMat> es(choi);
  CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(std::abs(es.eigenvalues()(14)) < 1e-12);  // second-largest vanishes

  Mat depol = Mat::Zero(16, 16);
  depol(0, 0) = 1.0;
  const CMat choi_depol = ptm_to_choi(depol);
  CHECK(test::max_abs_diff(choi_depol, CMat(CMat::Identity(16, 16) / 4.0)) < 1e-12);
}

TEST_CASE("choi/ptm round trip is the identity on 100 random channels") {
  rng::Stream stream(23);
  const PauliBasis& basis = PauliBasis::two_qubit();
  for (int trial = 0; trial < 100; ++trial) {
    const Mat r = test::random_near_identity_channel(basis, 0.05, stream);
    CHECK(test::max_abs_diff(choi_to_ptm(ptm_to_choi(r)), r) < 1e-12);
  }
}

TEST_CASE("random unitary PTM gives a rank-1 PSD Choi matrix") {
  rng::Stream stream(29);
  const CMat u = test::random_unitary(4, stream);
  const CMat choi = ptm_to_choi(ptm_from_unitary(u));
  Eigen::SelfAdjointEigenSolver<CMat> es(choi);
  CHECK(es.eigenvalues().minCoeff() > -1e-10);
  CHECK(std::abs(es.eigenvalues()(14)) < 1e-10);  // eigenvalues sorted ascending
}

TEST_CASE("state and effect vectorization pair to Tr(E rho)") {
  const PauliBasis& basis = PauliBasis::two_qubit();
  CMat rho = CMat::Zero(4, 4);
  rho(3, 3) = 1.0;
  const Vec v = vec_state(rho, basis);
  CHECK(v(0) == doctest::Approx(0.5).epsilon(1e-14));  // Tr(rho)/sqrt(d)
  CHECK(test::max_abs_diff(unvec_state(v, basis), rho) < 1e-14);

  CMat effect = CMat::Zero(4, 4);
  effect(1, 1) = 1.0;
  effect(2, 2) = 1.0;
  CHECK(vec_effect(effect, basis).dot(v) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(vec_effect(effect, basis).dot(vec_state(effect / 2.0, basis)) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

}  // TEST_SUITE
