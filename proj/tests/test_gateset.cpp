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

#include <cstdio>
#include <nlohmann/json.hpp>

#include "fbtomo/gateset.hpp"
#include "fbtomo/postproc.hpp"
#include "fbtomo/simulator.hpp"
#include "test_util.hpp"

using namespace fbt;

namespace {

// Independent oracle: evolve the 4x4 density matrix directly with the gate
// unitaries and take Tr(P_odd rho).
double outcome_by_density_matrix(const std::vector<CMat>& unitaries) {
  CMat rho = CMat::Zero(4, 4);
  rho(3, 3) = 1.0;  // |down,down>
  for (const auto& u : unitaries) rho = u * rho * u.adjoint();
  CMat p_odd = CMat::Zero(4, 4);
  p_odd(1, 1) = 1.0;
  p_odd(2, 2) = 1.0;
  return (p_odd * rho).trace().real();
}

CMat unitary_of(const std::string& label) {
  if (label == "x1") return on_qubit(rx_unitary(M_PI / 2.0), 1);
  if (label == "x2") return on_qubit(rx_unitary(M_PI / 2.0), 2);
  if (label == "z1") return on_qubit(rz_unitary(M_PI / 2.0), 1);
  if (label == "z2") return on_qubit(rz_unitary(M_PI / 2.0), 2);
  if (label == "cz") return cz_unitary();
  if (label == "dcz") return dcz_unitary();
  throw std::invalid_argument("unknown label");
}

}  // namespace

TEST_SUITE("gateset") {

TEST_CASE("ideal set: cz variant and virtual z1 action") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  CHECK(gs.labels == std::vector<std::string>{"x1", "x2", "z1", "z2", "cz"});
  CHECK(test::max_abs_diff(gs.ideal_of("cz"), ptm_from_unitary(cz_unitary())) <
        1e-14);

  const PauliBasis& basis = PauliBasis::two_qubit();
  const Mat z1 = gs.ideal_of("z1");
  // Oracle: brute-force PTM entries of the z1 unitary.
  const CMat u = unitary_of("z1");
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) {
      const double expected =
          ((basis.ops[i] * u * basis.ops[j] * u.adjoint()).trace() / 4.0).real();
      CHECK(z1(i, j) == doctest::Approx(expected).epsilon(1e-12));
    }
  CHECK(z1(basis.index_of("YI"), basis.index_of("XI")) ==
        doctest::Approx(1.0).epsilon(1e-12));  // XI -> YI
  CHECK(z1(basis.index_of("XI"), basis.index_of("YI")) ==
        doctest::Approx(-1.0).epsilon(1e-12));  // YI -> -XI
  CHECK(z1(basis.index_of("ZI"), basis.index_of("ZI")) ==
        doctest::Approx(1.0).epsilon(1e-12));
  for (const char* q2 : {"IX", "IY", "IZ"})
    CHECK(z1(basis.index_of(q2), basis.index_of(q2)) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dcz is cz conjugated by pi pulses and squares to identity") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::dcz);
  const CMat xx = kron(pauli_matrix('X'), pauli_matrix('X'));
  const CMat expected = xx * cz_unitary() * xx;
  CHECK(test::max_abs_diff(gs.ideal_of("dcz"), ptm_from_unitary(expected)) < 1e-12);

  // dcz^2 acts as the identity channel (global phase drops in the PTM).
  const Mat sq = compose(gs.ideal_of("dcz"), gs.ideal_of("dcz"));
  CHECK(test::max_abs_diff(sq, Mat::Identity(16, 16)) < 1e-12);
}

TEST_CASE("exact outcomes on ideal sequences") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  CHECK(exact_outcome(gs, {}) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(exact_outcome(gs, {"x2", "x2"}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(exact_outcome(gs, {"x1"}) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(exact_outcome(gs, {"nope"}), std::out_of_range);
}

TEST_CASE("exact outcome matches density-matrix evolution on random sequences") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const auto sequences =
      generate_random_sequences(gs.labels, 12, 25, /*seed=*/101);
  ClampStats stats;
  for (const auto& seq : sequences) {
    std::vector<CMat> us;
    for (const auto& label : seq) us.push_back(unitary_of(label));
    const double expected = outcome_by_density_matrix(us);
    CHECK(exact_outcome(gs, seq, &stats) ==
          doctest::Approx(expected).epsilon(1e-10));
  }
  CHECK(stats.events == 0);  // ideal outcomes stay in [0,1] without clamping
}

TEST_CASE("gauge invariance of outcomes under random TP similarities") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  rng::Stream stream(31);
  const auto sequences = generate_random_sequences(gs.labels, 8, 50, 37);
  for (int trial = 0; trial < 5; ++trial) {
    Mat s = Mat::Identity(16, 16);
    for (int i = 1; i < 16; ++i)
      for (int j = 0; j < 16; ++j) s(i, j) += 0.02 * stream.normal();
    const NoisyGateSet transformed = apply_gauge(gs, s);
    for (const auto& seq : sequences) {
      CHECK(exact_outcome_raw(transformed, seq) ==
            doctest::Approx(exact_outcome_raw(gs, seq)).epsilon(1e-10));
    }
  }
}

TEST_CASE("serialization round trip is bit exact") {
  NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::dcz);
  rng::Stream stream(41);
  for (auto& lambda : gs.noise)
    lambda = test::random_near_identity_channel(PauliBasis::two_qubit(), 0.01, stream);

  const std::string path = "gateset_roundtrip_test.json";
  save_gateset(gs, path);
  const NoisyGateSet back = load_gateset(path);
  std::remove(path.c_str());

  CHECK(back.labels == gs.labels);
  for (size_t i = 0; i < gs.labels.size(); ++i) {
    CHECK((back.ideal[i] - gs.ideal[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.noise[i] - gs.noise[i]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK((back.rho0 - gs.rho0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.effect0 - gs.effect0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.noise_effect - gs.noise_effect).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.noise_prep - gs.noise_prep).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("clamping is logged at the output only") {
  NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  // A non-physical effect scale pushes raw outcomes above 1.
  gs.noise_effect *= 1.5;
  ClampStats stats;
  const double p = exact_outcome(gs, {"x2", "x2"}, &stats);
  CHECK(p == 1.0);
  CHECK(stats.events == 1);
  CHECK(stats.worst_excess == doctest::Approx(0.5).epsilon(1e-12));
}

}  // TEST_SUITE
