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
#include "fbtomo/simulator.hpp"
#include "test_util.hpp"

using namespace fbt;

namespace {

Vec random_direction(int n, rng::Stream& stream) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = stream.normal();
  return v / v.norm();
}

}  // namespace

TEST_SUITE("linearize") {

TEST_CASE("registry layout partitions the residual vector") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  CHECK(reg.total == 1792);  // (5 gates + 2 SPAM) * 16^2
  CHECK(reg.block_dim == 16);
  CHECK(reg.entries.size() == 7);
  int expected_offset = 0;
  for (const auto& e : reg.entries) {
    CHECK(e.offset == expected_offset);
    expected_offset += e.length;
  }
  CHECK(expected_offset == reg.total);
  CHECK(reg.entries[5].owner == "E");
  CHECK(reg.entries[6].owner == "rho");
}

TEST_CASE("vec/unvec round trip and identity stride") {
  rng::Stream stream(3);
  Mat m(16, 16);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) m(i, j) = stream.normal();
  CHECK(test::max_abs_diff(unvec_mat(vec_mat(m), 16, 16), m) == 0.0);

  const Vec id_vec = vec_mat(Mat::Identity(16, 16));
  for (int k = 0; k < id_vec.size(); ++k)
    CHECK(id_vec(k) == (k % 17 == 0 ? 1.0 : 0.0));

  CHECK_THROWS_AS(unvec_mat(Vec::Zero(10), 4, 4), std::invalid_argument);
}

TEST_CASE("zero-length sequence touches only SPAM blocks") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  const LinearizedSequence lin = linearize(gs, {}, reg);
  CHECK(lin.m_bar == doctest::Approx(exact_outcome_raw(gs, {})).epsilon(1e-14));
  for (size_t g = 0; g < gs.labels.size(); ++g)
    CHECK(lin.a_row.segment(reg.entries[g].offset, reg.entries[g].length).norm() ==
          0.0);
  CHECK(lin.a_row.segment(reg.offset_of("E"), 256).norm() > 0.0);
  CHECK(lin.a_row.segment(reg.offset_of("rho"), 256).norm() > 0.0);
}

TEST_CASE("kron arrangement of the single-gate block") {
  // Oracle: explicit index loops building the eps_{x1} block for the
  // sequence [x1] around identity means.
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  const LinearizedSequence lin = linearize(gs, {"x1"}, reg);

  const RowVec left = (gs.effect0 * gs.noise_effect) * gs.ideal_of("x1");
  const Vec right = gs.noise_prep * gs.rho0;
  const int off = reg.offset_of("x1");
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) {
      const double expected = left(a) * right(b);  // <<E| G_x1 eps |rho>>
      CHECK(lin.a_row(off + b * 16 + a) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("a_row dot vec(eps) equals the matrix-form first-order shift") {
  // Dual-implementation oracle: accumulate the shift by explicit insertion.
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  rng::Stream stream(7);
  const auto seqs = generate_random_sequences(gs.labels, 6, 5, 71);
  for (const auto& seq : seqs) {
    const LinearizedSequence lin = linearize(gs, seq, reg);
    Vec x(reg.total);
    for (int i = 0; i < reg.total; ++i) x(i) = 1e-3 * stream.normal();

    // Matrix-form accumulation: insert eps at each slot explicitly.
    double shift = 0.0;
    const int n = static_cast<int>(seq.size());
    for (int p = 0; p < n; ++p) {
      const Mat eps =
          unvec_mat(x.segment(reg.offset_of(seq[p]), 256), 16, 16);
      Vec v = gs.noise_prep * gs.rho0;
      for (int q = 0; q < n; ++q) {
        if (q == p) v = eps * v;
        v = gs.ideal_of(seq[q]) * v;
      }
      shift += (gs.effect0 * gs.noise_effect).dot(v);
    }
    {  // eps_E inserted between the effect and the gate product
      const Mat eps = unvec_mat(x.segment(reg.offset_of("E"), 256), 16, 16);
      Vec v = gs.noise_prep * gs.rho0;
      for (int q = 0; q < n; ++q) v = gs.ideal_of(seq[q]) * v;
      shift += gs.effect0.dot(eps * v);
    }
    {  // eps_rho applied to |rho>> before everything
      const Mat eps = unvec_mat(x.segment(reg.offset_of("rho"), 256), 16, 16);
      Vec v = eps * gs.rho0;
      for (int q = 0; q < n; ++q) v = gs.ideal_of(seq[q]) * v;
      shift += (gs.effect0 * gs.noise_effect).dot(v);
    }
    CHECK(lin.a_row.dot(x) == doctest::Approx(shift).epsilon(1e-10));
  }
}

TEST_CASE("directional derivative against the finite-difference oracle") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  rng::Stream stream(11);
  const auto seqs = generate_random_sequences(gs.labels, 16, 20, 73);
  for (const auto& seq : seqs) {
    const LinearizedSequence lin = linearize(gs, seq, reg);
    const Vec x = 1e-4 * random_direction(reg.total, stream);
    const NoisyGateSet perturbed = apply_residual(gs, reg, x);
    const double exact = exact_outcome_raw(perturbed, seq);
    CHECK(std::abs(exact - (lin.m_bar + lin.a_row.dot(x))) <= 1e-6);
  }
}

TEST_CASE("linearization error scales quadratically in the residual norm") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  rng::Stream stream(13);

  double err_small = 0.0, err_large = 0.0;
  int count = 0;
  for (const int length : {8, 16, 32}) {
    const auto seqs = generate_random_sequences(gs.labels, length, 67,
                                                1000 + length);
    for (const auto& seq : seqs) {
      const LinearizedSequence lin = linearize(gs, seq, reg);
      const Vec dir = random_direction(reg.total, stream);
      for (const double norm : {1e-3, 1e-2}) {
        const Vec x = norm * dir;
        const double exact = exact_outcome_raw(apply_residual(gs, reg, x), seq);
        const double err = std::abs(exact - (lin.m_bar + lin.a_row.dot(x)));
        (norm == 1e-3 ? err_small : err_large) += err;
      }
      ++count;
    }
  }
  CHECK(count >= 200);
  const double ratio = err_large / err_small;
  CHECK(ratio > 50.0);
  CHECK(ratio < 200.0);
}

TEST_CASE("the linear model is exact in x by construction") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  rng::Stream stream(17);
  const LinearizedSequence lin =
      linearize(gs, {"x1", "cz", "x2", "z1"}, reg);
  const Vec x = random_direction(reg.total, stream);
  const double d1 = lin.a_row.dot(x);
  const double d2 = lin.a_row.dot((2.0 * x).eval());
  CHECK(d2 == doctest::Approx(2.0 * d1).epsilon(1e-14));
}

TEST_CASE("repeated gates accumulate as the sum of single-position blocks") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  const int k = 5;
  const GateSequence seq(k, "x2");
  const LinearizedSequence lin = linearize(gs, seq, reg);

  // Sum of per-position insertions, each built independently.
  Mat block_sum = Mat::Zero(16, 16);
  for (int p = 0; p < k; ++p) {
    RowVec left = gs.effect0 * gs.noise_effect;
    for (int q = k - 1; q > p; --q) left = left * gs.ideal_of("x2");
    left = left * gs.ideal_of("x2");  // the gate at position p itself
    Vec right = gs.noise_prep * gs.rho0;
    for (int q = 0; q < p; ++q) right = gs.ideal_of("x2") * right;
    block_sum += left.transpose() * right.transpose();
  }
  const Vec expected = vec_mat(block_sum);
  const Vec actual = lin.a_row.segment(reg.offset_of("x2"), 256);
  CHECK((actual - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("linearization around non-identity means tracks the mean channels") {
  NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  rng::Stream stream(19);
  Vec mean(reg.total);
  for (int i = 0; i < reg.total; ++i) mean(i) = 2e-3 * stream.normal();
  const NoisyGateSet gs_mean = apply_residual(gs, reg, mean);

  const auto seqs = generate_random_sequences(gs.labels, 12, 10, 79);
  for (const auto& seq : seqs) {
    const LinearizedSequence lin = linearize(gs_mean, seq, reg);
    CHECK(lin.m_bar ==
          doctest::Approx(exact_outcome_raw(gs_mean, seq)).epsilon(1e-12));
    const Vec dx = 1e-4 * random_direction(reg.total, stream);
    const double exact =
        exact_outcome_raw(apply_residual(gs, reg, (mean + dx).eval()), seq);
    CHECK(std::abs(exact - (lin.m_bar + lin.a_row.dot(dx))) < 1e-6);
  }
}

TEST_CASE("unknown gate label and pathological prior are rejected") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  CHECK_THROWS_AS(linearize(gs, {"bogus"}, reg), std::out_of_range);

  NoisyGateSet broken = gs;
  broken.noise[0](3, 3) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(linearize(broken, {"x1", "x1"}, reg), std::runtime_error);
}

}  // TEST_SUITE
