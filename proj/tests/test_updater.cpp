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

#include "fbtomo/bootstrap.hpp"
#include "fbtomo/session.hpp"
#include "fbtomo/simulator.hpp"
#include "fbtomo/updater.hpp"
#include "test_util.hpp"

using namespace fbt;

namespace {

GaussianState scalar_state(double mean, double var) {
  GaussianState s;
  s.registry.block_dim = 1;
  s.registry.total = 1;
  s.registry.entries = {{"g", 0, 1}};
  s.mean = Vec::Constant(1, mean);
  s.cov = Mat::Constant(1, 1, var);
  return s;
}

LinearizedSequence scalar_lin(double m_bar, double a) {
  LinearizedSequence lin;
  lin.m_bar = m_bar;
  lin.a_row = Vec::Constant(1, a);
  return lin;
}

ObservationRecord obs_of(double freq, int shots) {
  ObservationRecord rec;
  rec.sequence = {};
  rec.observed_frequency = freq;
  rec.shots = shots;
  return rec;
}

}  // namespace

TEST_SUITE("updater") {

TEST_CASE("textbook scalar conjugate update: N(0,1) -> N(0.5, 0.5)") {
  GaussianState state = scalar_state(0.0, 1.0);
  const ObservationRecord rec = obs_of(1.0, 100);
  update(state, scalar_lin(0.0, 1.0), rec, /*var_shot=*/1.0, /*var_approx=*/0.0);
  CHECK(state.mean(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(state.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(state.update_count == 1);
}

TEST_CASE("zero sensitivity row leaves the state unchanged") {
  GaussianState state = scalar_state(0.3, 0.7);
  update(state, scalar_lin(0.1, 0.0), obs_of(0.9, 10), 0.01, 0.0);
  CHECK(state.mean(0) == 0.3);
  CHECK(state.cov(0, 0) == 0.7);
}

TEST_CASE("non-positive observation variance is a hard error") {
  GaussianState state = scalar_state(0.0, 1.0);
  CHECK_THROWS_AS(update(state, scalar_lin(0.0, 1.0), obs_of(0.5, 10), 0.0, 0.0),
                  std::runtime_error);
}

TEST_CASE("shot noise variance: binomial values and the floor") {
  CHECK(shot_noise_variance(0.5, 100) == doctest::Approx(0.0025).epsilon(1e-15));
  CHECK(shot_noise_variance(0.9, 100) == doctest::Approx(9e-4).epsilon(1e-12));
  CHECK(shot_noise_variance(0.0, 100) == doctest::Approx(2.5e-5).epsilon(1e-15));
  // The floor sits below any achievable nonzero binomial variance at 100 shots.
  const double min_nonzero = (1.0 / 100) * (1.0 - 1.0 / 100) / 100;
  CHECK(2.5e-5 < min_nonzero);
  CHECK_THROWS_AS(shot_noise_variance(0.5, 0), std::invalid_argument);
}

TEST_CASE("sequential rank-one updates equal the joint GLS posterior") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);

  BootstrapConfig boot;
  boot.default_cov_scale = 1e-4;
  boot.tp_constrained = false;  // full-rank prior for a clean joint solve
  GaussianState state = blind_cold_boot(gs, boot);
  const Vec m0 = state.mean;
  const Mat gamma0 = state.cov;

  const NoisyGateSet lin_gs = apply_residual(gs, reg, m0);
  const auto sequences = generate_random_sequences(gs.labels, 8, 10, 911);
  rng::Stream stream(13);

  const int k = 10;
  Mat a_rows(k, reg.total);
  Vec y(k), m_bar(k), s2(k);
  std::vector<LinearizedSequence> lins;
  for (int i = 0; i < k; ++i) {
    lins.push_back(linearize(lin_gs, sequences[i], reg));
    a_rows.row(i) = lins.back().a_row.transpose();
    m_bar(i) = lins.back().m_bar;
    y(i) = std::clamp(m_bar(i) + 0.05 * stream.normal(), 0.0, 1.0);
    y(i) = std::round(y(i) * 100) / 100.0;
    s2(i) = shot_noise_variance(std::clamp(m_bar(i), 0.0, 1.0), 100);
  }

  // Joint GLS oracle: one dense solve over all 10 observations.
  const Mat gram = a_rows * gamma0 * a_rows.transpose() + Mat(s2.asDiagonal());
  const Mat gain = gamma0 * a_rows.transpose() * gram.inverse();
  const Vec joint_mean = m0 + gain * (y - m_bar);
  const Mat joint_cov = gamma0 - gain * a_rows * gamma0;

  // Sequential path with the linearization point frozen at m0.
  for (int i = 0; i < k; ++i) {
    ObservationRecord rec = obs_of(y(i), 100);
    rec.sequence = sequences[i];
    update(state, lins[i], rec, s2(i), 0.0, &m0);
  }

  CHECK((state.mean - joint_mean).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((state.cov - joint_cov).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("variance along the measured direction never increases") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  BootstrapConfig boot;
  GaussianState state = blind_cold_boot(gs, boot);
  const Vec m0 = state.mean;
  const NoisyGateSet lin_gs = apply_residual(gs, reg, m0);

  const auto sequences = generate_random_sequences(gs.labels, 10, 50, 977);
  rng::Stream stream(17);
  for (const auto& seq : sequences) {
    const LinearizedSequence lin = linearize(lin_gs, seq, reg);
    ObservationRecord rec = obs_of(std::round(std::clamp(
        lin.m_bar + 0.1 * stream.normal(), 0.0, 1.0) * 50) / 50.0, 50);
    rec.sequence = seq;
    UpdateDiagnostics diag;
    update(state, lin, rec, shot_noise_variance(0.5, 50), 0.0, &m0, &diag);
    CHECK(diag.post_direction_var <= diag.prior_direction_var + 1e-15);
    // Cross-check the diagnostic against the actual covariance.
    const double measured = lin.a_row.dot(state.cov * lin.a_row);
    CHECK(measured == doctest::Approx(diag.post_direction_var)
                          .epsilon(1e-8));
  }
}

TEST_CASE("cholesky downdate matches a fresh factorization") {
  rng::Stream stream(23);
  const int n = 40;
  Mat base(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) base(i, j) = stream.normal();
  Mat cov = base * base.transpose() + 0.5 * Mat::Identity(n, n);

  Eigen::LLT<Mat> llt(cov);
  REQUIRE(llt.info() == Eigen::Success);
  Mat l = llt.matrixL();

  for (int round = 0; round < 100; ++round) {
    Vec a(n);
    for (int i = 0; i < n; ++i) a(i) = stream.normal();
    const Vec v = cov * a;
    const double denom = a.dot(v) + 0.3;
    Vec w = v / std::sqrt(denom);
    REQUIRE(cholesky_downdate(l, w));
    cov -= v * v.transpose() / denom;
    CHECK(test::max_abs_diff(Mat(l * l.transpose()), cov) < 1e-9);
  }
}

TEST_CASE("approximation error variance: zero covariance gives zero") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  GaussianState state = make_gaussian_state(reg);
  const LinearizedSequence lin = linearize(gs, {"x1", "x2", "cz"}, reg);
  const double v = approximation_error_variance(state, gs, lin, state.mean, 16, 5);
  CHECK(v == doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("approximation error variance: within 2x of a high-sample reference") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  BootstrapConfig boot;
  boot.default_cov_scale = 1e-5;
  GaussianState state = blind_cold_boot(gs, boot);
  const auto seq = generate_random_sequences(gs.labels, 32, 1, 1009)[0];
  const NoisyGateSet lin_gs = apply_residual(gs, reg, state.mean);
  const LinearizedSequence lin = linearize(lin_gs, seq, reg);

  const double v100 =
      approximation_error_variance(state, gs, lin, state.mean, 100, 42);
  const double v_ref =
      approximation_error_variance(state, gs, lin, state.mean, 10000, 43);
  CHECK(v100 > 0.0);
  CHECK(v100 < 2.0 * v_ref);
  CHECK(v100 > 0.5 * v_ref);
}

TEST_CASE("approximation error shrinks with the posterior covariance") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  BootstrapConfig boot;
  boot.default_cov_scale = 1e-5;
  const GaussianState base = blind_cold_boot(gs, boot);
  const auto seq = generate_random_sequences(gs.labels, 32, 1, 1013)[0];
  const LinearizedSequence lin =
      linearize(apply_residual(gs, reg, base.mean), seq, reg);

  double last = std::numeric_limits<double>::infinity();
  for (const double scale : {1.0, 0.25, 0.0625, 0.01}) {
    GaussianState state = base;
    state.cov *= scale;
    const double v =
        approximation_error_variance(state, gs, lin, state.mean, 400, 7);
    CHECK(v < last);
    last = v;
  }
}

TEST_CASE("drop rule: consecutive-window bookkeeping") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  GaussianState state = make_gaussian_state(ResidualRegistry::for_gateset(gs));

  SUBCASE("always below threshold drops after the window") {
    for (int i = 0; i < 19; ++i) {
      CHECK(maybe_drop_approximation_error(state, 0.0, 1e-3));
      CHECK(state.approx_error_active);
    }
    CHECK_FALSE(maybe_drop_approximation_error(state, 0.0, 1e-3));
    CHECK_FALSE(state.approx_error_active);
    // Once off, stays off.
    CHECK_FALSE(maybe_drop_approximation_error(state, 0.0, 1e-3));
  }

  SUBCASE("equal variances never drop") {
    for (int i = 0; i < 200; ++i)
      CHECK(maybe_drop_approximation_error(state, 1e-3, 1e-3));
    CHECK(state.approx_error_active);
  }

  SUBCASE("a spike resets the consecutive counter") {
    for (int i = 0; i < 15; ++i) maybe_drop_approximation_error(state, 0.0, 1e-3);
    maybe_drop_approximation_error(state, 1e-3, 1e-3);
    for (int i = 0; i < 19; ++i) {
      CHECK(maybe_drop_approximation_error(state, 0.0, 1e-3));
    }
    CHECK_FALSE(maybe_drop_approximation_error(state, 0.0, 1e-3));
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);
  BootstrapConfig boot;
  boot.default_depolarization = 0.01;
  GaussianState state = blind_cold_boot(gs, boot);
  state.update_count = 123;
  state.approx_error_active = false;
  state.provenance = "blind_cold";
  rng::Stream stream(29);
  for (int i = 0; i < state.mean.size(); ++i) state.mean(i) += 1e-6 * stream.normal();

  const std::string path = "updater_ckpt_test.bin";
  save_checkpoint(state, path);
  const GaussianState back = load_checkpoint(path);
  std::remove(path.c_str());

  CHECK(back.registry.matches(state.registry));
  CHECK(back.update_count == 123);
  CHECK_FALSE(back.approx_error_active);
  CHECK(back.provenance == "blind_cold");
  CHECK((back.mean - state.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.cov - state.cov).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("order robustness at convergence (statistical)") {
  const NoisyGateSet gs = ideal_two_qubit_gateset(CzVariant::cz);

  // Simulate a modest dataset with a small coherent error on x1.
  NoiseInjection injection;
  injection.static_coeffs["x1/H/IX"] = 0.01;
  ExperimentPlan plan;
  plan.kind = "length_sweep";
  plan.lengths = {8};
  plan.n_sequences = 400;
  plan.shots = 100;
  plan.seed = 303;
  const auto records = simulate(plan, injection, gs);

  SessionConfig scfg;
  scfg.track_history = false;
  BootstrapConfig boot;
  boot.default_cov_scale = 1e-4;

  EstimationSession forward(gs, blind_cold_boot(gs, boot), scfg);
  forward.state().approx_error_active = false;
  for (const auto& rec : records) forward.ingest(rec);

  auto shuffled = records;
  rng::Stream stream(31);
  for (size_t i = shuffled.size(); i > 1; --i)
    std::swap(shuffled[i - 1], shuffled[stream.bounded(i)]);
  EstimationSession permuted(gs, blind_cold_boot(gs, boot), scfg);
  permuted.state().approx_error_active = false;
  for (const auto& rec : shuffled) permuted.ingest(rec);

  const Vec diff = forward.state().mean - permuted.state().mean;
  const Vec pooled_sd = (forward.state().cov.diagonal() +
                         permuted.state().cov.diagonal()).cwiseSqrt();
  int violations = 0;
  for (int i = 0; i < diff.size(); ++i)
    if (std::abs(diff(i)) > 3.0 * pooled_sd(i) + 1e-12) ++violations;
  CHECK(violations == 0);
}

}  // TEST_SUITE
