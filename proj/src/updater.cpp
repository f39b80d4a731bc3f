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

#include "fbtomo/updater.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <thread>

#include "fbtomo/postproc.hpp"

namespace fbt {

GaussianState make_gaussian_state(const ResidualRegistry& reg) {
  GaussianState state;
  state.registry = reg;
  state.mean = Vec::Zero(reg.total);
  state.cov = Mat::Zero(reg.total, reg.total);
  return state;
}

void GaussianState::symmetrize() { cov = Mat(0.5 * (cov + cov.transpose())); }

void GaussianState::invalidate_factor() {
  factor_valid = false;
  factor_triangular = false;
}

namespace {
constexpr double kEigFloor = -1e-10;
}

void GaussianState::ensure_factor() {
  if (factor_valid) return;
  const Eigen::Index n = cov.rows();

  // Exactly diagonal covariances (cold boots, frozen blocks) factor directly.
  bool diagonal = true;
  for (Eigen::Index j = 0; j < n && diagonal; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j && cov(i, j) != 0.0) {
        diagonal = false;
        break;
      }
  if (diagonal) {
    if (cov.diagonal().minCoeff() < kEigFloor)
      throw std::runtime_error("covariance lost positive semidefiniteness");
    factor = Mat::Zero(n, n);
    factor.diagonal() = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    factor_triangular = true;
    factor_valid = true;
    return;
  }

  Eigen::LLT<Mat> llt(cov);
  if (llt.info() == Eigen::Success) {
    factor = llt.matrixL();
    factor_triangular = true;
    factor_valid = true;
    return;
  }

  // Semidefinite: pivoted LDLT, clipping roundoff-negative pivots.
  Eigen::LDLT<Mat> ldlt(cov);
  Vec d = ldlt.vectorD();
  if (ldlt.info() == Eigen::Success && d.minCoeff() > -1e-8) {
    factor = ldlt.matrixL();
    factor = factor * d.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    factor = ldlt.transpositionsP().transpose() * factor;
    factor_triangular = false;
    factor_valid = true;
    return;
  }

  // Last resort: definitive spectral check and floor.
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  if (es.eigenvalues().minCoeff() < kEigFloor)
    throw std::runtime_error("covariance lost positive semidefiniteness");
  const Vec clipped = es.eigenvalues().cwiseMax(0.0);
  factor = es.eigenvectors() * clipped.cwiseSqrt().asDiagonal();
  cov = factor * factor.transpose();  // floored covariance
  symmetrize();
  factor_triangular = false;
  factor_valid = true;
}

Vec GaussianState::sample(rng::Stream& stream) {
  ensure_factor();
  Vec z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = stream.normal();
  return mean + factor * z;
}

double GaussianState::min_cov_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(cov, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool cholesky_downdate(Mat& l, Vec w) {
  const Eigen::Index n = l.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double dkk = l(k, k);
    const double r2 = dkk * dkk - w(k) * w(k);
    if (r2 <= 0.0) return false;
    const double r = std::sqrt(r2);
    const double c = r / dkk;
    const double s = w(k) / dkk;
    l(k, k) = r;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      l(i, k) = (l(i, k) - s * w(i)) / c;
      w(i) = c * w(i) - s * l(i, k);
    }
  }
  return true;
}

double shot_noise_variance(double m_pred, long shots) {
  if (shots < 1) throw std::invalid_argument("shots must be positive");
  const double n = static_cast<double>(shots);
  const double binom = m_pred * (1.0 - m_pred) / n;
  const double floor = 1.0 / (4.0 * n * n);
  return std::max(binom, floor);
}

double predict(const GaussianState& state, const LinearizedSequence& lin,
               const Vec* lin_mean) {
  double predicted = lin.m_bar;
  if (lin_mean) predicted += lin.a_row.dot(state.mean - *lin_mean);
  return predicted;
}

void update(GaussianState& state, const LinearizedSequence& lin,
            const ObservationRecord& obs, double var_shot, double var_approx,
            const Vec* lin_mean, UpdateDiagnostics* diag) {
  const Vec& a = lin.a_row;
  if (a.size() != state.mean.size())
    throw std::invalid_argument("sensitivity row length mismatch");

  const double predicted = predict(state, lin, lin_mean);
  const double innovation = obs.observed_frequency - predicted;
  if (!std::isfinite(innovation)) throw std::runtime_error("non-finite innovation");

  const double s2 = var_shot + var_approx;
  if (s2 <= 0.0) throw std::runtime_error("non-positive observation variance");

  Vec v = state.cov.selfadjointView<Eigen::Lower>() * a;
  const double q = std::max(0.0, a.dot(v));
  const double denom = q + s2;

  state.mean.noalias() += v * (innovation / denom);
  state.cov.selfadjointView<Eigen::Lower>().rankUpdate(v, -1.0 / denom);
  state.cov = Mat(state.cov.selfadjointView<Eigen::Lower>());  // re-symmetrize

  if (state.factor_valid && state.factor_triangular) {
    Vec w = v / std::sqrt(denom);
    if (!cholesky_downdate(state.factor, w)) state.invalidate_factor();
  } else {
    state.invalidate_factor();
  }

  ++state.update_count;

  if (diag) {
    diag->innovation = innovation;
    diag->predicted = predicted;
    diag->var_shot = var_shot;
    diag->var_approx = var_approx;
    diag->s2 = s2;
    diag->prior_direction_var = q;
    diag->post_direction_var = q * s2 / denom;
  }
}

double approximation_error_variance(GaussianState& state, const NoisyGateSet& base,
                                    const LinearizedSequence& lin,
                                    const Vec& lin_mean, int n_samples,
                                    std::uint64_t seed, int n_threads) {
  if (n_samples < 2) throw std::invalid_argument("need at least 2 samples");

  // Draw all samples up front (sampling mutates the factor cache, so it stays
  // on the calling thread); the projection/evaluation fan-out is stateless.
  Mat draws(state.mean.size(), n_samples);
  for (int s = 0; s < n_samples; ++s) {
    rng::Stream stream(seed, static_cast<std::uint64_t>(s));
    draws.col(s) = state.sample(stream);
  }

  Vec discrepancy(n_samples);
  const auto worker = [&](int begin, int end) {
    for (int s = begin; s < end; ++s) {
      NoisyGateSet gs = apply_residual(base, state.registry, draws.col(s));
      for (auto& lambda : gs.noise) lambda = cptp_project(lambda);
      gs.noise_effect = cptp_project(gs.noise_effect);
      gs.noise_prep = cptp_project(gs.noise_prep);
      const Vec x_proj = residual_from_gateset(gs, state.registry);
      const double exact = exact_outcome_raw(gs, lin.sequence, lin.projection);
      const double linear = lin.m_bar + lin.a_row.dot(x_proj - lin_mean);
      if (!std::isfinite(exact) || !std::isfinite(linear))
        throw std::runtime_error("non-finite outcome while sampling approximation error");
      discrepancy(s) = exact - linear;
    }
  };

  int threads = n_threads > 0 ? n_threads
                              : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n_samples));
  if (threads == 1) {
    worker(0, n_samples);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_samples + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(n_samples, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  const double mean = discrepancy.mean();
  return (discrepancy.array() - mean).square().sum() / (n_samples - 1);
}

bool maybe_drop_approximation_error(GaussianState& state, double var_approx,
                                    double var_shot, double ratio, int window) {
  if (!state.approx_error_active) return false;
  if (var_approx < ratio * var_shot) {
    if (++state.approx_below_count >= window) {
      state.approx_error_active = false;
      state.approx_below_count = 0;
    }
  } else {
    state.approx_below_count = 0;
  }
  return state.approx_error_active;
}

// --------------------------------------------------------------------------
// Checkpoint: "FBTCKPT1" magic, u64 header length, JSON header, then raw
// little-endian doubles for mean and covariance.

namespace {
constexpr char kMagic[8] = {'F', 'B', 'T', 'C', 'K', 'P', 'T', '1'};

void write_raw(std::ofstream& out, const double* data, size_t count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

void read_raw(std::ifstream& in, double* data, size_t count) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("truncated checkpoint");
}
}  // namespace

void save_checkpoint(const GaussianState& state, const std::string& path) {
  nlohmann::json header;
  header["format"] = "fbtomo/checkpoint@1";
  header["update_count"] = state.update_count;
  header["approx_error_active"] = state.approx_error_active;
  header["approx_below_count"] = state.approx_below_count;
  header["provenance"] = state.provenance;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : state.registry.entries)
    entries.push_back({{"owner", e.owner}, {"offset", e.offset}, {"length", e.length}});
  header["registry"] = {{"block_dim", state.registry.block_dim},
                        {"total", state.registry.total},
                        {"entries", std::move(entries)}};
  const std::string hdr = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t hlen = hdr.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
  write_raw(out, state.mean.data(), static_cast<size_t>(state.mean.size()));
  write_raw(out, state.cov.data(), static_cast<size_t>(state.cov.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

GaussianState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hdr(hlen, '\0');
  in.read(hdr.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("truncated checkpoint header");
  const nlohmann::json header = nlohmann::json::parse(hdr);
  if (header.value("format", "") != "fbtomo/checkpoint@1")
    throw std::runtime_error("unsupported checkpoint format tag");

  GaussianState state;
  state.update_count = header.at("update_count").get<long>();
  state.approx_error_active = header.at("approx_error_active").get<bool>();
  state.approx_below_count = header.value("approx_below_count", 0);
  state.provenance = header.value("provenance", "");
  const auto& reg = header.at("registry");
  state.registry.block_dim = reg.at("block_dim").get<int>();
  state.registry.total = reg.at("total").get<int>();
  for (const auto& e : reg.at("entries"))
    state.registry.entries.push_back({e.at("owner").get<std::string>(),
                                      e.at("offset").get<int>(),
                                      e.at("length").get<int>()});
  const int n = state.registry.total;
  state.mean.resize(n);
  state.cov.resize(n, n);
  read_raw(in, state.mean.data(), static_cast<size_t>(n));
  read_raw(in, state.cov.data(), static_cast<size_t>(n) * n);
  return state;
}

}  // namespace fbt
