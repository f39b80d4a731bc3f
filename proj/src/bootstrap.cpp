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

#include "fbtomo/bootstrap.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <thread>

#include "fbtomo/postproc.hpp"

namespace fbt {

Mat depolarizing_ptm(double strength, int dim2) {
  Mat r = (1.0 - strength) * Mat::Identity(dim2, dim2);
  r(0, 0) = 1.0;
  return r;
}

double entanglement_fidelity(const Mat& noise_ptm) {
  return noise_ptm.trace() / static_cast<double>(noise_ptm.rows());
}

namespace {

bool is_frozen(const BootstrapConfig& cfg, const std::string& owner) {
  return std::find(cfg.freeze.begin(), cfg.freeze.end(), owner) != cfg.freeze.end();
}

// Diagonal prior covariance; optionally zero variance on the first row of
// every block (trace preservation) and on frozen owners.
void fill_diagonal_cov(const ResidualRegistry& reg, const BootstrapConfig& cfg,
                       const std::map<std::string, double>& per_owner_scale,
                       Mat& cov) {
  const int d2 = reg.block_dim;
  for (const auto& entry : reg.entries) {
    double s2 = cfg.default_cov_scale;
    if (const auto it = per_owner_scale.find(entry.owner); it != per_owner_scale.end())
      s2 = it->second;
    if (is_frozen(cfg, entry.owner)) s2 = 0.0;
    for (int col = 0; col < d2; ++col)
      for (int row = 0; row < d2; ++row) {
        const bool tp_frozen = cfg.tp_constrained && row == 0;
        cov(entry.offset + col * d2 + row, entry.offset + col * d2 + row) =
            tp_frozen ? 0.0 : s2;
      }
  }
}

}  // namespace

GaussianState blind_cold_boot(const NoisyGateSet& gs, const BootstrapConfig& cfg) {
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  GaussianState state = make_gaussian_state(reg);
  const int d2 = reg.block_dim;
  for (const auto& entry : reg.entries) {
    double p = 0.0;
    if (const auto it = cfg.depolarization.find(entry.owner);
        it != cfg.depolarization.end())
      p = it->second;
    else if (entry.owner != "E" && entry.owner != "rho")
      p = cfg.default_depolarization;
    state.mean.segment(entry.offset, entry.length) =
        vec_mat(depolarizing_ptm(p, d2) - Mat::Identity(d2, d2));
  }
  std::map<std::string, double> scales = cfg.cov_scale;
  fill_diagonal_cov(reg, cfg, scales, state.cov);
  state.provenance = "blind_cold";
  return state;
}

GaussianState fidelity_cold_boot(const NoisyGateSet& gs, const BootstrapConfig& cfg) {
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  const int d2 = reg.block_dim;
  const double d4 = static_cast<double>(d2) * d2;
  // Free diagonal entries of the residual under the TP constraint.
  const double n_diag = cfg.tp_constrained ? d2 - 1 : d2;

  GaussianState state = make_gaussian_state(reg);
  std::map<std::string, double> scales = cfg.cov_scale;
  for (const auto& entry : reg.entries) {
    const auto it = cfg.fidelity.find(entry.owner);
    if (it == cfg.fidelity.end()) {
      if (entry.owner != "E" && entry.owner != "rho" &&
          cfg.default_depolarization > 0.0)
        state.mean.segment(entry.offset, entry.length) = vec_mat(
            depolarizing_ptm(cfg.default_depolarization, d2) - Mat::Identity(d2, d2));
      continue;
    }
    const auto [f_bar, var_f] = it->second;
    if (!(f_bar > 0.0) || f_bar > 1.0)
      throw std::invalid_argument("mean fidelity must lie in (0, 1]");
    // Depolarizing channel with entanglement fidelity f_bar:
    // F = 1 - p (d^2-1)/d^2  =>  p = (1 - f_bar) d^2/(d^2 - 1).
    const double p = (1.0 - f_bar) * d2 / (d2 - 1.0);
    state.mean.segment(entry.offset, entry.length) =
        vec_mat(depolarizing_ptm(p, d2) - Mat::Identity(d2, d2));
    // First-order propagation: F = 1 + tr(eps)/d^2, so a per-component prior
    // variance s2 induces var_f = n_diag * s2 / d^4.
    scales[entry.owner] = var_f * d4 / n_diag;
  }
  fill_diagonal_cov(reg, cfg, scales, state.cov);

  if (cfg.n_samples >= 2) {
    const ResampleResult fixed = resample_cptp(gs, reg, state.mean, state.cov,
                                               cfg.n_samples, cfg.seed);
    state.mean = fixed.mean;
    state.cov = fixed.cov;
  }
  state.provenance = "fidelity_cold";
  return state;
}

GaussianState partial_warm_boot(const NoisyGateSet& gs, const BootstrapConfig& cfg) {
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  Vec mean;
  if (cfg.prev_mean) {
    mean = *cfg.prev_mean;
  } else if (!cfg.mean_checkpoint.empty()) {
    const GaussianState prev = load_checkpoint(cfg.mean_checkpoint);
    if (!prev.registry.matches(reg))
      throw std::invalid_argument("checkpoint registry does not match the gate set");
    mean = prev.mean;
  } else {
    throw std::invalid_argument("partial warm boot needs a previous mean");
  }
  if (mean.size() != reg.total)
    throw std::invalid_argument("previous mean length mismatch");

  Mat cov;
  if (cfg.guessed_cov) {
    cov = *cfg.guessed_cov;
    if (cov.rows() != reg.total || cov.cols() != reg.total)
      throw std::invalid_argument("guessed covariance dimension mismatch");
  } else {
    cov = Mat::Zero(reg.total, reg.total);
    fill_diagonal_cov(reg, cfg, cfg.cov_scale, cov);
  }

  const ResampleResult fixed =
      resample_cptp(gs, reg, mean, cov, cfg.n_samples, cfg.seed);
  GaussianState state = make_gaussian_state(reg);
  state.mean = fixed.mean;
  state.cov = fixed.cov;
  state.provenance = "partial_warm";
  return state;
}

GaussianState full_warm_boot(const NoisyGateSet& gs, const BootstrapConfig& cfg) {
  if (cfg.checkpoint.empty())
    throw std::invalid_argument("full warm boot needs a checkpoint path");
  GaussianState state = load_checkpoint(cfg.checkpoint);
  const ResidualRegistry reg = ResidualRegistry::for_gateset(gs);
  if (!state.registry.matches(reg))
    throw std::invalid_argument("checkpoint registry does not match the gate set");
  state.update_count = 0;
  state.approx_error_active = true;  // warm reboot re-arms the drop rule
  state.approx_below_count = 0;
  state.provenance = "full_warm";
  return state;
}

GaussianState bootstrap_prior(const NoisyGateSet& gs, const BootstrapConfig& cfg) {
  if (cfg.strategy == "blind_cold") return blind_cold_boot(gs, cfg);
  if (cfg.strategy == "fidelity_cold") return fidelity_cold_boot(gs, cfg);
  if (cfg.strategy == "partial_warm") return partial_warm_boot(gs, cfg);
  if (cfg.strategy == "full_warm") return full_warm_boot(gs, cfg);
  throw std::invalid_argument("unknown bootstrap strategy: " + cfg.strategy);
}

ResampleResult resample_cptp(const NoisyGateSet& base, const ResidualRegistry& reg,
                             const Vec& mean, const Mat& cov, int n_samples,
                             std::uint64_t seed, int n_threads) {
  if (n_samples < 2) throw std::invalid_argument("need at least 2 samples");

  GaussianState sampler = make_gaussian_state(reg);
  sampler.mean = mean;
  sampler.cov = cov;

  Mat draws(reg.total, n_samples);
  for (int s = 0; s < n_samples; ++s) {
    rng::Stream stream(seed, static_cast<std::uint64_t>(s));
    draws.col(s) = sampler.sample(stream);
  }

  Mat projected(reg.total, n_samples);
  std::vector<double> corrections(n_samples, 0.0);
  const auto worker = [&](int begin, int end) {
    for (int s = begin; s < end; ++s) {
      NoisyGateSet gs = apply_residual(base, reg, draws.col(s));
      double worst = 0.0;
      CptpInfo info;
      for (auto& lambda : gs.noise) {
        lambda = cptp_project(lambda, &info);
        worst = std::max(worst, info.correction_norm);
      }
      gs.noise_effect = cptp_project(gs.noise_effect, &info);
      worst = std::max(worst, info.correction_norm);
      gs.noise_prep = cptp_project(gs.noise_prep, &info);
      worst = std::max(worst, info.correction_norm);
      projected.col(s) = residual_from_gateset(gs, reg);
      corrections[s] = worst;
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

  ResampleResult out;
  out.mean = projected.rowwise().mean();
  const Mat centered = projected.colwise() - out.mean;
  out.cov = (centered * centered.transpose()) / (n_samples - 1);
  out.cov = Mat(0.5 * (out.cov + out.cov.transpose()));
  out.max_correction =
      *std::max_element(corrections.begin(), corrections.end());

  const bool rank_deficient =
      n_samples - 1 < reg.total || out.cov.diagonal().minCoeff() <= 0.0;
  if (rank_deficient) {
    out.cov.diagonal().array() += 1e-12;
    out.jittered = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON form used by the service payload and the CLI.

BootstrapConfig BootstrapConfig::from_json(const nlohmann::json& j) {
  BootstrapConfig cfg;
  cfg.strategy = j.value("strategy", "blind_cold");
  if (j.contains("depolarization"))
    cfg.depolarization = j.at("depolarization").get<std::map<std::string, double>>();
  cfg.default_depolarization = j.value("default_depolarization", 0.0);
  if (j.contains("cov_scale"))
    cfg.cov_scale = j.at("cov_scale").get<std::map<std::string, double>>();
  cfg.default_cov_scale = j.value("default_cov_scale", 1e-4);
  if (j.contains("fidelity"))
    for (const auto& [gate, stats] : j.at("fidelity").items())
      cfg.fidelity[gate] = {stats.at("mean").get<double>(),
                            stats.at("variance").get<double>()};
  if (j.contains("prev_mean")) {
    const auto arr = j.at("prev_mean").get<std::vector<double>>();
    cfg.prev_mean = Eigen::Map<const Vec>(arr.data(), arr.size());
  }
  cfg.mean_checkpoint = j.value("mean_checkpoint", "");
  cfg.checkpoint = j.value("checkpoint", "");
  cfg.n_samples = j.value("n_samples", 1000);
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.tp_constrained = j.value("tp_constrained", true);
  if (j.contains("freeze"))
    cfg.freeze = j.at("freeze").get<std::vector<std::string>>();
  return cfg;
}

nlohmann::json BootstrapConfig::to_json() const {
  nlohmann::json j;
  j["strategy"] = strategy;
  if (!depolarization.empty()) j["depolarization"] = depolarization;
  j["default_depolarization"] = default_depolarization;
  if (!cov_scale.empty()) j["cov_scale"] = cov_scale;
  j["default_cov_scale"] = default_cov_scale;
  if (!fidelity.empty()) {
    nlohmann::json f = nlohmann::json::object();
    for (const auto& [gate, stats] : fidelity)
      f[gate] = {{"mean", stats.first}, {"variance", stats.second}};
    j["fidelity"] = std::move(f);
  }
  if (prev_mean)
    j["prev_mean"] = std::vector<double>(prev_mean->data(),
                                         prev_mean->data() + prev_mean->size());
  if (!mean_checkpoint.empty()) j["mean_checkpoint"] = mean_checkpoint;
  if (!checkpoint.empty()) j["checkpoint"] = checkpoint;
  j["n_samples"] = n_samples;
  j["seed"] = seed;
  j["tp_constrained"] = tp_constrained;
  if (!freeze.empty()) j["freeze"] = freeze;
  return j;
}

}  // namespace fbt
