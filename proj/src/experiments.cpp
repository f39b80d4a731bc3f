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

#include "fbtomo/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fbt {

namespace {

// Decompose one residual vector's gate channels under a fixed gauge.
std::vector<ErrorGeneratorDecomposition> decompose_under_gauge(
    const NoisyGateSet& ideal, const ResidualRegistry& reg, const Vec& x,
    const Mat& gauge) {
  NoisyGateSet gs = apply_residual(ideal, reg, x);
  for (auto& lambda : gs.noise) lambda = cptp_project(lambda);
  gs = apply_gauge(gs, gauge);
  std::vector<ErrorGeneratorDecomposition> out;
  out.reserve(gs.labels.size());
  for (const auto& lambda : gs.noise)
    out.push_back(decompose_generator(error_generator(cptp_project(lambda))));
  return out;
}

}  // namespace

PosteriorSnapshot postprocess_estimate(const NoisyGateSet& ideal,
                                       const ResidualRegistry& reg, const Vec& mean,
                                       double w_g, double w_s) {
  NoisyGateSet gs = apply_residual(ideal, reg, mean);
  for (auto& lambda : gs.noise) lambda = cptp_project(lambda);
  gs.noise_effect = cptp_project(gs.noise_effect);
  gs.noise_prep = cptp_project(gs.noise_prep);

  const GaugeResult gauged = gauge_optimize(gs, ideal, w_g, w_s);

  PosteriorSnapshot snap;
  snap.gauge = gauged.transform.s;
  snap.gauge_objective = gauged.objective;
  for (size_t i = 0; i < gauged.gateset.labels.size(); ++i) {
    GateSnapshot g;
    g.gate = gauged.gateset.labels[i];
    g.noise = cptp_project(gauged.gateset.noise[i]);
    g.decomposition = decompose_generator(error_generator(g.noise));
    g.infidelity = infidelity_report(g.noise);
    snap.gates.push_back(std::move(g));
  }
  return snap;
}

// ---------------------------------------------------------------------------
// Length sweep

LengthSweepResult run_length_sweep(
    const std::map<int, std::vector<ObservationRecord>>& records_per_length,
    const NoisyGateSet& ideal, const AnalysisConfig& config) {
  LengthSweepResult result;

  for (const auto& [length, records] : records_per_length) {
    result.lengths.push_back(length);

    AnalysisConfig cfg = config;
    cfg.session.seed = config.session.seed ^ (0x9e3779b97f4a7c15ULL * (length + 1));

    GaussianState boot = bootstrap_prior(ideal, cfg.boot);
    EstimationSession session(ideal, std::move(boot), cfg.session);
    for (const auto& rec : records) session.ingest(rec);

    const bool enough = records.size() >= 32;  // convergence diagnostics floor
    result.converged[length] = enough;

    const ResidualRegistry& reg = session.registry();
    PosteriorSnapshot snap = postprocess_estimate(ideal, reg, session.state().mean,
                                                  cfg.gauge_wg, cfg.gauge_ws);

    // Credible intervals from posterior resampling through the decomposition.
    std::map<std::string, std::vector<double>> samples;  // gate/CLS/label
    GaussianState& state = session.state();
    for (int d = 0; d < cfg.ci_draws; ++d) {
      rng::Stream stream(cfg.ci_seed ^ (0xabcdULL * (length + 1)),
                         static_cast<std::uint64_t>(d));
      const Vec x = state.sample(stream);
      const auto decs = decompose_under_gauge(ideal, reg, x, snap.gauge);
      for (size_t i = 0; i < decs.size(); ++i) {
        for (const auto& [label, value] : decs[i].h)
          samples[ideal.labels[i] + "/H/" + label].push_back(value);
        for (const auto& [label, value] : decs[i].s)
          samples[ideal.labels[i] + "/S/" + label].push_back(value);
      }
    }

    for (size_t i = 0; i < snap.gates.size(); ++i) {
      const auto emit = [&](char cls, const std::map<std::string, double>& coeffs) {
        for (const auto& [label, value] : coeffs) {
          CoefficientRow row;
          row.gate = snap.gates[i].gate;
          row.cls = cls;
          row.label = label;
          row.length = length;
          row.value = value;
          const auto it = samples.find(row.gate + "/" + cls + "/" + label);
          if (it != samples.end() && it->second.size() > 2) {
            const auto& v = it->second;
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            var /= (v.size() - 1);
            const double half = 3.0 * std::sqrt(var);  // 99.7% interval
            row.ci_low = value - half;
            row.ci_high = value + half;
          } else {
            row.ci_low = row.ci_high = value;
          }
          result.table.push_back(std::move(row));
        }
      };
      emit('H', snap.gates[i].decomposition.h);
      emit('S', snap.gates[i].decomposition.s);
    }
    result.snapshots.emplace(length, std::move(snap));
  }
  std::sort(result.lengths.begin(), result.lengths.end());
  return result;
}

LengthSweepResult run_length_sweep_simulated(const ExperimentPlan& plan_template,
                                             const NoiseInjection& injection,
                                             const NoisyGateSet& truth_gateset,
                                             const NoisyGateSet& ideal,
                                             const std::vector<int>& lengths,
                                             const AnalysisConfig& config) {
  std::map<int, std::vector<ObservationRecord>> data;
  for (const int length : lengths) {
    ExperimentPlan plan = plan_template;
    plan.kind = "length_sweep";
    plan.lengths = {length};
    plan.seed = plan_template.seed ^ (0x51f15eedULL + length);
    data[length] = simulate(plan, injection, truth_gateset);
  }
  return run_length_sweep(data, ideal, config);
}

// ---------------------------------------------------------------------------
// Drift tracking

DriftTrackResult run_drift_tracking(const std::vector<ObservationRecord>& records,
                                    const NoisyGateSet& ideal,
                                    const AnalysisConfig& config, int top_k) {
  // Group into batches, enforcing lab-time order.
  std::vector<std::pair<int, std::vector<ObservationRecord>>> batches;
  for (const auto& rec : records) {
    if (!rec.batch_id) throw std::invalid_argument("drift tracking needs batch ids");
    const int b = *rec.batch_id;
    if (batches.empty() || b != batches.back().first) {
      if (!batches.empty() && b <= batches.back().first)
        throw std::invalid_argument("batches must arrive in lab-time order");
      batches.emplace_back(b, std::vector<ObservationRecord>{});
    }
    batches.back().second.push_back(rec);
  }
  if (batches.empty()) throw std::invalid_argument("no records");

  DriftTrackResult result;
  GaussianState boot = bootstrap_prior(ideal, config.boot);
  EstimationSession session(ideal, std::move(boot), config.session);
  const ResidualRegistry& reg = session.registry();

  for (const auto& [batch_id, batch_records] : batches) {
    if (&batch_records != &batches.front().second) {
      // Inter-batch boot: the previous posterior becomes the next prior.
      if (config.rewarm == "partial" && config.rewarm_cov_scale > 0.0) {
        BootstrapConfig rw;
        rw.strategy = "partial_warm";
        rw.prev_mean = session.state().mean;
        rw.default_cov_scale = config.rewarm_cov_scale;
        rw.n_samples = config.rewarm_samples;
        rw.seed = config.boot.seed ^ static_cast<std::uint64_t>(batch_id);
        rw.tp_constrained = config.boot.tp_constrained;
        rw.freeze = config.boot.freeze;
        session.reboot(partial_warm_boot(ideal, rw), config.reactivate_approx);
      } else {
        GaussianState carried = session.state();
        carried.update_count = 0;
        carried.provenance = "full_warm";
        session.reboot(std::move(carried), config.reactivate_approx);
      }
    }

    double time_sum = 0.0;
    for (const auto& rec : batch_records) {
      session.ingest(rec);
      time_sum += rec.timestamp;
    }
    const double batch_time = time_sum / batch_records.size();
    result.batch_times.push_back(batch_time);
    result.cov_traces.push_back(session.state().cov.trace());

    PosteriorSnapshot snap = postprocess_estimate(ideal, reg, session.state().mean,
                                                  config.gauge_wg, config.gauge_ws);

    // Per-batch resampled half-widths for the coefficient series.
    std::map<std::string, std::vector<double>> draws;
    if (config.ci_draws_per_batch > 1) {
      GaussianState& state = session.state();
      for (int d = 0; d < config.ci_draws_per_batch; ++d) {
        rng::Stream stream(config.ci_seed ^ (0xd21f7ULL * (batch_id + 1)),
                           static_cast<std::uint64_t>(d));
        const Vec x = state.sample(stream);
        const auto decs = decompose_under_gauge(ideal, reg, x, snap.gauge);
        for (size_t i = 0; i < decs.size(); ++i) {
          for (const auto& [label, value] : decs[i].h)
            draws[ideal.labels[i] + "/H/" + label].push_back(value);
          for (const auto& [label, value] : decs[i].s)
            draws[ideal.labels[i] + "/S/" + label].push_back(value);
        }
      }
    }

    for (const auto& gate : snap.gates) {
      DriftRow row;
      row.batch = batch_id;
      row.lab_time = batch_time;
      row.gate = gate.gate;
      row.eps_ent = gate.infidelity.eps_ent;
      const auto& stacked = gate.infidelity.stacked;
      row.top.assign(stacked.begin(),
                     stacked.begin() + std::min<size_t>(top_k, stacked.size()));
      result.rows.push_back(std::move(row));

      const auto push_series = [&](char cls, const std::map<std::string, double>& m) {
        for (const auto& [label, value] : m) {
          const std::string key = gate.gate + "/" + cls + "/" + label;
          result.series[key].push_back(value);
          double half = 0.0;
          if (const auto it = draws.find(key); it != draws.end() && it->second.size() > 2) {
            const auto& v = it->second;
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            half = 3.0 * std::sqrt(var / (v.size() - 1));
          }
          result.series_halfwidth[key].push_back(half);
        }
      };
      push_series('H', gate.decomposition.h);
      push_series('S', gate.decomposition.s);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Exports

std::string length_sweep_csv(const LengthSweepResult& result) {
  std::ostringstream out;
  out.precision(17);
  out << "gate,class,coefficient,L,value,ci_low,ci_high\n";
  for (const auto& row : result.table)
    out << row.gate << ',' << row.cls << ',' << row.label << ',' << row.length
        << ',' << row.value << ',' << row.ci_low << ',' << row.ci_high << "\n";
  return out.str();
}

nlohmann::json length_sweep_json(const LengthSweepResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : result.table)
    rows.push_back({{"gate", row.gate},
                    {"class", std::string(1, row.cls)},
                    {"coefficient", row.label},
                    {"L", row.length},
                    {"value", row.value},
                    {"ci_low", row.ci_low},
                    {"ci_high", row.ci_high}});
  return {{"format", "fbtomo/length_sweep@1"}, {"rows", std::move(rows)}};
}

std::string drift_track_csv(const DriftTrackResult& result) {
  std::ostringstream out;
  out.precision(17);
  out << "batch,lab_time,gate,eps_ent,generator_label,contribution\n";
  for (const auto& row : result.rows)
    for (const auto& c : row.top)
      out << row.batch << ',' << row.lab_time << ',' << row.gate << ','
          << row.eps_ent << ',' << c.cls << '_' << c.label << ','
          << c.contribution << "\n";
  return out.str();
}

nlohmann::json drift_track_json(const DriftTrackResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : result.rows) {
    nlohmann::json top = nlohmann::json::array();
    for (const auto& c : row.top)
      top.push_back({{"class", std::string(1, c.cls)},
                     {"label", c.label},
                     {"coefficient", c.coefficient},
                     {"contribution", c.contribution}});
    rows.push_back({{"batch", row.batch},
                    {"lab_time", row.lab_time},
                    {"gate", row.gate},
                    {"eps_ent", row.eps_ent},
                    {"top", std::move(top)}});
  }
  nlohmann::json series = nlohmann::json::object();
  for (const auto& [key, values] : result.series) series[key] = values;
  nlohmann::json halfwidth = nlohmann::json::object();
  for (const auto& [key, values] : result.series_halfwidth) halfwidth[key] = values;
  return {{"format", "fbtomo/drift_track@1"},
          {"rows", std::move(rows)},
          {"batch_times", result.batch_times},
          {"cov_traces", result.cov_traces},
          {"series", std::move(series)},
          {"series_halfwidth", std::move(halfwidth)}};
}

}  // namespace fbt
