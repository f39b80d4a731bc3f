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

#include "fbtomo/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <unordered_map>
#include <unsupported/Eigen/MatrixFunctions>

#include "fbtomo/linearize.hpp"
#include "fbtomo/postproc.hpp"
#include "fbtomo/rng.hpp"

namespace fbt {

double TimeFunction::eval(double t) const {
  if (kind == "constant") return value;
  if (kind == "linear") return value + slope * t;
  if (kind == "sinusoid")
    return value + amplitude * std::sin(2.0 * M_PI * t / period + phase);
  if (kind == "random_walk") {
    // Deterministic Wiener-like walk: i.i.d. step increments derived from the
    // seed, summed up to the current step index.
    const long steps = static_cast<long>(std::floor(t / step_seconds));
    double acc = value;
    rng::Stream stream(seed);
    for (long k = 0; k < steps; ++k) acc += step_sigma * stream.normal();
    return acc;
  }
  throw std::invalid_argument("unknown time function kind: " + kind);
}

double LengthFunction::eval(int pulse_count) const {
  if (kind == "linear") return rate * pulse_count;
  if (kind == "saturating") {
    const double raw = rate * pulse_count;
    if (saturation <= 0.0) return raw;
    return saturation * std::tanh(raw / saturation);
  }
  throw std::invalid_argument("unknown length function kind: " + kind);
}

double ExperimentPlan::duration_of(const GateSequence& seq) const {
  double t = readout_seconds;
  for (const auto& g : seq) {
    const auto it = gate_durations.find(g);
    t += it != gate_durations.end() ? it->second : 1e-6;
  }
  return t;
}

std::vector<GateSequence> generate_random_sequences(
    const std::vector<std::string>& labels, int length, int count,
    std::uint64_t seed) {
  if (labels.empty()) throw std::invalid_argument("empty gate label set");
  if (count < 1) throw std::invalid_argument("count must be positive");
  std::vector<GateSequence> out;
  out.reserve(count);
  rng::Stream stream(seed);
  for (int i = 0; i < count; ++i) {
    GateSequence seq;
    seq.reserve(length);
    for (int j = 0; j < length; ++j)
      seq.push_back(labels[stream.bounded(labels.size())]);
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<ScheduleEntry> rasterize(const ExperimentPlan& plan,
                                     const std::vector<GateSequence>& sequences,
                                     double t0, int batch_id, double fit_window) {
  const int n = static_cast<int>(sequences.size());
  std::vector<double> durations(n);
  double sweep = 0.0;
  for (int i = 0; i < n; ++i) {
    durations[i] = plan.duration_of(sequences[i]);
    sweep += durations[i];
  }
  const double raw_total = sweep * plan.shots;
  const double scale =
      fit_window > 0.0 && raw_total > 0.0 ? fit_window / raw_total : 1.0;

  std::vector<ScheduleEntry> schedule;
  schedule.reserve(static_cast<size_t>(n) * plan.shots);
  double t = t0;
  if (plan.rasterized) {
    // All sequences once per shot, then the next shot sweeps again.
    for (int shot = 0; shot < plan.shots; ++shot)
      for (int i = 0; i < n; ++i) {
        schedule.push_back({i, shot, t, batch_id});
        t += durations[i] * scale;
      }
  } else {
    for (int i = 0; i < n; ++i)
      for (int shot = 0; shot < plan.shots; ++shot) {
        schedule.push_back({i, shot, t, batch_id});
        t += durations[i] * scale;
      }
  }
  return schedule;
}

namespace {

struct ParsedKey {
  std::string gate;
  char cls;
  std::string pauli;
};

ParsedKey parse_key(const std::string& key) {
  const auto first = key.find('/');
  const auto second = key.find('/', first + 1);
  if (first == std::string::npos || second == std::string::npos ||
      second != first + 2)
    throw std::invalid_argument("bad coefficient key (want gate/CLASS/label): " + key);
  return {key.substr(0, first), key[first + 1], key.substr(second + 1)};
}

}  // namespace

Mat injected_channel(const NoiseInjection& injection, const std::string& gate,
                     double lab_time, int pulse_count, const PauliBasis& basis,
                     double* correction) {
  const GeneratorFrame& frame = GeneratorFrame::for_basis(basis);
  const int d2 = basis.size();
  Mat generator = Mat::Zero(d2, d2);
  bool any = false;

  const auto add_coeff = [&](const std::string& key, double value) {
    if (value == 0.0) return;
    const ParsedKey parsed = parse_key(key);
    if (parsed.gate != gate) return;
    for (size_t k = 0; k < frame.elements.size(); ++k) {
      if (frame.elements[k].cls == parsed.cls &&
          frame.elements[k].label == parsed.pauli) {
        generator += value * unvec_mat(frame.frame.col(k), d2, d2);
        any = true;
        return;
      }
    }
    throw std::invalid_argument("unknown generator element in key: " + key);
  };

  for (const auto& [key, value] : injection.static_coeffs) add_coeff(key, value);
  for (const auto& [key, value] : injection.spam_coeffs) add_coeff(key, value);
  for (const auto& [key, fn] : injection.drift) add_coeff(key, fn.eval(lab_time));
  for (const auto& [key, fn] : injection.length_dependent)
    add_coeff(key, fn.eval(pulse_count));

  if (!any) {
    if (correction) *correction = 0.0;
    return Mat::Identity(d2, d2);
  }
  const Mat channel = generator.exp();
  CptpInfo info;
  const Mat projected = cptp_project(channel, &info);
  if (correction) *correction = info.correction_norm;
  return projected;
}

namespace {

// Channel cache key: (gate index, drift bucket, pulse count).
struct ChannelKey {
  int gate;
  long bucket;
  int pulses;
  bool operator==(const ChannelKey&) const = default;
};

struct ChannelKeyHash {
  size_t operator()(const ChannelKey& k) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    h ^= static_cast<std::uint64_t>(k.gate) + (h << 6);
    h ^= static_cast<std::uint64_t>(k.bucket + 0x7fffffff) * 0x100000001b3ULL;
    h ^= static_cast<std::uint64_t>(k.pulses) * 0x9e3779b97f4a7c15ULL;
    return static_cast<size_t>(h);
  }
};

class ChannelCache {
 public:
  ChannelCache(const NoiseInjection& injection, const NoisyGateSet& gs,
               double resolution, SimStats* stats)
      : injection_(injection), gs_(gs), resolution_(resolution), stats_(stats) {
    const PauliBasis& basis = PauliBasis::two_qubit();
    for (const auto& label : gs.labels) {
      has_length_.push_back(false);
      for (const auto& [key, fn] : injection.length_dependent)
        if (parse_key(key).gate == label && fn.rate != 0.0) has_length_.back() = true;
    }
    has_drift_ = !injection.drift.empty();
    (void)basis;
  }

  const Mat& channel(int gate, double lab_time, int pulses) {
    ChannelKey key{gate, has_drift_ ? static_cast<long>(std::floor(lab_time / resolution_)) : 0,
                   has_length_[gate] ? pulses : 0};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    double correction = 0.0;
    // Evaluate drift at the bucket center so cached entries are well defined.
    const double t_eval =
        has_drift_ ? (key.bucket + 0.5) * resolution_ : lab_time;
    Mat lambda = injected_channel(injection_, gs_.labels[gate], t_eval, key.pulses,
                                  PauliBasis::two_qubit(), &correction);
    if (stats_) {
      ++stats_->channel_evaluations;
      stats_->max_cptp_correction =
          std::max(stats_->max_cptp_correction, correction);
    }
    if (correction > injection_.cptp_threshold)
      throw std::runtime_error(
          "injected channel needed a CPTP correction above threshold (" +
          std::to_string(correction) + "); check injected rates");
    return cache_.emplace(key, std::move(lambda)).first->second;
  }

  Mat spam_channel(const std::string& owner, double lab_time) {
    double correction = 0.0;
    const Mat lambda = injected_channel(injection_, owner, lab_time, 0,
                                        PauliBasis::two_qubit(), &correction);
    if (correction > injection_.cptp_threshold)
      throw std::runtime_error("injected SPAM channel above CPTP threshold");
    return lambda;
  }

 private:
  const NoiseInjection& injection_;
  const NoisyGateSet& gs_;
  double resolution_;
  SimStats* stats_;
  bool has_drift_ = false;
  std::vector<bool> has_length_;
  std::unordered_map<ChannelKey, Mat, ChannelKeyHash> cache_;
};

double default_resolution(const ExperimentPlan& plan) {
  if (plan.kind == "drift_tracking") return plan.batch_window_seconds;
  return 1.0;
}

}  // namespace

std::vector<ObservationRecord> simulate(const ExperimentPlan& plan,
                                        const NoiseInjection& injection,
                                        const NoisyGateSet& gateset,
                                        SimStats* stats) {
  const double resolution = injection.drift_resolution_seconds > 0.0
                                ? injection.drift_resolution_seconds
                                : default_resolution(plan);
  ChannelCache cache(injection, gateset, resolution, stats);

  std::vector<ObservationRecord> records;
  std::uint64_t entry_index = 0;

  const bool drifting = !injection.drift.empty();

  const auto run_corpus = [&](const std::vector<GateSequence>& sequences,
                              double t0, int batch_id, double fit_window,
                              bool tag_batch) {
    const auto schedule = rasterize(plan, sequences, t0, batch_id, fit_window);
    const int n = static_cast<int>(sequences.size());
    std::vector<long> hits(n, 0), counts(n, 0);
    std::vector<double> time_sum(n, 0.0);

    // Probability per (sequence, drift bucket): outcomes inside a bucket share
    // the same instantaneous gate set.
    std::unordered_map<long, std::vector<double>> prob_by_bucket;
    const Mat spam_e = cache.spam_channel("E", t0);
    const Mat spam_rho = cache.spam_channel("rho", t0);

    for (const auto& entry : schedule) {
      const long bucket =
          drifting ? static_cast<long>(std::floor(entry.lab_time / resolution)) : 0;
      auto& probs = prob_by_bucket[bucket];
      if (probs.empty()) probs.assign(n, -1.0);
      double& p = probs[entry.sequence_index];
      if (p < 0.0) {
        const GateSequence& seq = sequences[entry.sequence_index];
        Vec v = spam_rho * gateset.rho0;
        int pulses = 0;
        for (const auto& label : seq) {
          const int g = gateset.gate_index(label);
          if (std::find(injection.pulse_gates.begin(), injection.pulse_gates.end(),
                        label) != injection.pulse_gates.end())
            ++pulses;
          v = cache.channel(g, entry.lab_time, pulses) * v;
          v = gateset.noise[g] * v;  // baseline noise of the provided set
          v = gateset.ideal[g] * v;
        }
        v = spam_e * (gateset.noise_effect * v);
        double raw = gateset.effect0.dot(v);
        if (stats && (raw < 0.0 || raw > 1.0)) ++stats->clamp_events;
        p = std::clamp(raw, 0.0, 1.0);
      }
      rng::Stream stream(plan.seed ^ 0xf00dULL, entry_index++);
      const bool hit = stream.uniform() < p;
      hits[entry.sequence_index] += hit ? 1 : 0;
      counts[entry.sequence_index] += 1;
      time_sum[entry.sequence_index] += entry.lab_time;
    }

    for (int i = 0; i < n; ++i) {
      if (counts[i] == 0) continue;
      ObservationRecord rec;
      rec.sequence = sequences[i];
      rec.observed_frequency = static_cast<double>(hits[i]) / counts[i];
      rec.shots = static_cast<int>(counts[i]);
      rec.timestamp = time_sum[i] / counts[i];
      if (tag_batch) rec.batch_id = batch_id;
      records.push_back(std::move(rec));
    }
  };

  if (plan.kind == "drift_tracking") {
    for (int b = 0; b < plan.n_batches; ++b) {
      // Fresh random sequences per batch, lengths cycled from the plan.
      std::vector<GateSequence> sequences;
      rng::Stream stream(plan.seed, static_cast<std::uint64_t>(b) + 1);
      for (int i = 0; i < plan.batch_size; ++i) {
        const int len = plan.lengths[i % plan.lengths.size()];
        GateSequence seq;
        seq.reserve(len);
        for (int j = 0; j < len; ++j)
          seq.push_back(gateset.labels[stream.bounded(gateset.labels.size())]);
        sequences.push_back(std::move(seq));
      }
      run_corpus(sequences, b * plan.batch_window_seconds, b,
                 plan.batch_window_seconds, true);
    }
  } else {
    std::vector<GateSequence> sequences;
    for (int i = 0; i < plan.n_sequences; ++i) {
      const int len = plan.lengths[i % plan.lengths.size()];
      rng::Stream stream(plan.seed, static_cast<std::uint64_t>(i) + 0x5eedULL);
      GateSequence seq;
      seq.reserve(len);
      for (int j = 0; j < len; ++j)
        seq.push_back(gateset.labels[stream.bounded(gateset.labels.size())]);
      sequences.push_back(std::move(seq));
    }
    run_corpus(sequences, 0.0, 0, -1.0, false);
  }
  return records;
}

std::vector<MultiProjectionRecord> simulate_with_projections(
    const ExperimentPlan& plan, const NoiseInjection& injection,
    const NoisyGateSet& gateset, const std::vector<ProjectionSpec>& projections,
    SimStats* stats) {
  if (plan.kind == "drift_tracking")
    throw std::invalid_argument("projection datasets use generic/length_sweep plans");

  // Physically executed list: each main sequence followed by each projection
  // prefix, interleaved so the rasterized sweep covers every projection.
  std::vector<GateSequence> mains;
  for (int i = 0; i < plan.n_sequences; ++i) {
    const int len = plan.lengths[i % plan.lengths.size()];
    rng::Stream stream(plan.seed, static_cast<std::uint64_t>(i) + 0x5eedULL);
    GateSequence seq;
    for (int j = 0; j < len; ++j)
      seq.push_back(gateset.labels[stream.bounded(gateset.labels.size())]);
    mains.push_back(std::move(seq));
  }

  ExperimentPlan executed = plan;
  executed.kind = "generic";
  std::vector<GateSequence> physical;
  for (const auto& main : mains)
    for (const auto& proj : projections) {
      GateSequence s = main;
      s.insert(s.end(), proj.prefix.begin(), proj.prefix.end());
      physical.push_back(std::move(s));
    }

  // Reuse simulate()'s machinery by running the physical list as one corpus.
  const double resolution = injection.drift_resolution_seconds > 0.0
                                ? injection.drift_resolution_seconds
                                : default_resolution(executed);
  ChannelCache cache(injection, gateset, resolution, stats);
  const auto schedule = rasterize(executed, physical);
  const int n = static_cast<int>(physical.size());
  const bool drifting = !injection.drift.empty();
  std::vector<long> hits(n, 0), counts(n, 0);
  std::vector<double> time_sum(n, 0.0);
  std::unordered_map<long, std::vector<double>> prob_by_bucket;
  const Mat spam_e = cache.spam_channel("E", 0.0);
  const Mat spam_rho = cache.spam_channel("rho", 0.0);
  std::uint64_t entry_index = 0;
  for (const auto& entry : schedule) {
    const long bucket =
        drifting ? static_cast<long>(std::floor(entry.lab_time / resolution)) : 0;
    auto& probs = prob_by_bucket[bucket];
    if (probs.empty()) probs.assign(n, -1.0);
    double& p = probs[entry.sequence_index];
    if (p < 0.0) {
      Vec v = spam_rho * gateset.rho0;
      int pulses = 0;
      for (const auto& label : physical[entry.sequence_index]) {
        const int g = gateset.gate_index(label);
        if (std::find(injection.pulse_gates.begin(), injection.pulse_gates.end(),
                      label) != injection.pulse_gates.end())
          ++pulses;
        v = cache.channel(g, entry.lab_time, pulses) * v;
        v = gateset.noise[g] * v;
        v = gateset.ideal[g] * v;
      }
      v = spam_e * (gateset.noise_effect * v);
      p = std::clamp(gateset.effect0.dot(v), 0.0, 1.0);
    }
    rng::Stream stream(plan.seed ^ 0xf00dULL, entry_index++);
    const bool hit = stream.uniform() < p;
    hits[entry.sequence_index] += hit ? 1 : 0;
    counts[entry.sequence_index] += 1;
    time_sum[entry.sequence_index] += entry.lab_time;
  }

  std::vector<MultiProjectionRecord> out;
  const int np = static_cast<int>(projections.size());
  for (size_t i = 0; i < mains.size(); ++i) {
    MultiProjectionRecord rec;
    rec.sequence = mains[i];
    for (int j = 0; j < np; ++j) {
      const int idx = static_cast<int>(i) * np + j;
      ProjectionOutcome o;
      o.freq = static_cast<double>(hits[idx]) / counts[idx];
      o.shots = static_cast<int>(counts[idx]);
      o.timestamp = time_sum[idx] / counts[idx];
      rec.outcomes[projections[j].label] = o;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON forms

NoiseInjection NoiseInjection::from_json(const nlohmann::json& j) {
  NoiseInjection inj;
  if (j.contains("static"))
    inj.static_coeffs = j.at("static").get<std::map<std::string, double>>();
  if (j.contains("spam"))
    inj.spam_coeffs = j.at("spam").get<std::map<std::string, double>>();
  if (j.contains("drift"))
    for (const auto& [key, body] : j.at("drift").items()) {
      TimeFunction fn;
      fn.kind = body.value("kind", "constant");
      fn.value = body.value("value", 0.0);
      fn.slope = body.value("slope", 0.0);
      fn.amplitude = body.value("amplitude", 0.0);
      fn.period = body.value("period", 1.0);
      fn.phase = body.value("phase", 0.0);
      fn.step_seconds = body.value("step_seconds", 1.0);
      fn.step_sigma = body.value("step_sigma", 0.0);
      fn.seed = body.value("seed", std::uint64_t{0});
      inj.drift[key] = fn;
    }
  if (j.contains("length_dependent"))
    for (const auto& [key, body] : j.at("length_dependent").items()) {
      LengthFunction fn;
      fn.kind = body.value("kind", "linear");
      fn.rate = body.value("rate", 0.0);
      fn.saturation = body.value("saturation", 0.0);
      inj.length_dependent[key] = fn;
    }
  if (j.contains("pulse_gates"))
    inj.pulse_gates = j.at("pulse_gates").get<std::vector<std::string>>();
  inj.cptp_threshold = j.value("cptp_threshold", 1e-8);
  inj.drift_resolution_seconds = j.value("drift_resolution_seconds", 0.0);
  return inj;
}

nlohmann::json NoiseInjection::to_json() const {
  nlohmann::json j;
  j["format"] = "fbtomo/injection@1";
  if (!static_coeffs.empty()) j["static"] = static_coeffs;
  if (!spam_coeffs.empty()) j["spam"] = spam_coeffs;
  if (!drift.empty()) {
    nlohmann::json d = nlohmann::json::object();
    for (const auto& [key, fn] : drift)
      d[key] = {{"kind", fn.kind},       {"value", fn.value},
                {"slope", fn.slope},     {"amplitude", fn.amplitude},
                {"period", fn.period},   {"phase", fn.phase},
                {"step_seconds", fn.step_seconds},
                {"step_sigma", fn.step_sigma},
                {"seed", fn.seed}};
    j["drift"] = std::move(d);
  }
  if (!length_dependent.empty()) {
    nlohmann::json d = nlohmann::json::object();
    for (const auto& [key, fn] : length_dependent)
      d[key] = {{"kind", fn.kind}, {"rate", fn.rate}, {"saturation", fn.saturation}};
    j["length_dependent"] = std::move(d);
  }
  j["pulse_gates"] = pulse_gates;
  j["cptp_threshold"] = cptp_threshold;
  j["drift_resolution_seconds"] = drift_resolution_seconds;
  return j;
}

ExperimentPlan ExperimentPlan::from_json(const nlohmann::json& j) {
  ExperimentPlan plan;
  plan.kind = j.value("kind", "generic");
  if (j.contains("lengths")) plan.lengths = j.at("lengths").get<std::vector<int>>();
  plan.n_sequences = j.value("n_sequences", 5000);
  plan.shots = j.value("shots", 100);
  plan.batch_size = j.value("batch_size", 80);
  plan.n_batches = j.value("n_batches", 500);
  plan.batch_window_seconds = j.value("batch_window_seconds", 32.4);
  plan.rasterized = j.value("rasterized", true);
  plan.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("gate_durations"))
    plan.gate_durations = j.at("gate_durations").get<std::map<std::string, double>>();
  plan.readout_seconds = j.value("readout_seconds", 1e-3);
  return plan;
}

nlohmann::json ExperimentPlan::to_json() const {
  return {{"format", "fbtomo/plan@1"},
          {"kind", kind},
          {"lengths", lengths},
          {"n_sequences", n_sequences},
          {"shots", shots},
          {"batch_size", batch_size},
          {"n_batches", n_batches},
          {"batch_window_seconds", batch_window_seconds},
          {"rasterized", rasterized},
          {"seed", seed},
          {"gate_durations", gate_durations},
          {"readout_seconds", readout_seconds}};
}

}  // namespace fbt
