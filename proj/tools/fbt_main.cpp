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

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "fbtomo/experiments.hpp"
#include "fbtomo/service.hpp"

namespace {

using namespace fbt;

NoisyGateSet gateset_from_arg(const std::string& arg) {
  if (arg == "cz") return ideal_two_qubit_gateset(CzVariant::cz);
  if (arg == "dcz") return ideal_two_qubit_gateset(CzVariant::dcz);
  return load_gateset(arg);
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
}

AnalysisConfig analysis_from_json(const nlohmann::json& j) {
  AnalysisConfig cfg;
  if (j.contains("bootstrap")) cfg.boot = BootstrapConfig::from_json(j.at("bootstrap"));
  if (j.contains("session")) {
    const auto& s = j.at("session");
    cfg.session.relinearize_interval = s.value("relinearize_interval", 50);
    cfg.session.approx_samples = s.value("approx_samples", 100);
    cfg.session.approx_drop_ratio = s.value("approx_drop_ratio", 0.01);
    cfg.session.approx_drop_window = s.value("approx_drop_window", 20);
    cfg.session.seed = s.value("seed", std::uint64_t{0});
  }
  cfg.gauge_wg = j.value("gauge_wg", 1.0);
  cfg.gauge_ws = j.value("gauge_ws", 1e-3);
  cfg.ci_draws = j.value("ci_draws", 1000);
  cfg.ci_draws_per_batch = j.value("ci_draws_per_batch", 200);
  cfg.ci_seed = j.value("ci_seed", std::uint64_t{1});
  cfg.rewarm = j.value("rewarm", "full");
  cfg.rewarm_cov_scale = j.value("rewarm_cov_scale", 0.0);
  cfg.rewarm_samples = j.value("rewarm_samples", 200);
  cfg.reactivate_approx = j.value("reactivate_approx", true);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fbtomo: streaming self-consistent gate set tomography"};
  app.require_subcommand(1);

  // --- bootstrap ---
  auto* boot_cmd = app.add_subcommand("bootstrap", "Build an initial prior and save it");
  std::string boot_gateset = "cz", boot_config, boot_out;
  boot_cmd->add_option("--gateset", boot_gateset, "cz, dcz, or a gateset JSON file");
  boot_cmd->add_option("--config", boot_config, "bootstrap config JSON file")->required();
  boot_cmd->add_option("--out", boot_out, "output checkpoint path")->required();

  // --- update ---
  auto* update_cmd = app.add_subcommand("update", "Run Bayesian updates from a record file");
  std::string upd_gateset = "cz", upd_state, upd_records, upd_out, upd_summaries,
              upd_report;
  int upd_postproc = 0;
  update_cmd->add_option("--gateset", upd_gateset, "cz, dcz, or a gateset JSON file");
  update_cmd->add_option("--state", upd_state, "input checkpoint")->required();
  update_cmd->add_option("--records", upd_records, "JSONL records file")->required();
  update_cmd->add_option("--out", upd_out, "output checkpoint");
  update_cmd->add_option("--summaries", upd_summaries, "write JSONL update summaries");
  update_cmd->add_option("--report", upd_report, "write a report JSON after the run");
  update_cmd->add_option("--postproc-interval", upd_postproc,
                         "post-process every N updates (0 = only at the end)");

  // --- simulate ---
  auto* sim_cmd = app.add_subcommand("simulate", "Generate synthetic records");
  std::string sim_gateset = "cz", sim_plan, sim_injection, sim_out;
  sim_cmd->add_option("--gateset", sim_gateset, "cz, dcz, or a gateset JSON file");
  sim_cmd->add_option("--plan", sim_plan, "experiment plan JSON")->required();
  sim_cmd->add_option("--injection", sim_injection, "noise injection JSON");
  sim_cmd->add_option("--out", sim_out, "output JSONL records file")->required();

  // --- experiment ---
  auto* exp_cmd = app.add_subcommand("experiment", "End-to-end experiment drivers");
  exp_cmd->require_subcommand(1);
  auto* sweep_cmd = exp_cmd->add_subcommand("length-sweep", "Per-length independent runs");
  std::string sweep_config, sweep_outdir;
  sweep_cmd->add_option("--config", sweep_config, "driver config JSON")->required();
  sweep_cmd->add_option("--outdir", sweep_outdir, "output directory")->required();
  auto* drift_cmd = exp_cmd->add_subcommand("drift-track", "Warm-booted batch tracking");
  std::string drift_config, drift_outdir;
  drift_cmd->add_option("--config", drift_config, "driver config JSON")->required();
  drift_cmd->add_option("--outdir", drift_outdir, "output directory")->required();

  // --- gauge-opt ---
  auto* gauge_cmd = app.add_subcommand("gauge-opt", "Gauge-optimize an estimated gate set");
  std::string gauge_in, gauge_ideal = "cz", gauge_out;
  double gauge_wg = 1.0, gauge_ws = 1e-3;
  gauge_cmd->add_option("--gateset-in", gauge_in, "estimated gateset JSON")->required();
  gauge_cmd->add_option("--ideal", gauge_ideal, "cz, dcz, or a gateset JSON file");
  gauge_cmd->add_option("--out", gauge_out, "output gateset JSON")->required();
  gauge_cmd->add_option("--wg", gauge_wg, "gate weight");
  gauge_cmd->add_option("--ws", gauge_ws, "SPAM weight");

  // --- taxonomy ---
  auto* tax_cmd = app.add_subcommand("taxonomy", "Error-generator decomposition of a gate");
  std::string tax_gateset, tax_gate, tax_out;
  tax_cmd->add_option("--gateset", tax_gateset, "estimated gateset JSON")->required();
  tax_cmd->add_option("--gate", tax_gate, "gate label (default: all gates)");
  tax_cmd->add_option("--out", tax_out, "output CSV path (default: stdout)");

  // --- serve ---
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP analysis service");
  std::string serve_addr, serve_ckpt_dir = "checkpoints";
  int serve_port = 0;
  serve_cmd->add_option("--addr", serve_addr, "bind address (default FBTOMO_ADDR or 127.0.0.1)");
  serve_cmd->add_option("--port", serve_port, "port (default FBTOMO_PORT or 8321)");
  serve_cmd->add_option("--checkpoint-dir", serve_ckpt_dir, "checkpoint directory");

  // --- checkpoint ---
  auto* ckpt_cmd = app.add_subcommand("checkpoint", "Checkpoint utilities");
  ckpt_cmd->require_subcommand(1);
  auto* ckpt_inspect = ckpt_cmd->add_subcommand("inspect", "Print checkpoint metadata");
  std::string ckpt_path;
  ckpt_inspect->add_option("file", ckpt_path, "checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*boot_cmd) {
      const NoisyGateSet gs = gateset_from_arg(boot_gateset);
      const BootstrapConfig cfg = BootstrapConfig::from_json(load_json(boot_config));
      const GaussianState state = bootstrap_prior(gs, cfg);
      save_checkpoint(state, boot_out);
      std::cout << "bootstrapped strategy=" << cfg.strategy
                << " dim=" << state.registry.total << " -> " << boot_out << "\n";
    } else if (*update_cmd) {
      const NoisyGateSet gs = gateset_from_arg(upd_gateset);
      GaussianState state = load_checkpoint(upd_state);
      EstimationSession session(gs, std::move(state), SessionConfig{});
      const auto records = read_records_file(upd_records);
      std::ofstream summaries_out;
      if (!upd_summaries.empty()) summaries_out.open(upd_summaries);
      long postprocessed = 0;
      for (const auto& rec : records) {
        const UpdateSummary s = session.ingest(rec);
        if (summaries_out.is_open()) {
          summaries_out << nlohmann::json{{"index", s.index},
                                          {"t", s.timestamp},
                                          {"len", s.sequence_length},
                                          {"proj", s.projection},
                                          {"predicted", s.predicted},
                                          {"observed", s.observed},
                                          {"var_shot", s.var_shot},
                                          {"var_approx", s.var_approx}}
                               .dump()
                        << "\n";
        }
        if (upd_postproc > 0 && s.index % upd_postproc == 0) ++postprocessed;
      }
      if (!upd_out.empty()) save_checkpoint(session.state(), upd_out);
      if (!upd_report.empty()) {
        const PosteriorSnapshot snap = postprocess_estimate(
            gs, session.registry(), session.state().mean);
        nlohmann::json gates = nlohmann::json::object();
        for (const auto& g : snap.gates)
          gates[g.gate] = decomposition_to_json(g.decomposition, g.infidelity);
        write_text(upd_report, nlohmann::json{{"format", "fbtomo/report@1"},
                                              {"gauge_objective", snap.gauge_objective},
                                              {"gates", std::move(gates)}}
                                   .dump(2) +
                                   "\n");
      }
      std::cout << "applied " << records.size() << " records, "
                << (upd_postproc > 0 ? postprocessed : 0)
                << " post-processing points\n";
    } else if (*sim_cmd) {
      const NoisyGateSet gs = gateset_from_arg(sim_gateset);
      const ExperimentPlan plan = ExperimentPlan::from_json(load_json(sim_plan));
      NoiseInjection injection;
      if (!sim_injection.empty())
        injection = NoiseInjection::from_json(load_json(sim_injection));
      SimStats stats;
      const auto records = simulate(plan, injection, gs, &stats);
      write_records_file(sim_out, records);
      std::cout << "simulated " << records.size() << " records ("
                << stats.channel_evaluations << " channel evaluations, max CPTP "
                << "correction " << stats.max_cptp_correction << ")\n";
    } else if (*sweep_cmd) {
      const nlohmann::json cfg_doc = load_json(sweep_config);
      const NoisyGateSet truth = gateset_from_arg(cfg_doc.value("gateset", "cz"));
      const NoisyGateSet ideal = gateset_from_arg(cfg_doc.value("ideal", cfg_doc.value("gateset", "cz")));
      const ExperimentPlan plan = ExperimentPlan::from_json(cfg_doc.value("plan", nlohmann::json::object()));
      NoiseInjection injection;
      if (cfg_doc.contains("injection"))
        injection = NoiseInjection::from_json(cfg_doc.at("injection"));
      const AnalysisConfig analysis = analysis_from_json(cfg_doc);
      std::vector<int> lengths = plan.lengths;
      if (cfg_doc.contains("lengths")) lengths = cfg_doc.at("lengths").get<std::vector<int>>();
      const LengthSweepResult result = run_length_sweep_simulated(
          plan, injection, truth, ideal, lengths, analysis);
      std::filesystem::create_directories(sweep_outdir);
      write_text(sweep_outdir + "/length_sweep.csv", length_sweep_csv(result));
      write_text(sweep_outdir + "/length_sweep.json",
                 length_sweep_json(result).dump(2) + "\n");
      std::cout << "length sweep over " << lengths.size() << " lengths -> "
                << sweep_outdir << "\n";
    } else if (*drift_cmd) {
      const nlohmann::json cfg_doc = load_json(drift_config);
      const NoisyGateSet truth = gateset_from_arg(cfg_doc.value("gateset", "cz"));
      const NoisyGateSet ideal = gateset_from_arg(cfg_doc.value("ideal", cfg_doc.value("gateset", "cz")));
      const AnalysisConfig analysis = analysis_from_json(cfg_doc);
      std::vector<ObservationRecord> records;
      if (cfg_doc.contains("records")) {
        records = read_records_file(cfg_doc.at("records").get<std::string>());
      } else {
        ExperimentPlan plan = ExperimentPlan::from_json(cfg_doc.at("plan"));
        plan.kind = "drift_tracking";
        NoiseInjection injection;
        if (cfg_doc.contains("injection"))
          injection = NoiseInjection::from_json(cfg_doc.at("injection"));
        records = simulate(plan, injection, truth);
      }
      const DriftTrackResult result =
          run_drift_tracking(records, ideal, analysis, cfg_doc.value("top_k", 6));
      std::filesystem::create_directories(drift_outdir);
      write_text(drift_outdir + "/drift_track.csv", drift_track_csv(result));
      write_text(drift_outdir + "/drift_track.json",
                 drift_track_json(result).dump(2) + "\n");
      std::cout << "tracked " << result.batch_times.size() << " batches -> "
                << drift_outdir << "\n";
    } else if (*gauge_cmd) {
      const NoisyGateSet estimate = load_gateset(gauge_in);
      const NoisyGateSet ideal = gateset_from_arg(gauge_ideal);
      const GaugeResult result = gauge_optimize(estimate, ideal, gauge_wg, gauge_ws);
      save_gateset(result.gateset, gauge_out);
      std::cout << "gauge objective " << result.objective
                << (result.converged ? "" : " (not converged)") << " -> "
                << gauge_out << "\n";
    } else if (*tax_cmd) {
      const NoisyGateSet gs = load_gateset(tax_gateset);
      std::ostringstream out;
      for (const auto& label : gs.labels) {
        if (!tax_gate.empty() && label != tax_gate) continue;
        const Mat lambda = cptp_project(gs.noise_of(label));
        const ErrorGeneratorDecomposition dec =
            decompose_generator(error_generator(lambda));
        const InfidelityReport rep = infidelity_report(lambda);
        out << "# gate " << label << "\n" << decomposition_to_csv(dec, rep);
      }
      if (tax_out.empty())
        std::cout << out.str();
      else
        write_text(tax_out, out.str());
    } else if (*serve_cmd) {
      if (serve_addr.empty()) {
        const char* env = std::getenv("FBTOMO_ADDR");
        serve_addr = env ? env : "127.0.0.1";
      }
      if (serve_port == 0) {
        const char* env = std::getenv("FBTOMO_PORT");
        serve_port = env ? std::atoi(env) : 8321;
      }
      SessionManager manager(ServiceConfig{serve_ckpt_dir});
      std::cout << "listening on " << serve_addr << ":" << serve_port << "\n";
      return run_server(manager, serve_addr, serve_port);
    } else if (*ckpt_inspect) {
      const GaussianState state = load_checkpoint(ckpt_path);
      nlohmann::json owners = nlohmann::json::array();
      for (const auto& e : state.registry.entries) owners.push_back(e.owner);
      std::cout << nlohmann::json{{"total", state.registry.total},
                                  {"block_dim", state.registry.block_dim},
                                  {"owners", owners},
                                  {"update_count", state.update_count},
                                  {"provenance", state.provenance},
                                  {"approx_error_active", state.approx_error_active},
                                  {"mean_norm", state.mean.norm()},
                                  {"cov_trace", state.cov.trace()}}
                       .dump(2)
                << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
