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

#include "fbtomo/service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace fbt {

namespace {

std::string new_session_id() {
  static std::atomic<std::uint64_t> counter{0};
  std::random_device rd;
  std::ostringstream out;
  out << std::hex << rd() << rd() << '-' << counter.fetch_add(1);
  return out.str();
}

nlohmann::json matrix_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

struct SessionManager::Entry {
  mutable std::mutex write_mutex;           // serializes updates
  mutable std::mutex snapshot_mutex;        // guards the report snapshot
  mutable std::condition_variable boot_cv;
  std::string id;
  std::string status = "booting";           // booting|live|closed|failed
  std::string error;
  int postproc_interval = 100;
  NoisyGateSet ideal;
  AnalysisConfig analysis;
  std::unique_ptr<EstimationSession> session;
  std::shared_ptr<const nlohmann::json> snapshot;  // latest post-processing
  nlohmann::json infidelity_series = nlohmann::json::array();
  long snapshot_count = 0;
  long records_seen = 0;
};

SessionManager::SessionManager(ServiceConfig config) : cfg_(std::move(config)) {}
SessionManager::~SessionManager() = default;

std::shared_ptr<SessionManager::Entry> SessionManager::find(
    const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw std::out_of_range("unknown session: " + id);
  return it->second;
}

std::string SessionManager::create(const nlohmann::json& payload) {
  auto entry = std::make_shared<Entry>();
  entry->id = new_session_id();

  // Gate set: named ideal set or a full document.
  const auto& gspec = payload.at("gateset");
  if (gspec.is_string()) {
    const std::string name = gspec.get<std::string>();
    if (name == "cz")
      entry->ideal = ideal_two_qubit_gateset(CzVariant::cz);
    else if (name == "dcz")
      entry->ideal = ideal_two_qubit_gateset(CzVariant::dcz);
    else
      throw std::invalid_argument("gateset: unknown name '" + name +
                                  "' (want cz, dcz, or a document)");
  } else {
    entry->ideal = gateset_from_json(gspec);
  }

  const BootstrapConfig boot_cfg = BootstrapConfig::from_json(payload.at("bootstrap"));
  entry->postproc_interval =
      payload.value("postproc_interval", cfg_.default_postproc_interval);
  if (entry->postproc_interval < 1)
    throw std::invalid_argument("postproc_interval must be positive");
  SessionConfig session_cfg;
  if (payload.contains("session")) {
    const auto& s = payload.at("session");
    session_cfg.relinearize_interval = s.value("relinearize_interval", 50);
    session_cfg.approx_samples = s.value("approx_samples", 100);
    session_cfg.approx_drop_ratio = s.value("approx_drop_ratio", 0.01);
    session_cfg.approx_drop_window = s.value("approx_drop_window", 20);
    session_cfg.seed = s.value("seed", std::uint64_t{0});
  }
  entry->analysis.gauge_wg = payload.value("gauge_wg", 1.0);
  entry->analysis.gauge_ws = payload.value("gauge_ws", 1e-3);

  {
    std::lock_guard lock(mutex_);
    sessions_[entry->id] = entry;
  }

  const auto boot_fn = [entry, boot_cfg, session_cfg]() {
    try {
      GaussianState state = bootstrap_prior(entry->ideal, boot_cfg);
      std::lock_guard lock(entry->write_mutex);
      entry->session = std::make_unique<EstimationSession>(entry->ideal,
                                                           std::move(state),
                                                           session_cfg);
      entry->status = "live";
    } catch (const std::exception& e) {
      std::lock_guard lock(entry->write_mutex);
      entry->status = "failed";
      entry->error = e.what();
    }
    entry->boot_cv.notify_all();
  };

  // Sampling strategies can take a while; boot them off-thread.
  const bool async = boot_cfg.strategy == "partial_warm" ||
                     boot_cfg.strategy == "fidelity_cold";
  if (async) {
    std::thread(boot_fn).detach();
  } else {
    boot_fn();
    if (entry->status == "failed") {
      std::lock_guard lock(mutex_);
      sessions_.erase(entry->id);
      throw std::invalid_argument("bootstrap failed: " + entry->error);
    }
  }
  return entry->id;
}

void SessionManager::wait_live(const std::string& id) const {
  const auto entry = find(id);
  std::unique_lock lock(entry->write_mutex);
  entry->boot_cv.wait(lock, [&] { return entry->status != "booting"; });
  if (entry->status == "failed")
    throw std::runtime_error("bootstrap failed: " + entry->error);
}

nlohmann::json SessionManager::status(const std::string& id) const {
  const auto entry = find(id);
  std::lock_guard lock(entry->write_mutex);
  nlohmann::json j{{"id", entry->id},
                   {"status", entry->status},
                   {"postproc_interval", entry->postproc_interval},
                   {"records", entry->records_seen},
                   {"snapshots", entry->snapshot_count}};
  if (!entry->error.empty()) j["error"] = entry->error;
  if (entry->session) j["update_count"] = entry->session->state().update_count;
  return j;
}

nlohmann::json SessionManager::submit(const std::string& id,
                                      const std::vector<ObservationRecord>& records) {
  const auto entry = find(id);
  std::lock_guard lock(entry->write_mutex);
  if (entry->status == "booting")
    throw std::runtime_error("session is still booting");
  if (entry->status != "live")
    throw std::runtime_error("session is not live (" + entry->status + ")");

  nlohmann::json summaries = nlohmann::json::array();
  for (const auto& rec : records) {
    const UpdateSummary s = entry->session->ingest(rec);
    ++entry->records_seen;
    bool postprocessed = false;
    if (s.index % entry->postproc_interval == 0) {
      // Post-processing works on a copy of the estimate; the Bayesian state
      // itself is never touched.
      const Vec mean_copy = entry->session->state().mean;
      PosteriorSnapshot snap =
          postprocess_estimate(entry->ideal, entry->session->registry(), mean_copy,
                               entry->analysis.gauge_wg, entry->analysis.gauge_ws);
      nlohmann::json gates = nlohmann::json::object();
      nlohmann::json eps_row = nlohmann::json::object();
      for (const auto& g : snap.gates) {
        gates[g.gate] = {{"noise", matrix_json(g.noise)},
                         {"decomposition",
                          decomposition_to_json(g.decomposition, g.infidelity)}};
        eps_row[g.gate] = g.infidelity.eps_ent;
      }
      auto doc = std::make_shared<nlohmann::json>(
          nlohmann::json{{"update_index", s.index},
                         {"gauge", matrix_json(snap.gauge)},
                         {"gauge_objective", snap.gauge_objective},
                         {"gates", std::move(gates)}});
      {
        std::lock_guard snap_lock(entry->snapshot_mutex);
        entry->snapshot = std::move(doc);
        entry->infidelity_series.push_back(
            {{"update_index", s.index}, {"eps_ent", std::move(eps_row)}});
        ++entry->snapshot_count;
      }
      postprocessed = true;
    }
    summaries.push_back({{"index", s.index},
                         {"t", s.timestamp},
                         {"len", s.sequence_length},
                         {"proj", s.projection},
                         {"predicted", s.predicted},
                         {"observed", s.observed},
                         {"var_shot", s.var_shot},
                         {"var_approx", s.var_approx},
                         {"postprocessed", postprocessed}});
  }
  return summaries;
}

nlohmann::json SessionManager::report(const std::string& id) const {
  const auto entry = find(id);
  nlohmann::json j;
  j["format"] = "fbtomo/report@1";
  j["id"] = entry->id;
  std::shared_ptr<const nlohmann::json> snap;
  {
    std::lock_guard snap_lock(entry->snapshot_mutex);
    snap = entry->snapshot;
    j["infidelity_series"] = entry->infidelity_series;
    j["snapshots"] = entry->snapshot_count;
  }
  {
    std::lock_guard lock(entry->write_mutex);
    j["status"] = entry->status;
    j["records"] = entry->records_seen;
    if (entry->session) {
      j["update_count"] = entry->session->state().update_count;
      j["provenance"] = entry->session->state().provenance;
      j["approx_error_active"] = entry->session->state().approx_error_active;
      j["clamp_events"] = entry->session->clamp_stats().events;
      // Current mean channels (Hinton-ready grids), straight from the state.
      const NoisyGateSet mean_gs = entry->session->mean_gateset();
      nlohmann::json channels = nlohmann::json::object();
      for (size_t i = 0; i < mean_gs.labels.size(); ++i)
        channels[mean_gs.labels[i]] = matrix_json(mean_gs.noise[i]);
      channels["E"] = matrix_json(mean_gs.noise_effect);
      channels["rho"] = matrix_json(mean_gs.noise_prep);
      j["mean_noise_channels"] = std::move(channels);
    }
  }
  j["postprocessed"] = snap ? *snap : nlohmann::json(nullptr);
  return j;
}

std::string SessionManager::checkpoint(const std::string& id, const std::string& name) {
  const auto entry = find(id);
  std::lock_guard lock(entry->write_mutex);
  if (!entry->session) throw std::runtime_error("session has no state yet");
  std::filesystem::create_directories(cfg_.checkpoint_dir);
  const std::string file =
      name.empty() ? entry->id + "-" +
                         std::to_string(entry->session->state().update_count) +
                         ".ckpt"
                   : name;
  const std::string path = (std::filesystem::path(cfg_.checkpoint_dir) / file).string();
  save_checkpoint(entry->session->state(), path);
  return path;
}

void SessionManager::close(const std::string& id) {
  const auto entry = find(id);
  std::lock_guard lock(entry->write_mutex);
  entry->status = "closed";
}

std::vector<std::string> SessionManager::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, entry] : sessions_) out.push_back(id);
  return out;
}

// ---------------------------------------------------------------------------
// HTTP wiring

namespace {

void reply_error(httplib::Response& res, int code, const std::string& message) {
  res.status = code;
  res.set_content(nlohmann::json{{"error", message}}.dump() + "\n",
                  "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const std::out_of_range& e) {
    reply_error(res, 404, e.what());
  } catch (const std::invalid_argument& e) {
    reply_error(res, 400, e.what());
  } catch (const std::exception& e) {
    reply_error(res, 409, e.what());
  }
}

}  // namespace

int run_server(SessionManager& manager, const std::string& addr, int port) {
  httplib::Server server;

  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok\n", "text/plain");
  });

  server.Post("/api/v1/sessions",
              [&](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  const auto payload = nlohmann::json::parse(req.body);
                  const std::string id = manager.create(payload);
                  res.status = 201;
                  res.set_content(manager.status(id).dump() + "\n",
                                  "application/json");
                });
              });

  server.Get(R"(/api/v1/sessions/([^/]+))",
             [&](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 res.set_content(manager.status(req.matches[1]).dump() + "\n",
                                 "application/json");
               });
             });

  // Line-delimited records in, one summary line per record out.
  server.Post(R"(/api/v1/sessions/([^/]+)/records)",
              [&](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  std::istringstream in(req.body);
                  const auto records = read_records(in);
                  const nlohmann::json summaries =
                      manager.submit(req.matches[1], records);
                  std::ostringstream out;
                  for (const auto& s : summaries) out << s.dump() << "\n";
                  res.set_content(out.str(), "application/x-ndjson");
                });
              });

  server.Get(R"(/api/v1/sessions/([^/]+)/report)",
             [&](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 res.set_content(manager.report(req.matches[1]).dump() + "\n",
                                 "application/json");
               });
             });

  server.Post(R"(/api/v1/sessions/([^/]+)/checkpoint)",
              [&](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  std::string name;
                  if (!req.body.empty()) {
                    const auto body = nlohmann::json::parse(req.body);
                    name = body.value("name", "");
                  }
                  const std::string path = manager.checkpoint(req.matches[1], name);
                  res.set_content(nlohmann::json{{"path", path}}.dump() + "\n",
                                  "application/json");
                });
              });

  server.Delete(R"(/api/v1/sessions/([^/]+))",
                [&](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    manager.close(req.matches[1]);
                    res.set_content("{}\n", "application/json");
                  });
                });

  if (!server.listen(addr, port)) return 1;
  return 0;
}

}  // namespace fbt
