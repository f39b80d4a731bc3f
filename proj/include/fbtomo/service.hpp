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

#pragma once

#include <memory>
#include <mutex>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "fbtomo/experiments.hpp"

namespace fbt {

struct ServiceConfig {
  std::string checkpoint_dir = ".";
  int default_postproc_interval = 100;
};

// Session store behind the HTTP endpoints; usable directly for offline work.
// One logical writer per session (per-session mutex); report reads serve the
// latest completed post-processing snapshot without blocking writers.
class SessionManager {
 public:
  explicit SessionManager(ServiceConfig config = {});
  ~SessionManager();

  // Payload: {"gateset": "cz"|"dcz"|{gateset doc}, "bootstrap": {...},
  //           "postproc_interval": N, "session": {...overrides}}.
  // Returns the session id; sampling strategies bootstrap asynchronously
  // (status "booting" until done).
  std::string create(const nlohmann::json& payload);

  nlohmann::json status(const std::string& id) const;
  // Applies records in order; every N-th update post-processes a copy of the
  // estimate. Returns one summary object per record.
  nlohmann::json submit(const std::string& id,
                        const std::vector<ObservationRecord>& records);
  nlohmann::json report(const std::string& id) const;
  // Persists the Gaussian state; returns the checkpoint path.
  std::string checkpoint(const std::string& id, const std::string& name = "");
  void close(const std::string& id);
  std::vector<std::string> ids() const;

  // Blocks until a booting session becomes live or failed (test helper).
  void wait_live(const std::string& id) const;

 private:
  struct Entry;
  std::shared_ptr<Entry> find(const std::string& id) const;

  ServiceConfig cfg_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

// Blocking HTTP server on addr:port (environment FBTOMO_ADDR / FBTOMO_PORT
// supply defaults). Returns the exit code.
int run_server(SessionManager& manager, const std::string& addr, int port);

}  // namespace fbt
