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

#include <iosfwd>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

namespace fbt {

using GateSequence = std::vector<std::string>;

// One experiment row. `projection` names the measurement effect ("native" =
// the gate set's default); `group` ties records that must share a
// linearization point (multi-projection vector updates).
struct ObservationRecord {
  GateSequence sequence;
  double observed_frequency = 0.0;
  int shots = 0;
  double timestamp = 0.0;
  std::optional<int> batch_id;
  std::string projection = "native";
  std::optional<int> group;

  // observed_frequency * shots must be integral (within 1e-9).
  void validate() const;
};

// Line-delimited JSON: {"sequence":[...],"freq":..,"shots":..,"t":..,
//  "batch":..,"proj":..,"group":..} with optional fields omitted.
nlohmann::json record_to_json(const ObservationRecord& rec);
ObservationRecord record_from_json(const nlohmann::json& j);

std::vector<ObservationRecord> read_records(std::istream& in);
std::vector<ObservationRecord> read_records_file(const std::string& path);
void write_records(std::ostream& out, const std::vector<ObservationRecord>& records);
void write_records_file(const std::string& path, const std::vector<ObservationRecord>& records);

}  // namespace fbt
