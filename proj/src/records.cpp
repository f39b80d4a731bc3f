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

#include "fbtomo/records.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace fbt {

void ObservationRecord::validate() const {
  if (shots < 1) throw std::invalid_argument("shots must be positive");
  if (observed_frequency < 0.0 || observed_frequency > 1.0)
    throw std::invalid_argument("observed frequency must lie in [0,1]");
  const double counts = observed_frequency * shots;
  if (std::abs(counts - std::round(counts)) > 1e-9)
    throw std::invalid_argument("observed_frequency * shots is not integral");
}

nlohmann::json record_to_json(const ObservationRecord& rec) {
  nlohmann::json j;
  j["sequence"] = rec.sequence;
  j["freq"] = rec.observed_frequency;
  j["shots"] = rec.shots;
  j["t"] = rec.timestamp;
  if (rec.batch_id) j["batch"] = *rec.batch_id;
  if (rec.projection != "native") j["proj"] = rec.projection;
  if (rec.group) j["group"] = *rec.group;
  return j;
}

ObservationRecord record_from_json(const nlohmann::json& j) {
  ObservationRecord rec;
  rec.sequence = j.at("sequence").get<GateSequence>();
  rec.observed_frequency = j.at("freq").get<double>();
  rec.shots = j.at("shots").get<int>();
  rec.timestamp = j.value("t", 0.0);
  if (j.contains("batch")) rec.batch_id = j.at("batch").get<int>();
  rec.projection = j.value("proj", "native");
  if (j.contains("group")) rec.group = j.at("group").get<int>();
  return rec;
}

std::vector<ObservationRecord> read_records(std::istream& in) {
  std::vector<ObservationRecord> records;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("bad record on line " + std::to_string(lineno) +
                               ": " + e.what());
    }
  }
  return records;
}

std::vector<ObservationRecord> read_records_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return read_records(in);
}

void write_records(std::ostream& out, const std::vector<ObservationRecord>& records) {
  for (const auto& rec : records) out << record_to_json(rec).dump() << "\n";
}

void write_records_file(const std::string& path,
                        const std::vector<ObservationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_records(out, records);
}

}  // namespace fbt
