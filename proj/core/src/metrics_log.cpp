// SPDX-License-Identifier: Apache-2.0
#include "reprforge/metrics_log.hpp"

#include <fstream>

#include <json.hpp>

#include "reprforge/errors.hpp"

namespace reprforge {

std::string metric_record_line(const MetricRecord& rec) {
  nlohmann::json j;
  j["epoch"] = rec.epoch;
  j["split"] = rec.split;
  j["name"] = rec.name;
  j["value"] = rec.value;
  return j.dump();
}

void write_metrics_log(const std::vector<MetricRecord>& records, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("write_metrics_log: cannot open " + path);
  for (const auto& rec : records) os << metric_record_line(rec) << "\n";
  if (!os) throw IoError("write_metrics_log: write failed for " + path);
}

std::vector<MetricRecord> read_metrics_log(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("read_metrics_log: cannot open " + path);
  std::vector<MetricRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw FormatError("read_metrics_log: bad line in " + path);
    }
    MetricRecord rec;
    rec.epoch = j.at("epoch").get<int>();
    rec.split = j.at("split").get<std::string>();
    rec.name = j.at("name").get<std::string>();
    rec.value = j.at("value").get<double>();
    out.push_back(std::move(rec));
  }
  return out;
}

} // namespace reprforge
