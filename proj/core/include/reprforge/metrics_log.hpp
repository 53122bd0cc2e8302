// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace reprforge {

/// One scalar observation. wall_time is informational only and deliberately
/// kept out of the serialized log so identical runs produce identical files.
struct MetricRecord {
  int epoch = 0;
  std::string split;
  std::string name;
  double value = 0.0;
  double wall_time = 0.0;  // seconds since run start, in-memory only
};

/// JSON object per line: {"epoch":..,"name":"..","split":"..","value":..}.
std::string metric_record_line(const MetricRecord& rec);

void write_metrics_log(const std::vector<MetricRecord>& records, const std::string& path);
std::vector<MetricRecord> read_metrics_log(const std::string& path);

} // namespace reprforge
