#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "star/simulator.hpp"

namespace star {

// One run's stats JSON flattened into a report row.
struct ReportRow {
  std::string trace;
  std::string scheme;
  std::string aw_mode;
  uint64_t user_writes = 0;
  uint64_t user_reads = 0;
  uint64_t writes_total = 0;
  uint64_t reads_total = 0;
  double writes_per_user_write = 0.0;
  uint64_t recoveries = 0;
  bool all_verified = true;
  double mean_recovery_s = 0.0;
};

inline ReportRow row_from_stats(const Json& j) {
  if (!j.contains("schema_version") ||
      j.at("schema_version").get<int>() != kStatsSchemaVersion)
    throw ConfigError("unsupported stats schema_version");
  ReportRow r;
  r.trace = j.value("trace", std::string{});
  const Json& cfg = j.at("config");
  r.scheme = cfg.at("scheme").get<std::string>();
  r.aw_mode = cfg.at("aw_mode").get<std::string>();
  const Json& ev = j.at("events");
  r.user_writes = ev.at("user_writes").get<uint64_t>();
  r.user_reads = ev.at("user_reads").get<uint64_t>();
  r.writes_total = j.at("writes").at("total").get<uint64_t>();
  r.reads_total = j.at("reads").at("total").get<uint64_t>();
  r.writes_per_user_write = j.at("writes_per_user_write").get<double>();
  const Json& recs = j.at("recoveries");
  r.recoveries = recs.size();
  double sum = 0.0;
  for (const Json& rec : recs) sum += rec.at("seconds").get<double>();
  if (!recs.empty()) r.mean_recovery_s = sum / recs.size();
  r.all_verified = j.at("all_recoveries_verified").get<bool>();
  return r;
}

// CSV over any number of runs. Rows that share a trace with a wb run get
// their write total normalized against it in wb_write_ratio.
inline std::string report_csv(const std::vector<Json>& runs) {
  std::vector<ReportRow> rows;
  rows.reserve(runs.size());
  std::map<std::string, uint64_t> wb_writes;
  for (const Json& j : runs) {
    rows.push_back(row_from_stats(j));
    const ReportRow& r = rows.back();
    if (r.scheme == "wb") wb_writes[r.trace] = r.writes_total;
  }
  std::ostringstream out;
  out << "trace,scheme,aw_mode,user_writes,user_reads,writes_total,"
         "reads_total,writes_per_user_write,wb_write_ratio,recoveries,"
         "all_verified,mean_recovery_s\n";
  char buf[64];
  for (const ReportRow& r : rows) {
    out << r.trace << ',' << r.scheme << ','
        << (r.scheme == "star" ? r.aw_mode : "") << ',' << r.user_writes
        << ',' << r.user_reads << ',' << r.writes_total << ','
        << r.reads_total << ',';
    std::snprintf(buf, sizeof buf, "%.6f", r.writes_per_user_write);
    out << buf << ',';
    auto it = wb_writes.find(r.trace);
    if (it != wb_writes.end() && it->second > 0) {
      std::snprintf(buf, sizeof buf, "%.6f",
                    double(r.writes_total) / double(it->second));
      out << buf;
    }
    out << ',' << r.recoveries << ',' << (r.all_verified ? "yes" : "no")
        << ',';
    std::snprintf(buf, sizeof buf, "%.9f", r.mean_recovery_s);
    out << buf << '\n';
  }
  return out.str();
}

}  // namespace star
