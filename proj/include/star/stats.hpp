#pragma once

#include <json.hpp>

#include "star/baselines.hpp"
#include "star/config.hpp"
#include "star/tracker.hpp"

namespace star {

inline constexpr int kStatsSchemaVersion = 1;

using Json = nlohmann::ordered_json;

inline Json config_json(const EngineConfig& e) {
  return Json{{"mem_bytes", e.mem_bytes},
              {"seed", e.seed},
              {"scheme", scheme_name(e.scheme)},
              {"aw_mode", aw_mode_name(e.aw)},
              {"cc_bytes", e.cc_bytes},
              {"sit_bytes", e.sit_bytes},
              {"ways", e.ways},
              {"adr_lines", e.adr_lines},
              {"adr_l2_lines", e.adr_l2_lines}};
}

inline Json stats_json(const EngineStats& s) {
  Json writes{{"data", s.w_data},
              {"metadata_evict", s.w_metadata_evict},
              {"ahead_write", s.w_ahead_write},
              {"bitmap_spill", s.w_bitmap_spill},
              {"st_block", s.w_st_block},
              {"strict_branch", s.w_strict_branch},
              {"reencrypt", s.w_reencrypt},
              {"total", s.writes_total()}};
  Json reads{{"fill", s.r_fill},
             {"user", s.r_user},
             {"reencrypt", s.r_reencrypt},
             {"total", s.reads_total()}};
  Json events{{"user_writes", s.user_writes},
              {"user_reads", s.user_reads},
              {"reencrypt_events", s.reencrypt_events}};
  double per_write =
      s.user_writes ? double(s.writes_total()) / double(s.user_writes) : 0.0;
  return Json{{"writes", writes},
              {"reads", reads},
              {"events", events},
              {"writes_per_user_write", per_write}};
}

inline Json tracker_json(const DirtyTracker::Stats& t) {
  return Json{{"l1_accesses", t.l1_accesses},
              {"l1_hits", t.l1_hits},
              {"hit_ratio", t.hit_ratio()},
              {"spills", t.spills}};
}

inline Json recovery_json(const RecoveryReport& r) {
  return Json{{"verified", r.verified},
              {"dirty_lines", r.dirty_lines},
              {"fresh_lines", r.fresh_lines},
              {"restored_lines", r.restored_lines},
              {"index_reads", r.index_reads},
              {"charged_reads", r.charged_reads},
              {"functional_reads", r.functional_reads},
              {"time_ns", r.time_ns},
              {"seconds", r.seconds()}};
}

}  // namespace star
