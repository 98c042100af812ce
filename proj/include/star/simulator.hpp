#pragma once

#include <algorithm>
#include <cstring>
#include <memory>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "star/stats.hpp"
#include "star/trace.hpp"

namespace star {

// Drives one engine over one trace: deterministic plaintexts on writes, a
// shadow plaintext table checked on reads, and optional crash points where
// the run snapshots, recovers, and (optionally) sweeps the recovered image
// before continuing.
class SimRunner {
 public:
  SimRunner(const SimConfig& cfg, Trace trace)
      : cfg_(cfg), trace_(std::move(trace)) {
    cfg_.engine.mem_bytes = trace_.mem_bytes;  // trace header is authoritative
    engine_ = std::make_unique<Engine>(cfg_.engine);
    if (cfg_.crash_at >= 0)
      crash_points_.push_back(static_cast<uint64_t>(cfg_.crash_at));
    if (cfg_.crash_random > 0) {
      std::mt19937_64 rng(cfg_.engine.seed ^ 0xc5a5e5c3a5ull);
      uint64_t n = trace_.events.size();
      for (uint64_t i = 0; i < cfg_.crash_random && n > 0; ++i)
        crash_points_.push_back(1 + rng() % n);
    }
    std::sort(crash_points_.begin(), crash_points_.end());
    crash_points_.erase(
        std::unique(crash_points_.begin(), crash_points_.end()),
        crash_points_.end());
  }

  void set_deep_verify(bool v) { deep_verify_ = v; }

  static std::array<uint8_t, 64> make_plaintext(uint64_t seed, uint64_t line,
                                                uint64_t seq) {
    std::array<uint8_t, 64> out;
    uint64_t s = Prf::mix(seed ^ 0x706c61696e74ull) ^
                 Prf::mix(line * 0x9e3779b97f4a7c15ull + seq);
    for (int i = 0; i < 8; ++i) {
      uint64_t w = Prf::mix(s + 0xbf58476d1ce4e5b9ull * (i + 1));
      std::memcpy(out.data() + 8 * i, &w, 8);
    }
    return out;
  }

  void run() {
    size_t next = 0;
    while (next < crash_points_.size() && crash_points_[next] == 0) {
      crash_check();
      ++next;
    }
    for (size_t i = 0; i < trace_.events.size(); ++i) {
      const TraceEvent& e = trace_.events[i];
      uint64_t line = e.addr / kLineBytes;
      if (e.is_write) {
        auto pt = make_plaintext(cfg_.engine.seed, line, i);
        shadow_[line] = pt;
        engine_->write(line * kLineBytes, pt);
      } else {
        auto pt = engine_->read(line * kLineBytes);
        auto it = shadow_.find(line);
        const std::array<uint8_t, 64> zero{};
        const auto& want = it != shadow_.end() ? it->second : zero;
        if (pt != want)
          throw std::logic_error("read returned wrong plaintext at line " +
                                 std::to_string(line));
      }
      while (next < crash_points_.size() && crash_points_[next] == i + 1) {
        crash_check();
        ++next;
      }
    }
  }

  const Engine& engine() const { return *engine_; }
  const std::vector<RecoveryReport>& recoveries() const { return recoveries_; }
  const std::vector<uint64_t>& crash_points() const { return crash_points_; }
  const std::unordered_map<uint64_t, std::array<uint8_t, 64>>& shadow() const {
    return shadow_;
  }

  bool all_recoveries_verified() const {
    for (const auto& r : recoveries_)
      if (!r.verified) return false;
    return true;
  }

  Json result_json() const {
    Json j;
    j["schema_version"] = kStatsSchemaVersion;
    j["trace"] = cfg_.trace_path;
    j["config"] = config_json(cfg_.engine);
    j["trace_events"] = trace_.events.size();
    j.update(stats_json(engine_->stats()));
    j["tracker"] = tracker_json(engine_->tracker_stats());
    Json recs = Json::array();
    for (size_t i = 0; i < recoveries_.size(); ++i) {
      Json r = recovery_json(recoveries_[i]);
      r["crash_after_events"] = crash_points_[i];
      recs.push_back(std::move(r));
    }
    j["recoveries"] = std::move(recs);
    j["all_recoveries_verified"] = all_recoveries_verified();
    return j;
  }

 private:
  void crash_check() {
    CrashSnapshot snap = engine_->make_snapshot();
    RecoveryReport rep = recover_scheme(snap, cfg_.engine.cc_bytes / kLineBytes,
                                        cfg_.engine.sit_bytes / kLineBytes);
    if (deep_verify_ && rep.verified && snap.scheme != Scheme::Anubis) {
      if (!verify_image(snap))
        throw std::logic_error("recovered image fails the integrity sweep");
      for (const auto& [line, pt] : shadow_)
        if (decrypt_user(snap, line) != pt)
          throw std::logic_error("recovered plaintext mismatch at line " +
                                 std::to_string(line));
    }
    recoveries_.push_back(rep);
  }

  SimConfig cfg_;
  Trace trace_;
  std::unique_ptr<Engine> engine_;
  std::vector<uint64_t> crash_points_;
  std::vector<RecoveryReport> recoveries_;
  std::unordered_map<uint64_t, std::array<uint8_t, 64>> shadow_;
  bool deep_verify_ = false;
};

}  // namespace star
