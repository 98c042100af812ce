#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "star/geometry.hpp"
#include "star/nvm.hpp"

namespace star {

// Tracks which metadata lines are dirty, as one bit per flattened metadata
// ordinal.  Bitmap lines live in a reserved NVM area; a small ADR-backed
// pool keeps the recently touched ones on chip and spills the LRU line to
// its home slot when full.  A second pool does the same for the index layer
// above (one bit per level-1 line), and a single on-chip top line indexes
// the level-2 lines, so recovery can enumerate the dirty set by reading only
// the nonzero part of the index.
//
//   top (on chip, <=512 bits)  ->  L2 lines  ->  L1 lines  ->  ordinals
//
// Level-1 content is exact at all times: every dirty-flag transition updates
// the covering line, and a non-resident line's home copy is current because
// any transition in its range pulls it back first.  Index bits above are
// sticky within a line's residency (never cleared on popcount reaching
// zero), so recovery may read an all-zero line below a stale 1 bit; that
// costs a wasted read, never a wrong result.
class DirtyTracker {
 public:
  using ScanFn = std::function<std::vector<uint64_t>()>;  // live dirty ordinals
  using WriteFn = std::function<void(const LineId&, const BitmapLineData&)>;

  struct Stats {
    uint64_t l1_accesses = 0;
    uint64_t l1_hits = 0;
    uint64_t spills = 0;
    double hit_ratio() const {
      return l1_accesses ? double(l1_hits) / double(l1_accesses) : 1.0;
    }
  };

  DirtyTracker(const Geometry& g, size_t l1_capacity, size_t l2_capacity,
               ScanFn scan, WriteFn write_nvm)
      : g_(&g),
        l1_cap_(l1_capacity),
        l2_cap_(l2_capacity),
        scan_(std::move(scan)),
        write_nvm_(std::move(write_nvm)) {
    if (l1_cap_ == 0 || l2_cap_ == 0) throw std::invalid_argument("empty pool");
  }

  void record(uint64_t ordinal, bool dirty) {
    uint64_t l1_idx = ordinal / kBitsPerBitmapLine;
    Slot& s = access_l1(l1_idx);
    unsigned bit = ordinal % kBitsPerBitmapLine;
    if (dirty && !s.data.test(bit)) {
      s.data.set(bit);
      if (s.pop++ == 0) ensure_l2_bit(l1_idx);
    } else if (!dirty && s.data.test(bit)) {
      s.data.clear(bit);
      --s.pop;  // index bits above stay set; they clear only by rescan
    }
  }

  // ADR drains the resident pools into their home slots at power loss.
  // These writes ride the holdup capacitance and are not charged.
  void crash_flush(NvmImage& snapshot) const {
    for (const auto& s : l1_pool_)
      snapshot.write_bitmap(LineId{LineKind::BitmapL1, 0, s.index}, s.data);
    for (const auto& s : l2_pool_)
      snapshot.write_bitmap(LineId{LineKind::BitmapL2, 0, s.index}, s.data);
  }

  const BitmapLineData& top_line() const { return top_; }
  const Stats& stats() const { return stats_; }

  struct Enumerated {
    std::vector<uint64_t> ordinals;
    uint64_t l1_reads = 0;
    uint64_t l2_reads = 0;
    uint64_t index_reads() const { return l1_reads + l2_reads; }
  };

  // Walks the index on a post-flush image.  The top line is on-chip state,
  // so only level-2 and level-1 line fetches count as NVM reads.
  static Enumerated enumerate(const NvmImage& img, const BitmapLineData& top,
                              const Geometry& g) {
    Enumerated out;
    uint64_t meta = g.metadata_lines();
    for (unsigned t = 0; t < kBitsPerBitmapLine && t < g.l2_bitmap_lines(); ++t) {
      if (!top.test(t)) continue;
      BitmapLineData l2 = img.read_bitmap(LineId{LineKind::BitmapL2, 0, t});
      ++out.l2_reads;
      for (unsigned j = 0; j < kBitsPerBitmapLine; ++j) {
        if (!l2.test(j)) continue;
        uint64_t l1_idx = uint64_t{t} * kBitsPerBitmapLine + j;
        if (l1_idx >= g.l1_bitmap_lines()) break;
        BitmapLineData l1 = img.read_bitmap(LineId{LineKind::BitmapL1, 0, l1_idx});
        ++out.l1_reads;
        for (unsigned b = 0; b < kBitsPerBitmapLine; ++b) {
          if (!l1.test(b)) continue;
          uint64_t ord = l1_idx * kBitsPerBitmapLine + b;
          if (ord < meta) out.ordinals.push_back(ord);
        }
      }
    }
    return out;
  }

 private:
  struct Slot {
    uint64_t index = 0;
    BitmapLineData data{};
    unsigned pop = 0;
    uint64_t lru = 0;
  };

  Slot& access_l1(uint64_t idx) {
    ++stats_.l1_accesses;
    for (auto& s : l1_pool_)
      if (s.index == idx) {
        ++stats_.l1_hits;
        s.lru = ++tick_;
        return s;
      }
    if (l1_pool_.size() >= l1_cap_) spill_lru(l1_pool_, LineKind::BitmapL1);
    Slot s;
    s.index = idx;
    s.lru = ++tick_;
    uint64_t base = idx * kBitsPerBitmapLine;
    for (uint64_t ord : scan_()) {
      if (ord / kBitsPerBitmapLine != idx) continue;
      s.data.set(ord - base);
      ++s.pop;
    }
    if (s.pop > 0) ensure_l2_bit(idx);
    l1_pool_.push_back(s);
    return l1_pool_.back();
  }

  void ensure_l2_bit(uint64_t l1_idx) {
    uint64_t l2_idx = l1_idx / kBitsPerBitmapLine;
    Slot& s = access_l2(l2_idx);
    s.data.set(l1_idx % kBitsPerBitmapLine);
    top_.set(l2_idx);
  }

  Slot& access_l2(uint64_t idx) {
    for (auto& s : l2_pool_)
      if (s.index == idx) {
        s.lru = ++tick_;
        return s;
      }
    if (l2_pool_.size() >= l2_cap_) spill_lru(l2_pool_, LineKind::BitmapL2);
    Slot s;
    s.index = idx;
    s.lru = ++tick_;
    for (uint64_t ord : scan_()) {
      uint64_t l1 = ord / kBitsPerBitmapLine;
      if (l1 / kBitsPerBitmapLine != idx) continue;
      s.data.set(l1 % kBitsPerBitmapLine);
    }
    if (s.data.any()) top_.set(idx);
    l2_pool_.push_back(s);
    return l2_pool_.back();
  }

  void spill_lru(std::vector<Slot>& pool, LineKind kind) {
    size_t best = 0;
    for (size_t i = 1; i < pool.size(); ++i)
      if (pool[i].lru < pool[best].lru) best = i;
    write_nvm_(LineId{kind, 0, pool[best].index}, pool[best].data);
    ++stats_.spills;
    pool.erase(pool.begin() + best);
  }

  const Geometry* g_;
  size_t l1_cap_, l2_cap_;
  ScanFn scan_;
  WriteFn write_nvm_;
  std::vector<Slot> l1_pool_, l2_pool_;
  BitmapLineData top_{};
  uint64_t tick_ = 0;
  Stats stats_;
};

}  // namespace star
