#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "star/sit.hpp"

namespace star {

inline constexpr uint64_t kReadLatencyNs = 100;

// Reconstruct a full counter from its stale stored value and the fresh low
// bits carried by a child's sidecar.  Sound as long as the true value ran at
// most one low-bit window ahead of the stored one, which the runtime flush
// policy guarantees.
inline uint64_t carry10(uint64_t stale, uint16_t lsb) {
  uint64_t v = (stale & ~uint64_t{kLsbMask}) | (lsb & kLsbMask);
  if ((lsb & kLsbMask) < (stale & kLsbMask)) v += kLsbMask + 1;
  return v;
}

// Same idea for the 3 major-counter bits carried by a data line's sidecar.
inline uint64_t carry3(uint64_t stale, uint8_t low3) {
  uint64_t v = (stale & ~uint64_t{7}) | (low3 & 7);
  if ((low3 & 7) < (stale & 7)) v += 8;
  return v;
}

struct RecoveryReport {
  bool verified = false;
  uint64_t dirty_lines = 0;     // metadata lines enumerated from the bitmap
  uint64_t fresh_lines = 0;     // eager-side lines: already current, gathered
  uint64_t restored_lines = 0;  // lazy-side lines rebuilt from sidecars
  uint64_t index_reads = 0;     // bitmap line fetches
  uint64_t charged_reads = 0;   // cost-model reads (index + 1/fresh + 10/lazy)
  uint64_t functional_reads = 0;  // literal image reads performed
  uint64_t time_ns = 0;

  double seconds() const { return double(time_ns) * 1e-9; }
};

// Rebuild the dirty metadata in the snapshot image and check the result
// against the on-chip cache-tree root.  The image is repaired in place;
// afterwards (on a verified run) every stored line is consistent with the
// restored counters.
//
// Cost model: each level-2/level-1 index line is one read; an eager-side
// dirty line costs one line read; a lazy-side line costs ten (the sidecar
// gather of its children pipelines into adjacent bursts).  Every read is
// charged kReadLatencyNs.
inline RecoveryReport recover(CrashSnapshot& s) {
  const Geometry& g = s.geom;
  const CryptoEngine& ce = s.crypto;
  RecoveryReport rep;

  auto idx = DirtyTracker::enumerate(s.nvm, s.chip.bitmap_top, g);
  rep.index_reads = idx.index_reads();
  rep.charged_reads = rep.index_reads;
  rep.functional_reads = rep.index_reads;
  rep.dirty_lines = idx.ordinals.size();

  // Parents before children: a line's MAC binds the full value of its
  // parent slot, so the parent must hold restored counters first.
  std::vector<LineId> lines;
  lines.reserve(idx.ordinals.size());
  for (uint64_t ord : idx.ordinals) lines.push_back(g.line_at_ordinal(ord));
  std::stable_sort(lines.begin(), lines.end(),
                   [](const LineId& a, const LineId& b) {
                     uint32_t la = a.kind == LineKind::CounterBlock ? 0 : a.level;
                     uint32_t lb = b.kind == LineKind::CounterBlock ? 0 : b.level;
                     if (la != lb) return la > lb;
                     return a.index < b.index;
                   });

  std::vector<std::map<uint64_t, uint64_t>> sets(s.indexer.total());
  auto gather = [&](const LineId& id, uint64_t mac54) {
    sets[s.indexer.global_set(g, id)][g.byte_offset(id)] = mac54;
  };
  auto parent_ctr = [&](const LineId& id) {
    auto [p, slot] = g.parent_and_slot(id);
    if (g.is_root(p)) return s.chip.root_counters[slot];
    ++rep.functional_reads;
    return s.nvm.read_sit(p).counters[slot];
  };

  for (const LineId& id : lines) {
    int level = id.kind == LineKind::CounterBlock ? 0 : int(id.level);
    uint64_t pctr = parent_ctr(id);
    if (level > s.start_level) {
      // Eager side: the stored copy is current.  Recompute its MAC from
      // content so any substitution surfaces as a root mismatch.
      ++rep.fresh_lines;
      rep.charged_reads += 1;
      ++rep.functional_reads;
      uint64_t mac54 = id.kind == LineKind::CounterBlock
                           ? compute_cb_mac(ce, g, id, s.nvm.read_cb(id), pctr)
                           : compute_sit_mac(ce, g, id, s.nvm.read_sit(id), pctr);
      gather(id, mac54);
      continue;
    }
    // Lazy side: stored counters are stale; children's sidecars carry the
    // fresh low bits.
    ++rep.restored_lines;
    rep.charged_reads += 10;
    if (id.kind == LineKind::CounterBlock) {
      CounterBlockLine cb = s.nvm.read_cb(id);
      ++rep.functional_reads;
      uint64_t base = id.index * kCountersPerBlock;
      uint16_t first_lsb = 0;
      for (uint32_t i = 0; i < kCountersPerBlock; ++i) {
        UserLine child = s.nvm.read_user(LineId::user(base + i));
        ++rep.functional_reads;
        if (i == 0) first_lsb = child.mac.lsb10;
        cb.minors[i] = user_lsb10_minor(child.mac.lsb10);
      }
      cb.major = carry3(cb.major, user_lsb10_major3(first_lsb));
      cb.mac.lsb10 = static_cast<uint16_t>(pctr & kLsbMask);
      cb.mac.mac54 = compute_cb_mac(ce, g, id, cb, pctr);
      s.nvm.write_cb(id, cb);
      gather(id, cb.mac.mac54);
    } else {
      SitNodeLine node = s.nvm.read_sit(id);
      ++rep.functional_reads;
      for (const LineId& child : g.children_of(id)) {
        uint32_t slot = g.counter_slot(child);
        uint16_t lsb = child.kind == LineKind::CounterBlock
                           ? s.nvm.read_cb(child).mac.lsb10
                           : s.nvm.read_sit(child).mac.lsb10;
        ++rep.functional_reads;
        node.counters[slot] = carry10(node.counters[slot], lsb);
      }
      node.mac.lsb10 = static_cast<uint16_t>(pctr & kLsbMask);
      node.mac.mac54 = compute_sit_mac(ce, g, id, node, pctr);
      s.nvm.write_sit(id, node);
      gather(id, node.mac.mac54);
    }
  }

  rep.time_ns = rep.charged_reads * kReadLatencyNs;
  rep.verified =
      CacheTreeModel::rebuild(ce.prf(), sets) == s.chip.ctree_root;
  return rep;
}

// Shadow-table recovery cost of the mirrored-write baseline: three reads per
// metadata cache line, independent of how much of the cache was dirty.
inline RecoveryReport recover_anubis(size_t cc_lines, size_t sit_lines) {
  RecoveryReport rep;
  rep.verified = true;
  rep.charged_reads = 3 * (cc_lines + sit_lines);
  rep.functional_reads = rep.charged_reads;
  rep.time_ns = rep.charged_reads * kReadLatencyNs;
  return rep;
}

// Overwrite one line of a snapshot image with an older version (or any
// forged content) before recovery runs.
inline void inject_replay(CrashSnapshot& s, const LineId& id,
                          const LineContent& content) {
  s.nvm.write(id, content);
}

// Post-recovery integrity sweep: every materialized metadata line must
// verify against the (restored) parent chain, and every materialized user
// line against its counters.  Returns false at the first inconsistency.
inline bool verify_image(const CrashSnapshot& s) {
  const Geometry& g = s.geom;
  const CryptoEngine& ce = s.crypto;
  auto parent_ctr = [&](const LineId& id) {
    auto [p, slot] = g.parent_and_slot(id);
    if (g.is_root(p)) return s.chip.root_counters[slot];
    return s.nvm.read_sit(p).counters[slot];
  };
  for (const auto& [idx, cb] : s.nvm.cbs()) {
    LineId id = LineId::counter_block(idx);
    uint64_t pctr = parent_ctr(id);
    if (cb.mac.lsb10 != (pctr & kLsbMask) ||
        cb.mac.mac54 != compute_cb_mac(ce, g, id, cb, pctr))
      return false;
  }
  for (const auto& [key, node] : s.nvm.sits()) {
    LineId id = LineId::sit(uint32_t(key >> 52) & 0xFF, key & ((1ull << 52) - 1));
    uint64_t pctr = parent_ctr(id);
    if (node.mac.lsb10 != (pctr & kLsbMask) ||
        node.mac.mac54 != compute_sit_mac(ce, g, id, node, pctr))
      return false;
  }
  for (const auto& [idx, ul] : s.nvm.users()) {
    LineId id = LineId::user(idx);
    CounterBlockLine cb = s.nvm.read_cb(g.parent_of(id));
    uint64_t major = cb.major;
    uint8_t minor = cb.minors[g.counter_slot(id)];
    uint16_t lsb = pack_user_lsb10(major, minor);
    if (ul.mac.lsb10 != lsb ||
        ul.mac.mac54 != ce.mac_data(ul.bytes, g.byte_offset(id), major, minor, lsb))
      return false;
  }
  return true;
}

// Decrypt one user line out of a (recovered) snapshot image.
inline std::array<uint8_t, 64> decrypt_user(const CrashSnapshot& s,
                                            uint64_t line_index) {
  const Geometry& g = s.geom;
  LineId id = LineId::user(line_index);
  CounterBlockLine cb = s.nvm.read_cb(g.parent_of(id));
  UserLine ul = s.nvm.read_user(id);
  return CryptoEngine::xor_bytes(
      ul.bytes,
      s.crypto.otp(g.byte_offset(id), cb.major, cb.minors[g.counter_slot(id)]));
}

}  // namespace star
