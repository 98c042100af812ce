#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "star/lines.hpp"

namespace star {

// One cached metadata line.  `nvm_fresh` tracks whether the NVM copy equals
// the live copy (an ahead-written line stays dirty but becomes fresh).
// `parent_ctr` caches the full value of the parent counter slot covering
// this line; it is set at fill time and stays valid while the line is
// cached, because that slot only advances together with writes to this line.
// `pinned` exempts a line from victim selection while a multi-step operation
// holds a pointer to it.
template <typename Content>
struct CacheLine {
  LineId id{};
  Content data{};
  bool dirty = false;
  bool nvm_fresh = true;
  bool pinned = false;
  uint64_t parent_ctr = 0;
  uint64_t lru = 0;
};

// Set-associative cache with LRU replacement over fixed per-set slots.
// Slots never move, so a pointer to a resident line stays valid across
// unrelated inserts and evictions in the same set; it dies only when that
// line itself is detached.  Insertion requires a free slot: callers detach
// (and flush) a victim first, which keeps recursive parent-eviction
// reentrancy out of this class.
template <typename Content>
class SetAssocCache {
 public:
  using Line = CacheLine<Content>;

  SetAssocCache(size_t sets, size_t ways) : sets_(sets), ways_(ways) {
    if (sets == 0 || ways == 0) throw std::invalid_argument("empty cache");
    slots_.resize(sets * ways);
  }

  size_t sets() const { return sets_; }
  size_t ways() const { return ways_; }

  size_t set_of(uint64_t line_no) const { return line_no % sets_; }

  Line* find(size_t set, const LineId& id) {
    for (size_t w = 0; w < ways_; ++w) {
      Slot& s = at(set, w);
      if (s.used && s.line.id == id) return &s.line;
    }
    return nullptr;
  }
  const Line* find(size_t set, const LineId& id) const {
    return const_cast<SetAssocCache*>(this)->find(set, id);
  }

  bool set_full(size_t set) const {
    for (size_t w = 0; w < ways_; ++w)
      if (!at(set, w).used) return false;
    return true;
  }

  Line& insert(size_t set, Line line) {
    for (size_t w = 0; w < ways_; ++w) {
      Slot& s = at(set, w);
      if (!s.used) {
        s.used = true;
        s.line = std::move(line);
        s.line.lru = ++tick_;
        return s.line;
      }
    }
    throw std::logic_error("insert into full set");
  }

  void touch(Line& line) { line.lru = ++tick_; }

  // The least-recently-used unpinned line of the set, still resident.
  // Writeback logic runs against the live line (so re-entrant lookups see
  // current state); the caller detaches once the line is clean.
  Line& peek_lru(size_t set) {
    Slot* best = nullptr;
    for (size_t w = 0; w < ways_; ++w) {
      Slot& s = at(set, w);
      if (!s.used || s.line.pinned) continue;
      if (!best || s.line.lru < best->line.lru) best = &s;
    }
    if (!best) throw std::logic_error("no evictable line in set");
    return best->line;
  }

  Line detach_lru(size_t set) { return *detach(set, peek_lru(set).id); }

  std::optional<Line> detach(size_t set, const LineId& id) {
    for (size_t w = 0; w < ways_; ++w) {
      Slot& s = at(set, w);
      if (s.used && s.line.id == id) {
        Line out = std::move(s.line);
        s.used = false;
        s.line = Line{};
        return out;
      }
    }
    return std::nullopt;
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const Slot& s : slots_)
      if (s.used) fn(s.line);
  }
  template <typename Fn>
  void for_each(Fn&& fn) {
    for (Slot& s : slots_)
      if (s.used) fn(s.line);
  }

  size_t size() const {
    size_t n = 0;
    for (const Slot& s : slots_)
      if (s.used) ++n;
    return n;
  }

 private:
  struct Slot {
    bool used = false;
    Line line{};
  };
  Slot& at(size_t set, size_t way) { return slots_[set * ways_ + way]; }
  const Slot& at(size_t set, size_t way) const { return slots_[set * ways_ + way]; }

  size_t sets_, ways_;
  uint64_t tick_ = 0;
  std::vector<Slot> slots_;
};

// Maps a metadata line to its global cache-tree set: counter-block lines
// occupy sets [0, cc_sets), tree nodes [cc_sets, cc_sets + sit_sets).
struct CacheSetIndexer {
  size_t cc_sets = 0;
  size_t sit_sets = 0;

  size_t total() const { return cc_sets + sit_sets; }

  size_t global_set(const Geometry& g, const LineId& id) const {
    uint64_t line_no = g.byte_offset(id) / kLineBytes;
    if (id.kind == LineKind::CounterBlock) return line_no % cc_sets;
    if (id.kind == LineKind::SitNode) return cc_sets + line_no % sit_sets;
    throw std::logic_error("line kind not covered by cache tree");
  }
};

// On-chip digest tree over the dirty cached metadata.  Each cache set keeps
// an ordered map of dirty line address -> 54-bit MAC; the set digest hashes
// those MACs in descending address order (literal 0 for an empty set), and
// an 8-ary reduction of set digests yields one 64-bit root register.  A node
// whose children are all zero stays zero, so the root of an all-clean cache
// is exactly 0.
class CacheTreeModel {
 public:
  CacheTreeModel(const Prf& prf, size_t num_sets) : prf_(&prf), sets_(num_sets) {
    size_t n = num_sets;
    while (true) {
      nodes_.emplace_back(n, 0);
      if (n == 1) break;
      n = (n + kTreeArity - 1) / kTreeArity;
    }
  }

  void add(size_t set, uint64_t addr, uint64_t mac54) {
    sets_[set][addr] = mac54;
    bubble(set);
  }
  void update(size_t set, uint64_t addr, uint64_t mac54) { add(set, addr, mac54); }
  void remove(size_t set, uint64_t addr) {
    sets_[set].erase(addr);
    bubble(set);
  }

  uint64_t root() const { return nodes_.back()[0]; }

  size_t entry_count() const {
    size_t n = 0;
    for (const auto& s : sets_) n += s.size();
    return n;
  }

  const std::map<uint64_t, uint64_t>& set_entries(size_t set) const {
    return sets_[set];
  }

  static uint64_t set_digest(const Prf& prf, const std::map<uint64_t, uint64_t>& s) {
    if (s.empty()) return 0;
    uint64_t h = Prf::mix(prf.key0() ^ prf_domain::kSetMac);
    for (auto it = s.rbegin(); it != s.rend(); ++it) {
      h = Prf::mix(h ^ Prf::mix(it->first + 0x9e3779b97f4a7c15ull));
      h = Prf::mix(h ^ Prf::mix(it->second + 0xbf58476d1ce4e5b9ull));
    }
    return Prf::mix(h);
  }

  static uint64_t rebuild(const Prf& prf,
                          const std::vector<std::map<uint64_t, uint64_t>>& sets) {
    std::vector<uint64_t> level(sets.size());
    for (size_t i = 0; i < sets.size(); ++i) level[i] = set_digest(prf, sets[i]);
    while (level.size() > 1) {
      std::vector<uint64_t> up((level.size() + kTreeArity - 1) / kTreeArity);
      for (size_t p = 0; p < up.size(); ++p)
        up[p] = reduce(prf, level, p * kTreeArity);
      level.swap(up);
    }
    return level.empty() ? 0 : level[0];
  }

 private:
  static uint64_t reduce(const Prf& prf, const std::vector<uint64_t>& kids,
                         size_t base) {
    size_t end = std::min(base + kTreeArity, kids.size());
    bool all_zero = true;
    for (size_t i = base; i < end; ++i)
      if (kids[i]) all_zero = false;
    if (all_zero) return 0;
    uint64_t h = Prf::mix(prf.key0() ^ prf_domain::kCacheTree);
    for (size_t i = base; i < end; ++i)
      h = Prf::mix(h ^ Prf::mix(kids[i] + 0x9e3779b97f4a7c15ull));
    return Prf::mix(h);
  }

  void bubble(size_t set) {
    nodes_[0][set] = set_digest(*prf_, sets_[set]);
    size_t idx = set;
    for (size_t lvl = 1; lvl < nodes_.size(); ++lvl) {
      idx /= kTreeArity;
      nodes_[lvl][idx] = reduce(*prf_, nodes_[lvl - 1], idx * kTreeArity);
    }
  }

  const Prf* prf_;
  std::vector<std::map<uint64_t, uint64_t>> sets_;
  std::vector<std::vector<uint64_t>> nodes_;  // nodes_[0] = set digests
};

}  // namespace star
