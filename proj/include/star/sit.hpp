#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "star/cache.hpp"
#include "star/nvm.hpp"
#include "star/tracker.hpp"

namespace star {

enum class Scheme { Star, WriteBack, Strict, Anubis };

// Ahead-write aggressiveness.  Low refreshes from the counter level up, Mid
// from the first tree level up, High refreshes nothing below the root.
enum class AwMode { Low, Mid, High };

// Highest level that stays lazy (stale in NVM while cached and dirty).
// Counter blocks are level 0, tree nodes 1..levels-1; -1 puts even the
// counter blocks on the eager side.
inline int aw_start_level(AwMode m, uint32_t levels) {
  switch (m) {
    case AwMode::Low: return -1;
    case AwMode::Mid: return 0;
    case AwMode::High: return static_cast<int>(levels) - 1;
  }
  throw std::logic_error("bad ahead-write mode");
}

struct EngineConfig {
  uint64_t mem_bytes = 16ull << 20;
  uint64_t seed = 1;
  Scheme scheme = Scheme::Star;
  AwMode aw = AwMode::Mid;
  size_t cc_bytes = 32ull << 10;   // counter cache
  size_t sit_bytes = 32ull << 10;  // tree-node cache
  size_t ways = 8;
  size_t adr_lines = 16;    // total ADR-held bitmap lines
  size_t adr_l2_lines = 2;  // of which this many index lines
};

enum class WriteCat {
  Data,
  MetadataEvict,
  AheadWrite,
  BitmapSpill,
  StBlock,
  StrictBranch,
  Reencrypt,
};

struct EngineStats {
  uint64_t w_data = 0;
  uint64_t w_metadata_evict = 0;
  uint64_t w_ahead_write = 0;
  uint64_t w_bitmap_spill = 0;
  uint64_t w_st_block = 0;
  uint64_t w_strict_branch = 0;
  uint64_t w_reencrypt = 0;
  uint64_t r_fill = 0;
  uint64_t r_user = 0;
  uint64_t r_reencrypt = 0;
  uint64_t reencrypt_events = 0;
  uint64_t user_writes = 0;
  uint64_t user_reads = 0;

  uint64_t writes_total() const {
    return w_data + w_metadata_evict + w_ahead_write + w_bitmap_spill +
           w_st_block + w_strict_branch + w_reencrypt;
  }
  uint64_t reads_total() const { return r_fill + r_user + r_reencrypt; }
};

// Registers that survive power loss: the root counter slots, the cache-tree
// root, and the top line of the dirty-bitmap index.
struct ChipState {
  std::array<uint64_t, 8> root_counters{};
  uint64_t ctree_root = 0;
  BitmapLineData bitmap_top{};
};

// The complete post-crash machine state plus the static context a recovery
// pass needs.  Owns its geometry and keys so it can outlive the engine.
struct CrashSnapshot {
  Geometry geom;
  CryptoEngine crypto;
  NvmImage nvm;
  ChipState chip;
  Scheme scheme;
  int start_level;
  CacheSetIndexer indexer;

  CrashSnapshot(const Geometry& g, const CryptoEngine& ce, const NvmImage& src,
                const ChipState& chip_in, Scheme s, int start,
                CacheSetIndexer ix)
      : geom(g),
        crypto(ce),
        nvm(src, geom, crypto),
        chip(chip_in),
        scheme(s),
        start_level(start),
        indexer(ix) {}

  CrashSnapshot(const CrashSnapshot& o)
      : geom(o.geom),
        crypto(o.crypto),
        nvm(o.nvm, geom, crypto),
        chip(o.chip),
        scheme(o.scheme),
        start_level(o.start_level),
        indexer(o.indexer) {}
  CrashSnapshot& operator=(const CrashSnapshot&) = delete;
};

class IntegrityError : public std::runtime_error {
 public:
  IntegrityError(const LineId& id, const std::string& what)
      : std::runtime_error("integrity violation at " + id.str() + ": " + what),
        id_(id) {}
  const LineId& line() const { return id_; }

 private:
  LineId id_;
};

// The memory-controller model: counter-mode encrypted user lines under an
// 8-ary counter tree, metadata caches with lazy write-back, and the chosen
// scheme's persistence machinery on top.
//
// Two write flavors keep the whole design consistent:
//   advancing - the write that carries a version bump (a data write, a
//     dirty-stale eviction, a strict branch flush).  It increments the
//     parent counter slot atomically with the NVM write, so a line's stored
//     10-bit sidecar always equals the live parent slot's low bits.
//   refresh - rewrites current content without touching the parent slot
//     (ahead writes, sidecar-window flushes, page re-encryption).  NVM
//     becomes current; nothing above changes.
// A dirty line whose NVM copy is current is evicted by pure discard: no
// write, no parent increment.
class Engine {
 public:
  using VersionHook = std::function<void(const LineId&, const LineContent&)>;

  explicit Engine(const EngineConfig& cfg)
      : cfg_(cfg),
        g_(cfg.mem_bytes),
        ce_(cfg.seed),
        nvm_(g_, ce_),
        cc_(cache_sets(cfg.cc_bytes, cfg.ways), cfg.ways),
        sitc_(cache_sets(cfg.sit_bytes, cfg.ways), cfg.ways),
        indexer_{cc_.sets(), sitc_.sets()},
        ctree_(ce_.prf(), indexer_.total()),
        start_(aw_start_level(cfg.aw, g_.levels())),
        tracking_(cfg.scheme == Scheme::Star) {
    if (cfg.ways < 2) throw std::invalid_argument("need at least 2 ways");
    if (tracking_) {
      if (cfg.adr_lines <= cfg.adr_l2_lines)
        throw std::invalid_argument("adr_lines must exceed adr_l2_lines");
      tracker_.emplace(
          g_, cfg.adr_lines - cfg.adr_l2_lines, cfg.adr_l2_lines,
          [this] { return scan_dirty_ordinals(); },
          [this](const LineId& id, const BitmapLineData& d) {
            nvm_.write_bitmap(id, d);
            count_write(WriteCat::BitmapSpill);
          });
    }
  }

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // --- trace operations ----------------------------------------------------

  void write(uint64_t addr, const std::array<uint8_t, 64>& plaintext) {
    check_addr(addr);
    LineId u = LineId::user(addr / kLineBytes);
    auto* cb = fetch_cb(u.index / kCountersPerBlock);
    uint32_t slot = g_.counter_slot(u);
    if (cb->data.minors[slot] == 0x7F) re_encrypt(*cb);
    uint8_t minor = ++cb->data.minors[slot];
    uint64_t major = cb->data.major;
    uint64_t off = g_.byte_offset(u);
    UserLine ul;
    ul.bytes = CryptoEngine::xor_bytes(plaintext, ce_.otp(off, major, minor));
    uint16_t lsb = pack_user_lsb10(major, minor);
    ul.mac = {ce_.mac_data(ul.bytes, off, major, minor, lsb), lsb};
    nvm_.write_user(u, ul);
    count_write(WriteCat::Data);
    record_version(u, ul);
    ++stats_.user_writes;
    if (cfg_.scheme == Scheme::Strict)
      flush_branch(*cb);
    else
      on_cb_advanced(*cb);
  }

  std::array<uint8_t, 64> read(uint64_t addr) {
    check_addr(addr);
    LineId u = LineId::user(addr / kLineBytes);
    auto* cb = fetch_cb(u.index / kCountersPerBlock);
    uint64_t major = cb->data.major;
    uint8_t minor = cb->data.minors[g_.counter_slot(u)];
    uint64_t off = g_.byte_offset(u);
    UserLine v = nvm_.read_user(u);
    ++stats_.r_user;
    ++stats_.user_reads;
    uint16_t lsb = pack_user_lsb10(major, minor);
    if (v.mac.lsb10 != lsb ||
        v.mac.mac54 != ce_.mac_data(v.bytes, off, major, minor, lsb))
      throw IntegrityError(u, "data read");
    return CryptoEngine::xor_bytes(v.bytes, ce_.otp(off, major, minor));
  }

  // Evict one specific cached metadata line through the regular eviction
  // path (no-op when it is not cached).
  bool force_evict(const LineId& id) {
    if (id.kind == LineKind::CounterBlock) {
      size_t set = cc_.set_of(line_no(id));
      if (auto* v = cc_.find(set, id)) {
        retire_cb(*v);
        cc_.detach(set, id);
        return true;
      }
    } else if (id.kind == LineKind::SitNode && !g_.is_root(id)) {
      size_t set = sitc_.set_of(line_no(id));
      if (auto* v = sitc_.find(set, id)) {
        retire_sit(*v);
        sitc_.detach(set, id);
        return true;
      }
    }
    return false;
  }

  // --- crash machinery -----------------------------------------------------

  ChipState chip_state() const {
    return {root_counters_, tracking_ ? ctree_.root() : 0,
            tracker_ ? tracker_->top_line() : BitmapLineData{}};
  }

  CrashSnapshot make_snapshot() const {
    CrashSnapshot s(g_, ce_, nvm_, chip_state(), cfg_.scheme, start_, indexer_);
    if (tracker_) tracker_->crash_flush(s.nvm);
    return s;
  }

  // --- introspection -------------------------------------------------------

  const EngineConfig& config() const { return cfg_; }
  const Geometry& geometry() const { return g_; }
  const CryptoEngine& crypto() const { return ce_; }
  const NvmImage& nvm() const { return nvm_; }
  // Off-chip memory is writable by more than this controller; handing out a
  // mutable view lets callers model exactly the tampering the MACs catch.
  NvmImage& nvm_mut() { return nvm_; }
  const EngineStats& stats() const { return stats_; }
  int start_level() const { return start_; }
  const std::array<uint64_t, 8>& root_counters() const { return root_counters_; }
  uint64_t ctree_root() const { return tracking_ ? ctree_.root() : 0; }
  const CacheTreeModel* cache_tree() const { return tracking_ ? &ctree_ : nullptr; }
  const CacheSetIndexer& indexer() const { return indexer_; }
  const SetAssocCache<CounterBlockLine>& counter_cache() const { return cc_; }
  const SetAssocCache<SitNodeLine>& sit_cache() const { return sitc_; }
  DirtyTracker::Stats tracker_stats() const {
    return tracker_ ? tracker_->stats() : DirtyTracker::Stats{};
  }

  const CacheLine<CounterBlockLine>* cached_cb(uint64_t index) const {
    LineId id = LineId::counter_block(index);
    return cc_.find(cc_.set_of(line_no(id)), id);
  }
  const CacheLine<SitNodeLine>* cached_sit(const LineId& id) const {
    return sitc_.find(sitc_.set_of(line_no(id)), id);
  }

  void set_version_hook(VersionHook h) { hook_ = std::move(h); }

  std::vector<uint64_t> scan_dirty_ordinals() const {
    std::vector<uint64_t> out;
    cc_.for_each([&](const CacheLine<CounterBlockLine>& l) {
      if (l.dirty) out.push_back(g_.metadata_ordinal(l.id));
    });
    sitc_.for_each([&](const CacheLine<SitNodeLine>& l) {
      if (l.dirty) out.push_back(g_.metadata_ordinal(l.id));
    });
    return out;
  }

 private:
  static size_t cache_sets(size_t bytes, size_t ways) {
    size_t sets = bytes / kLineBytes / ways;
    if (sets == 0) throw std::invalid_argument("cache smaller than one set");
    return sets;
  }

  void check_addr(uint64_t addr) const {
    if (addr >= g_.mem_bytes()) throw std::out_of_range("address past end of memory");
  }

  uint64_t line_no(const LineId& id) const { return g_.byte_offset(id) / kLineBytes; }

  void count_write(WriteCat c) {
    bump(c);
    if (cfg_.scheme == Scheme::Anubis && c != WriteCat::StBlock)
      bump(WriteCat::StBlock);  // every write mirrors into the shadow table
  }
  void bump(WriteCat c) {
    switch (c) {
      case WriteCat::Data: ++stats_.w_data; break;
      case WriteCat::MetadataEvict: ++stats_.w_metadata_evict; break;
      case WriteCat::AheadWrite: ++stats_.w_ahead_write; break;
      case WriteCat::BitmapSpill: ++stats_.w_bitmap_spill; break;
      case WriteCat::StBlock: ++stats_.w_st_block; break;
      case WriteCat::StrictBranch: ++stats_.w_strict_branch; break;
      case WriteCat::Reencrypt: ++stats_.w_reencrypt; break;
    }
  }

  template <typename T>
  void record_version(const LineId& id, const T& content) {
    if (hook_) hook_(id, LineContent{content});
  }

  void recompute_cb_mac(CacheLine<CounterBlockLine>& L) {
    L.data.mac.lsb10 = static_cast<uint16_t>(L.parent_ctr & kLsbMask);
    L.data.mac.mac54 = compute_cb_mac(ce_, g_, L.id, L.data, L.parent_ctr);
  }
  void recompute_sit_mac(CacheLine<SitNodeLine>& L) {
    L.data.mac.lsb10 = static_cast<uint16_t>(L.parent_ctr & kLsbMask);
    L.data.mac.mac54 = compute_sit_mac(ce_, g_, L.id, L.data, L.parent_ctr);
  }

  template <typename L>
  void note_dirty(L& line) {
    bool was = line.dirty;
    line.dirty = true;
    if (!tracking_) return;
    if (!was) tracker_->record(g_.metadata_ordinal(line.id), true);
    ctree_.add(indexer_.global_set(g_, line.id), g_.byte_offset(line.id),
               line.data.mac.mac54);
  }
  template <typename L>
  void note_clean(L& line) {
    bool was = line.dirty;
    line.dirty = false;
    line.nvm_fresh = true;
    if (!tracking_ || !was) return;
    tracker_->record(g_.metadata_ordinal(line.id), false);
    ctree_.remove(indexer_.global_set(g_, line.id), g_.byte_offset(line.id));
  }

  // Full value of the parent counter slot covering `id` (live truth).
  uint64_t parent_ctr_of(const LineId& id) {
    auto [p, slot] = g_.parent_and_slot(id);
    if (g_.is_root(p)) return root_counters_[slot];
    return fetch_sit(p)->data.counters[slot];
  }

  // Increment the parent slot of `child` (the advancing half of a write)
  // and apply the post-advance policy to the parent.
  uint64_t advance_parent(const LineId& child) {
    auto [p, slot] = g_.parent_and_slot(child);
    if (g_.is_root(p)) return ++root_counters_[slot];
    auto* P = fetch_sit(p);
    uint64_t v = ++P->data.counters[slot];
    on_sit_advanced(*P, slot);
    return v;
  }

  // Increment only; the caller writes the parent itself next (strict flush).
  uint64_t advance_parent_raw(const LineId& child) {
    auto [p, slot] = g_.parent_and_slot(child);
    if (g_.is_root(p)) return ++root_counters_[slot];
    return ++fetch_sit(p)->data.counters[slot];
  }

  void on_cb_advanced(CacheLine<CounterBlockLine>& L) {
    recompute_cb_mac(L);
    note_dirty(L);
    if (cfg_.scheme == Scheme::Star && start_ < 0) {
      nvm_.write_cb(L.id, L.data);
      count_write(WriteCat::AheadWrite);
      record_version(L.id, L.data);
      L.nvm_fresh = true;  // stays dirty until eviction
    } else {
      L.nvm_fresh = false;
    }
  }

  void on_sit_advanced(CacheLine<SitNodeLine>& P, uint32_t slot) {
    recompute_sit_mac(P);
    note_dirty(P);
    if (cfg_.scheme == Scheme::Star && static_cast<int>(P.id.level) > start_) {
      nvm_.write_sit(P.id, P.data);
      count_write(WriteCat::AheadWrite);
      record_version(P.id, P.data);
      P.nvm_fresh = true;  // stays dirty until eviction
      return;
    }
    P.nvm_fresh = false;
    if (cfg_.scheme != Scheme::Star) return;
    // Lazy side: flush before the 10-bit sidecar window would wrap.
    uint64_t stored = nvm_.sit_slot_or_zero(P.id, slot);
    if (P.data.counters[slot] - stored >= kLsbMask) {
      nvm_.write_sit(P.id, P.data);
      count_write(WriteCat::AheadWrite);
      record_version(P.id, P.data);
      note_clean(P);
    }
  }

  // Retire a still-resident victim: flush in place, then let the caller
  // detach the clean line.  The victim stays findable (and pinned against
  // nested eviction) while its parent advance walks the tree, so re-entrant
  // lookups of the same line see live counters, never a stale NVM refill.
  void retire_cb(CacheLine<CounterBlockLine>& v) {
    if (!v.dirty) return;
    if (v.nvm_fresh) {  // discard: NVM already holds this exact version
      note_clean(v);
      return;
    }
    v.pinned = true;
    v.parent_ctr = advance_parent(v.id);
    recompute_cb_mac(v);
    nvm_.write_cb(v.id, v.data);
    count_write(WriteCat::MetadataEvict);
    record_version(v.id, v.data);
    note_clean(v);
    v.pinned = false;
  }

  void retire_sit(CacheLine<SitNodeLine>& v) {
    if (!v.dirty) return;
    if (v.nvm_fresh) {
      note_clean(v);
      return;
    }
    v.pinned = true;
    v.parent_ctr = advance_parent(v.id);
    recompute_sit_mac(v);
    nvm_.write_sit(v.id, v.data);
    count_write(WriteCat::MetadataEvict);
    record_version(v.id, v.data);
    note_clean(v);
    v.pinned = false;
  }

  CacheLine<CounterBlockLine>* fetch_cb(uint64_t index) {
    LineId id = LineId::counter_block(index);
    size_t set = cc_.set_of(line_no(id));
    for (int guard = 0; guard < 64; ++guard) {
      if (auto* f = cc_.find(set, id)) {
        cc_.touch(*f);
        return f;
      }
      uint64_t pctr = parent_ctr_of(id);  // may fill ancestors, evict in set
      if (auto* f = cc_.find(set, id)) {
        cc_.touch(*f);
        return f;
      }
      if (!cc_.set_full(set)) {
        CounterBlockLine v = nvm_.read_cb(id);
        ++stats_.r_fill;
        if (v.mac.lsb10 != (pctr & kLsbMask) ||
            v.mac.mac54 != compute_cb_mac(ce_, g_, id, v, pctr))
          throw IntegrityError(id, "counter block fill");
        CacheLine<CounterBlockLine> line;
        line.id = id;
        line.data = v;
        line.parent_ctr = pctr;
        return &cc_.insert(set, std::move(line));
      }
      auto& victim = cc_.peek_lru(set);
      LineId vid = victim.id;
      retire_cb(victim);
      cc_.detach(set, vid);
    }
    throw std::logic_error("fill did not converge");
  }

  CacheLine<SitNodeLine>* fetch_sit(const LineId& id) {
    size_t set = sitc_.set_of(line_no(id));
    for (int guard = 0; guard < 64; ++guard) {
      if (auto* f = sitc_.find(set, id)) {
        sitc_.touch(*f);
        return f;
      }
      uint64_t pctr = parent_ctr_of(id);
      if (auto* f = sitc_.find(set, id)) {
        sitc_.touch(*f);
        return f;
      }
      if (!sitc_.set_full(set)) {
        SitNodeLine v = nvm_.read_sit(id);
        ++stats_.r_fill;
        if (v.mac.lsb10 != (pctr & kLsbMask) ||
            v.mac.mac54 != compute_sit_mac(ce_, g_, id, v, pctr))
          throw IntegrityError(id, "tree node fill");
        CacheLine<SitNodeLine> line;
        line.id = id;
        line.data = v;
        line.parent_ctr = pctr;
        return &sitc_.insert(set, std::move(line));
      }
      auto& victim = sitc_.peek_lru(set);
      LineId vid = victim.id;
      retire_sit(victim);
      sitc_.detach(set, vid);
    }
    throw std::logic_error("fill did not converge");
  }

  // Rewrite one page under the next major counter once a minor is about to
  // wrap: 64 verified data reads, 64 data rewrites, one counter-block
  // refresh.  Versions advance nowhere above the page.
  void re_encrypt(CacheLine<CounterBlockLine>& L) {
    uint64_t page = L.id.index;
    uint64_t old_major = L.data.major;
    uint64_t new_major = old_major + 1;
    for (uint32_t i = 0; i < kCountersPerBlock; ++i) {
      uint64_t uidx = page * kCountersPerBlock + i;
      if (uidx >= g_.user_lines()) break;
      LineId u = LineId::user(uidx);
      uint64_t off = g_.byte_offset(u);
      UserLine old = nvm_.read_user(u);
      ++stats_.r_reencrypt;
      uint8_t mi = L.data.minors[i];
      uint16_t olsb = pack_user_lsb10(old_major, mi);
      if (old.mac.lsb10 != olsb ||
          old.mac.mac54 != ce_.mac_data(old.bytes, off, old_major, mi, olsb))
        throw IntegrityError(u, "page re-encryption read");
      auto pt = CryptoEngine::xor_bytes(old.bytes, ce_.otp(off, old_major, mi));
      UserLine nu;
      nu.bytes = CryptoEngine::xor_bytes(pt, ce_.otp(off, new_major, 0));
      uint16_t nlsb = pack_user_lsb10(new_major, 0);
      nu.mac = {ce_.mac_data(nu.bytes, off, new_major, 0, nlsb), nlsb};
      nvm_.write_user(u, nu);
      count_write(WriteCat::Reencrypt);
      record_version(u, nu);
    }
    L.data.major = new_major;
    L.data.minors.fill(0);
    recompute_cb_mac(L);
    nvm_.write_cb(L.id, L.data);
    count_write(WriteCat::Reencrypt);
    record_version(L.id, L.data);
    ++stats_.reencrypt_events;
    if (L.dirty) {
      if (cfg_.scheme == Scheme::Star && start_ < 0) {
        // eager side keeps the dirty flag; keep its digest current
        ctree_.add(indexer_.global_set(g_, L.id), g_.byte_offset(L.id),
                   L.data.mac.mac54);
        L.nvm_fresh = true;
      } else {
        note_clean(L);
      }
    } else {
      L.nvm_fresh = true;
    }
  }

  // Strict mode: push the whole branch out as advancing writes on every
  // data write.  Lines stay cached and clean; the root slot takes the last
  // increment on chip.
  void flush_branch(CacheLine<CounterBlockLine>& cb) {
    cb.pinned = true;
    cb.parent_ctr = advance_parent_raw(cb.id);
    recompute_cb_mac(cb);
    nvm_.write_cb(cb.id, cb.data);
    count_write(WriteCat::StrictBranch);
    record_version(cb.id, cb.data);
    cb.nvm_fresh = true;
    cb.pinned = false;
    LineId cur = g_.parent_of(cb.id);
    while (!g_.is_root(cur)) {
      auto* C = fetch_sit(cur);
      C->pinned = true;
      C->parent_ctr = advance_parent_raw(cur);
      recompute_sit_mac(*C);
      nvm_.write_sit(C->id, C->data);
      count_write(WriteCat::StrictBranch);
      record_version(C->id, C->data);
      C->nvm_fresh = true;
      C->pinned = false;
      cur = g_.parent_of(cur);
    }
  }

  EngineConfig cfg_;
  Geometry g_;
  CryptoEngine ce_;
  NvmImage nvm_;
  SetAssocCache<CounterBlockLine> cc_;
  SetAssocCache<SitNodeLine> sitc_;
  CacheSetIndexer indexer_;
  CacheTreeModel ctree_;
  int start_;
  bool tracking_;
  std::optional<DirtyTracker> tracker_;
  std::array<uint64_t, 8> root_counters_{};
  EngineStats stats_;
  VersionHook hook_;
};

}  // namespace star
