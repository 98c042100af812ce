#pragma once

#include <cstdint>
#include <unordered_map>

#include "star/lines.hpp"

namespace star {

// Sparse model of the NVM array.  Lines never written keep their pristine
// content, synthesized on read, so multi-GiB geometries cost memory only in
// proportion to the touched footprint.
class NvmImage {
 public:
  NvmImage(const Geometry& g, const CryptoEngine& ce) : g_(&g), ce_(&ce) {}

  // Copy the stored lines of `src` but resolve pristine content against the
  // given geometry and key owner (used when a snapshot outlives its engine).
  NvmImage(const NvmImage& src, const Geometry& g, const CryptoEngine& ce)
      : g_(&g),
        ce_(&ce),
        user_(src.user_),
        cb_(src.cb_),
        sit_(src.sit_),
        l1_(src.l1_),
        l2_(src.l2_) {}

  bool has(const LineId& id) const {
    switch (id.kind) {
      case LineKind::UserData:
        return user_.count(id.index) != 0;
      case LineKind::CounterBlock:
        return cb_.count(id.index) != 0;
      case LineKind::SitNode:
        return sit_.count(id.key()) != 0;
      case LineKind::BitmapL1:
        return l1_.count(id.index) != 0;
      case LineKind::BitmapL2:
        return l2_.count(id.index) != 0;
    }
    return false;
  }

  UserLine read_user(const LineId& id) const {
    auto it = user_.find(id.index);
    return it != user_.end() ? it->second : pristine_user(*ce_, *g_, id);
  }
  CounterBlockLine read_cb(const LineId& id) const {
    auto it = cb_.find(id.index);
    return it != cb_.end() ? it->second : pristine_cb(*ce_, *g_, id);
  }
  SitNodeLine read_sit(const LineId& id) const {
    auto it = sit_.find(id.key());
    return it != sit_.end() ? it->second : pristine_sit(*ce_, *g_, id);
  }
  BitmapLineData read_bitmap(const LineId& id) const {
    const auto& m = id.kind == LineKind::BitmapL1 ? l1_ : l2_;
    auto it = m.find(id.index);
    return it != m.end() ? it->second : BitmapLineData{};
  }

  LineContent read(const LineId& id) const {
    switch (id.kind) {
      case LineKind::UserData:
        return read_user(id);
      case LineKind::CounterBlock:
        return read_cb(id);
      case LineKind::SitNode:
        return read_sit(id);
      case LineKind::BitmapL1:
      case LineKind::BitmapL2:
        return read_bitmap(id);
    }
    throw std::logic_error("bad line kind");
  }

  void write_user(const LineId& id, const UserLine& v) { user_[id.index] = v; }
  void write_cb(const LineId& id, const CounterBlockLine& v) { cb_[id.index] = v; }
  void write_sit(const LineId& id, const SitNodeLine& v) { sit_[id.key()] = v; }
  void write_bitmap(const LineId& id, const BitmapLineData& v) {
    (id.kind == LineKind::BitmapL1 ? l1_ : l2_)[id.index] = v;
  }

  void write(const LineId& id, const LineContent& v) {
    switch (id.kind) {
      case LineKind::UserData:
        write_user(id, std::get<UserLine>(v));
        return;
      case LineKind::CounterBlock:
        write_cb(id, std::get<CounterBlockLine>(v));
        return;
      case LineKind::SitNode:
        write_sit(id, std::get<SitNodeLine>(v));
        return;
      case LineKind::BitmapL1:
      case LineKind::BitmapL2:
        write_bitmap(id, std::get<BitmapLineData>(v));
        return;
    }
    throw std::logic_error("bad line kind");
  }

  // Stored counter value of one tree-node slot, without synthesizing a
  // pristine line (cheap peek for staleness-window checks).
  uint64_t sit_slot_or_zero(const LineId& id, unsigned slot) const {
    auto it = sit_.find(id.key());
    return it != sit_.end() ? it->second.counters[slot] : 0;
  }

  // Materialized (ever written) line counts, used by sweeps in tests.
  size_t materialized_users() const { return user_.size(); }
  size_t materialized_cbs() const { return cb_.size(); }
  size_t materialized_sits() const { return sit_.size(); }

  const std::unordered_map<uint64_t, UserLine>& users() const { return user_; }
  const std::unordered_map<uint64_t, CounterBlockLine>& cbs() const { return cb_; }
  const std::unordered_map<uint64_t, SitNodeLine>& sits() const { return sit_; }

  const Geometry& geometry() const { return *g_; }
  const CryptoEngine& crypto() const { return *ce_; }

 private:
  const Geometry* g_;
  const CryptoEngine* ce_;
  std::unordered_map<uint64_t, UserLine> user_;
  std::unordered_map<uint64_t, CounterBlockLine> cb_;
  std::unordered_map<uint64_t, SitNodeLine> sit_;  // keyed by level|index
  std::unordered_map<uint64_t, BitmapLineData> l1_, l2_;
};

}  // namespace star
