#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <variant>

#include "star/crypto.hpp"
#include "star/geometry.hpp"

namespace star {

// Ciphertext plus the packed MAC word stored alongside each data line.
struct UserLine {
  std::array<uint8_t, 64> bytes{};
  MacField mac{};

  bool operator==(const UserLine&) const = default;
};

// One counter block: a shared major counter and 64 per-line 7-bit minors.
//
//   | major (u64) | minor[0..63] (7 bits each, stored one per byte) | mac |
struct CounterBlockLine {
  uint64_t major = 0;
  std::array<uint8_t, 64> minors{};
  MacField mac{};

  bool operator==(const CounterBlockLine&) const = default;
};

// One integrity-tree node: eight child counters plus the MAC word.
struct SitNodeLine {
  std::array<uint64_t, 8> counters{};
  MacField mac{};

  bool operator==(const SitNodeLine&) const = default;
};

// One 64-byte bitmap line in the reserved area: 512 presence bits.
struct BitmapLineData {
  std::array<uint64_t, 8> bits{};

  bool operator==(const BitmapLineData&) const = default;
  bool test(unsigned i) const { return (bits[i >> 6] >> (i & 63)) & 1; }
  void set(unsigned i) { bits[i >> 6] |= uint64_t{1} << (i & 63); }
  void clear(unsigned i) { bits[i >> 6] &= ~(uint64_t{1} << (i & 63)); }
  bool any() const {
    for (uint64_t w : bits)
      if (w) return true;
    return false;
  }
};

using LineContent = std::variant<UserLine, CounterBlockLine, SitNodeLine, BitmapLineData>;

// MAC recomputation for each line kind.  `parent_ctr` is the full value of
// the counter slot covering this line in its parent (the on-chip root
// counter for top-level nodes); user lines bind counters instead.

inline uint64_t compute_user_mac(const CryptoEngine& ce, const Geometry& g,
                                 const LineId& id, const std::array<uint8_t, 64>& ct,
                                 uint64_t major, uint8_t minor, uint16_t lsb10) {
  return ce.mac_data(ct, g.byte_offset(id), major, minor, lsb10);
}

inline uint64_t compute_cb_mac(const CryptoEngine& ce, const Geometry& g,
                               const LineId& id, const CounterBlockLine& cb,
                               uint64_t parent_ctr) {
  return ce.mac_counter_block(g.byte_offset(id), cb.major, cb.minors, parent_ctr,
                              cb.mac.lsb10);
}

inline uint64_t compute_sit_mac(const CryptoEngine& ce, const Geometry& g,
                                const LineId& id, const SitNodeLine& node,
                                uint64_t parent_ctr) {
  return ce.mac_sit(g.byte_offset(id), node.counters, parent_ctr, node.mac.lsb10);
}

// Pristine (never written) content for any line.  At time zero every counter
// is 0, every data byte is 0 encrypted under (major=0, minor=0), all MACs are
// computed against parent counter 0, and every sidecar is 0.  These are
// synthesized on demand so an image never needs to materialize cold lines.

inline UserLine pristine_user(const CryptoEngine& ce, const Geometry& g,
                              const LineId& id) {
  UserLine u;
  u.bytes = ce.otp(g.byte_offset(id), 0, 0);  // zero plaintext XOR pad
  uint16_t lsb = pack_user_lsb10(0, 0);
  u.mac = {compute_user_mac(ce, g, id, u.bytes, 0, 0, lsb), lsb};
  return u;
}

inline CounterBlockLine pristine_cb(const CryptoEngine& ce, const Geometry& g,
                                    const LineId& id) {
  CounterBlockLine cb;
  cb.mac.lsb10 = 0;
  cb.mac.mac54 = compute_cb_mac(ce, g, id, cb, 0);
  return cb;
}

inline SitNodeLine pristine_sit(const CryptoEngine& ce, const Geometry& g,
                                const LineId& id) {
  SitNodeLine n;
  n.mac.lsb10 = 0;
  n.mac.mac54 = compute_sit_mac(ce, g, id, n, 0);
  return n;
}

inline LineContent pristine_line(const CryptoEngine& ce, const Geometry& g,
                                 const LineId& id) {
  switch (id.kind) {
    case LineKind::UserData:
      return pristine_user(ce, g, id);
    case LineKind::CounterBlock:
      return pristine_cb(ce, g, id);
    case LineKind::SitNode:
      return pristine_sit(ce, g, id);
    case LineKind::BitmapL1:
    case LineKind::BitmapL2:
      return BitmapLineData{};
  }
  throw std::logic_error("bad line kind");
}

}  // namespace star
