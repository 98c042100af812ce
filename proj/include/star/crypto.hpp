#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <initializer_list>

namespace star {

inline constexpr uint64_t kMacBits = 54;
inline constexpr uint64_t kMacMask = (uint64_t{1} << kMacBits) - 1;
inline constexpr uint64_t kLsbBits = 10;
inline constexpr uint64_t kLsbMask = (uint64_t{1} << kLsbBits) - 1;

// 64-bit MAC space of a line, split into a 54-bit tag and a 10-bit sidecar.
//
//   63                                   10 9         0
//   +--------------------------------------+-----------+
//   |               mac54                  |   lsb10   |
//   +--------------------------------------+-----------+
//
// For metadata nodes lsb10 carries the 10 LSBs of the parent counter that
// covers this line.  For user-data lines it packs the full 7-bit minor
// counter in the low bits and the 3 LSBs of the page major counter above.
struct MacField {
  uint64_t mac54 = 0;
  uint16_t lsb10 = 0;

  bool operator==(const MacField&) const = default;

  uint64_t pack() const { return (mac54 << kLsbBits) | (lsb10 & kLsbMask); }
  static MacField unpack(uint64_t v) {
    return {v >> kLsbBits, static_cast<uint16_t>(v & kLsbMask)};
  }
};

inline uint16_t pack_user_lsb10(uint64_t major, uint8_t minor) {
  return static_cast<uint16_t>(((major & 7) << 7) | (minor & 0x7F));
}
inline uint8_t user_lsb10_minor(uint16_t lsb10) { return lsb10 & 0x7F; }
inline uint8_t user_lsb10_major3(uint16_t lsb10) { return (lsb10 >> 7) & 7; }

// Keyed 64-bit mixing function standing in for the memory controller's PRF.
// Determinism and avalanche are what the model needs; cryptographic strength
// is not.  Each absorbed word passes through a full multiply-xorshift
// finalizer so single-bit input flips scramble the whole state.
class Prf {
 public:
  explicit Prf(uint64_t seed) {
    k0_ = mix(seed ^ 0x9e3779b97f4a7c15ull);
    k1_ = mix(k0_ ^ 0xbf58476d1ce4e5b9ull);
  }

  static uint64_t mix(uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
  }

  uint64_t hash(uint64_t domain, std::initializer_list<uint64_t> words) const {
    uint64_t h = mix(k0_ ^ domain);
    for (uint64_t w : words) h = absorb(h, w);
    return mix(h ^ k1_);
  }

  uint64_t hash_span(uint64_t domain, const uint64_t* words, size_t n,
                     std::initializer_list<uint64_t> extra = {}) const {
    uint64_t h = mix(k0_ ^ domain);
    for (size_t i = 0; i < n; ++i) h = absorb(h, words[i]);
    for (uint64_t w : extra) h = absorb(h, w);
    return mix(h ^ k1_);
  }

  uint64_t key0() const { return k0_; }

 private:
  uint64_t absorb(uint64_t h, uint64_t w) const {
    return mix(h ^ mix(w + k1_)) + 0x9e3779b97f4a7c15ull;
  }
  uint64_t k0_, k1_;
};

namespace prf_domain {
inline constexpr uint64_t kOtp = 0x4f5450;          // one-time pads
inline constexpr uint64_t kMacData = 0x4d44;        // user-data MACs
inline constexpr uint64_t kMacCounter = 0x4d43;     // counter-block MACs
inline constexpr uint64_t kMacSit = 0x4d53;         // tree-node MACs
inline constexpr uint64_t kSetMac = 0x534d;         // cache-tree set digests
inline constexpr uint64_t kCacheTree = 0x4354;      // cache-tree inner nodes
}  // namespace prf_domain

inline void words_from_bytes(const std::array<uint8_t, 64>& b, uint64_t out[8]) {
  std::memcpy(out, b.data(), 64);
}

// Counter-mode pad for one line: PRF(key, address, major, minor) expanded to
// 64 bytes.  Encryption and decryption are the same XOR.
class CryptoEngine {
 public:
  explicit CryptoEngine(uint64_t seed) : prf_(seed) {}

  const Prf& prf() const { return prf_; }

  std::array<uint8_t, 64> otp(uint64_t addr, uint64_t major, uint8_t minor) const {
    uint64_t s = prf_.hash(prf_domain::kOtp, {addr, major, minor});
    std::array<uint8_t, 64> pad;
    for (int i = 0; i < 8; ++i) {
      uint64_t w = Prf::mix(s + 0x9e3779b97f4a7c15ull * (i + 1));
      std::memcpy(pad.data() + 8 * i, &w, 8);
    }
    return pad;
  }

  static std::array<uint8_t, 64> xor_bytes(const std::array<uint8_t, 64>& a,
                                           const std::array<uint8_t, 64>& b) {
    std::array<uint8_t, 64> out;
    for (int i = 0; i < 64; ++i) out[i] = a[i] ^ b[i];
    return out;
  }

  uint64_t mac_data(const std::array<uint8_t, 64>& ct, uint64_t addr,
                    uint64_t major, uint8_t minor, uint16_t lsb10) const {
    uint64_t w[8];
    words_from_bytes(ct, w);
    return prf_.hash_span(prf_domain::kMacData, w, 8, {addr, major, minor, lsb10}) &
           kMacMask;
  }

  uint64_t mac_counter_block(uint64_t addr, uint64_t major,
                             const std::array<uint8_t, 64>& minors,
                             uint64_t parent_ctr, uint16_t lsb10) const {
    uint64_t w[8];
    words_from_bytes(minors, w);
    return prf_.hash_span(prf_domain::kMacCounter, w, 8,
                          {addr, major, parent_ctr, lsb10}) &
           kMacMask;
  }

  uint64_t mac_sit(uint64_t addr, const std::array<uint64_t, 8>& counters,
                   uint64_t parent_ctr, uint16_t lsb10) const {
    return prf_.hash_span(prf_domain::kMacSit, counters.data(), 8,
                          {addr, parent_ctr, lsb10}) &
           kMacMask;
  }

 private:
  Prf prf_;
};

}  // namespace star
