#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "star/star.hpp"

using namespace star;

TEST_CASE("mac field packs 54+10 bits losslessly") {
  MacField m{0x2fffffffffffffull, 0x3ff};
  CHECK(MacField::unpack(m.pack()) == m);
  CHECK(m.pack() == ((0x2fffffffffffffull << 10) | 0x3ff));
  MacField z{0, 0};
  CHECK(MacField::unpack(0) == z);
  // round trip across random fields
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    MacField f{rng() & kMacMask, uint16_t(rng() & kLsbMask)};
    CHECK(MacField::unpack(f.pack()) == f);
  }
}

TEST_CASE("user sidecar packs major low bits beside the minor") {
  CHECK(pack_user_lsb10(0, 0) == 0);
  CHECK(pack_user_lsb10(0, 127) == 127);
  CHECK(pack_user_lsb10(1, 0) == 128);
  CHECK(pack_user_lsb10(5, 127) == (5 << 7| 127));
  CHECK(pack_user_lsb10(8, 3) == 3);  // major wraps mod 8
  for (uint64_t major = 0; major < 16; ++major)
    for (uint8_t minor = 0; minor < 128; ++minor) {
      uint16_t l = pack_user_lsb10(major, minor);
      CHECK(user_lsb10_minor(l) == minor);
      CHECK(user_lsb10_major3(l) == (major & 7));
    }
}

TEST_CASE("pad xor is an involution") {
  CryptoEngine ce(42);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    std::array<uint8_t, 64> pt;
    for (auto& b : pt) b = uint8_t(rng());
    auto pad = ce.otp(rng() % (1 << 24) * 64, rng() % 1000, uint8_t(rng() % 128));
    auto ct = CryptoEngine::xor_bytes(pt, pad);
    CHECK(CryptoEngine::xor_bytes(ct, pad) == pt);
    if (i == 0) CHECK(ct != pt);  // the pad is not the zero string
  }
}

TEST_CASE("pads are distinct across address, major, and minor") {
  CryptoEngine ce(42);
  std::set<std::array<uint8_t, 64>> seen;
  for (uint64_t a : {0ull, 64ull, 4096ull})
    for (uint64_t major : {0ull, 1ull, 2ull})
      for (uint8_t minor : {0, 1, 127})
        CHECK(seen.insert(ce.otp(a, major, minor)).second);
}

TEST_CASE("data mac rejects every single-bit flip of the ciphertext") {
  CryptoEngine ce(9);
  std::mt19937_64 rng(3);
  std::array<uint8_t, 64> ct;
  for (auto& b : ct) b = uint8_t(rng());
  const uint64_t mac = ce.mac_data(ct, 0x1240, 5, 3, 0x2b5);
  int trials = 0;
  for (int byte = 0; byte < 64; ++byte)
    for (int bit = 0; bit < 8; ++bit) {
      auto mut = ct;
      mut[byte] ^= uint8_t(1u << bit);
      CHECK(ce.mac_data(mut, 0x1240, 5, 3, 0x2b5) != mac);
      ++trials;
    }
  CHECK(trials == 512);
}

TEST_CASE("macs bind every input they cover") {
  CryptoEngine ce(9);
  std::array<uint8_t, 64> ct{};
  uint64_t base = ce.mac_data(ct, 64, 1, 2, 3);
  CHECK(ce.mac_data(ct, 128, 1, 2, 3) != base);
  CHECK(ce.mac_data(ct, 64, 2, 2, 3) != base);
  CHECK(ce.mac_data(ct, 64, 1, 3, 3) != base);
  CHECK(ce.mac_data(ct, 64, 1, 2, 4) != base);
  CHECK(base <= kMacMask);

  CounterBlockLine cb{};
  uint64_t m0 = ce.mac_counter_block(4096, 7, cb.minors, 11, 11 & kLsbMask);
  cb.minors[63] = 1;
  CHECK(ce.mac_counter_block(4096, 7, cb.minors, 11, 11 & kLsbMask) != m0);
  CHECK(ce.mac_counter_block(4096, 8, cb.minors, 11, 11 & kLsbMask) !=
        ce.mac_counter_block(4096, 7, cb.minors, 11, 11 & kLsbMask));

  std::array<uint64_t, 8> ctrs{};
  uint64_t s0 = ce.mac_sit(8192, ctrs, 4, 4);
  ctrs[7] = 1;
  CHECK(ce.mac_sit(8192, ctrs, 4, 4) != s0);
  CHECK(ce.mac_sit(8192, ctrs, 5, 5) != ce.mac_sit(8192, ctrs, 4, 4));
}

TEST_CASE("large single-bit avalanche sweep never collides") {
  // 10^4+ trials: random words, flip one random bit, demand a new mac
  Prf prf(1234);
  std::mt19937_64 rng(99);
  int collisions = 0;
  for (uint64_t t = 0; t < 12000; ++t) {
    uint64_t w[4] = {rng(), rng(), rng(), rng()};
    uint64_t h0 = prf.hash_span(prf_domain::kMacData, w, 4, {t});
    w[rng() % 4] ^= 1ull << (rng() % 64);
    if (prf.hash_span(prf_domain::kMacData, w, 4, {t}) == h0) ++collisions;
  }
  CHECK(collisions == 0);
}

TEST_CASE("seeds separate keyspaces") {
  CryptoEngine a(1), b(2), a2(1);
  std::array<uint8_t, 64> ct{};
  CHECK(a.mac_data(ct, 0, 0, 0, 0) != b.mac_data(ct, 0, 0, 0, 0));
  CHECK(a.mac_data(ct, 0, 0, 0, 0) == a2.mac_data(ct, 0, 0, 0, 0));
  CHECK(a.otp(0, 0, 0) == a2.otp(0, 0, 0));
  CHECK(a.otp(0, 0, 0) != b.otp(0, 0, 0));
}
