#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "star/star.hpp"

using namespace star;

namespace {

EngineConfig cfg(Scheme s, AwMode aw, uint64_t mem = 1ull << 20) {
  EngineConfig c;
  c.mem_bytes = mem;
  c.scheme = s;
  c.aw = aw;
  c.cc_bytes = 4096;
  c.sit_bytes = 4096;
  return c;
}

std::array<uint8_t, 64> pt(uint64_t tag) {
  std::array<uint8_t, 64> p{};
  for (int i = 0; i < 8; ++i) p[i * 8] = uint8_t(tag >> (i * 8));
  return p;
}

uint64_t addr_of(uint64_t page, uint64_t line) {
  return (page * kCountersPerBlock + line) * kLineBytes;
}

// every cached dirty line must agree byte for byte with its home NVM copy
void check_quiescent_freshness(const Engine& e) {
  e.counter_cache().for_each([&](const CacheLine<CounterBlockLine>& l) {
    if (!l.dirty) return;
    REQUIRE(l.nvm_fresh);
    CounterBlockLine home = e.nvm().read_cb(l.id);
    CHECK(home.major == l.data.major);
    CHECK(home.minors == l.data.minors);
    CHECK(home.mac == l.data.mac);
  });
}

}  // namespace

TEST_CASE("aw-l refreshes the counter block on every write") {
  Engine e(cfg(Scheme::Star, AwMode::Low));
  CHECK(e.start_level() == -1);
  for (uint64_t i = 0; i < 50; ++i) e.write(addr_of(i % 10, i % 64), pt(i));
  CHECK(e.stats().w_data == 50);
  CHECK(e.stats().w_ahead_write == 50);
  CHECK(e.stats().w_metadata_evict == 0);
  check_quiescent_freshness(e);
  CHECK(e.ctree_root() != 0);

  // fresh-dirty eviction is a pure discard
  uint64_t before = e.stats().writes_total();
  size_t dirty_before = e.scan_dirty_ordinals().size();
  REQUIRE(e.force_evict(LineId::counter_block(0)));
  CHECK(e.stats().writes_total() == before);
  CHECK(e.scan_dirty_ordinals().size() == dirty_before - 1);
}

TEST_CASE("aw-m eviction writes back and refreshes the tree parent") {
  Engine e(cfg(Scheme::Star, AwMode::Mid));
  CHECK(e.start_level() == 0);
  e.write(addr_of(0, 0), pt(1));
  const auto* cb = e.cached_cb(0);
  REQUIRE(cb != nullptr);
  CHECK(cb->dirty);
  CHECK_FALSE(cb->nvm_fresh);  // counter level is lazy under aw-m

  REQUIRE(e.force_evict(LineId::counter_block(0)));
  CHECK(e.stats().w_metadata_evict == 1);
  CHECK(e.stats().w_ahead_write == 1);  // the parent refresh

  const auto* s1 = e.cached_sit(LineId::sit(1, 0));
  REQUIRE(s1 != nullptr);
  CHECK(s1->dirty);
  CHECK(s1->nvm_fresh);
  CHECK(s1->data.counters[0] == 1);
  // written-back child carries the live parent slot in its sidecar
  CHECK(e.nvm().read_cb(LineId::counter_block(0)).mac.lsb10 ==
        (s1->data.counters[0] & kLsbMask));
  CHECK(e.nvm().read_sit(LineId::sit(1, 0)).counters[0] == 1);
}

TEST_CASE("aw-h eviction leaves the parent stale in nvm") {
  Engine e(cfg(Scheme::Star, AwMode::High));
  CHECK(e.start_level() == int(e.geometry().levels()) - 1);
  e.write(addr_of(0, 0), pt(1));
  REQUIRE(e.force_evict(LineId::counter_block(0)));
  CHECK(e.stats().w_metadata_evict == 1);
  CHECK(e.stats().w_ahead_write == 0);
  const auto* s1 = e.cached_sit(LineId::sit(1, 0));
  REQUIRE(s1 != nullptr);
  CHECK(s1->dirty);
  CHECK_FALSE(s1->nvm_fresh);
  CHECK(s1->data.counters[0] == 1);
  CHECK(e.nvm().read_sit(LineId::sit(1, 0)).counters[0] == 0);  // stale
}

TEST_CASE("clean lines evict for free") {
  Engine e(cfg(Scheme::Star, AwMode::High));
  e.write(addr_of(0, 0), pt(1));
  REQUIRE(e.force_evict(LineId::counter_block(0)));  // now clean in nvm
  e.read(addr_of(0, 0));                             // refetch, stays clean
  uint64_t before = e.stats().writes_total();
  REQUIRE(e.force_evict(LineId::counter_block(0)));
  CHECK(e.stats().writes_total() == before);
  CHECK_FALSE(e.force_evict(LineId::counter_block(7)));  // not resident
}

TEST_CASE("minor overflow re-encrypts the page under the next major") {
  Engine e(cfg(Scheme::Star, AwMode::High));
  e.write(addr_of(0, 3), pt(999));  // a second line in the page
  for (int i = 0; i < 127; ++i) e.write(addr_of(0, 0), pt(i));
  CHECK(e.cached_cb(0)->data.minors[0] == 127);
  CHECK(e.stats().reencrypt_events == 0);

  e.write(addr_of(0, 0), pt(1000));  // the 128th write trips the rewrite
  CHECK(e.stats().reencrypt_events == 1);
  CHECK(e.stats().w_reencrypt == 65);  // 64 data lines plus the counter block
  CHECK(e.stats().r_reencrypt == 64);  // every line is read verified first
  const auto* cb = e.cached_cb(0);
  CHECK(cb->data.major == 1);
  CHECK(cb->data.minors[0] == 1);  // the triggering write landed after reset
  CHECK(cb->data.minors[3] == 0);

  // plaintext survives the major bump, including never-written lines
  CHECK(e.read(addr_of(0, 0)) == pt(1000));
  CHECK(e.read(addr_of(0, 3)) == pt(999));
  CHECK(e.read(addr_of(0, 9)) == std::array<uint8_t, 64>{});
}

TEST_CASE("sidecar window forces a parent refresh at the wrap distance") {
  Engine e(cfg(Scheme::Star, AwMode::High));
  for (int i = 0; i < 1022; ++i) {
    e.write(addr_of(0, 0), pt(i));
    REQUIRE(e.force_evict(LineId::counter_block(0)));
  }
  CHECK(e.cached_sit(LineId::sit(1, 0))->data.counters[0] == 1022);
  CHECK(e.stats().w_ahead_write == 0);  // 1022 of headroom is still safe

  e.write(addr_of(0, 0), pt(1));
  REQUIRE(e.force_evict(LineId::counter_block(0)));
  CHECK(e.stats().w_ahead_write == 1);  // 1023 would alias; flushed
  const auto* s1 = e.cached_sit(LineId::sit(1, 0));
  CHECK_FALSE(s1->dirty);
  CHECK(e.nvm().read_sit(LineId::sit(1, 0)).counters[0] == 1023);
}

TEST_CASE("stale replayed metadata is rejected on fetch") {
  Engine e(cfg(Scheme::Star, AwMode::High));
  LineId cb0 = LineId::counter_block(0);
  e.write(addr_of(0, 0), pt(1));
  REQUIRE(e.force_evict(cb0));
  CounterBlockLine v1 = e.nvm().read_cb(cb0);
  e.write(addr_of(0, 0), pt(2));
  REQUIRE(e.force_evict(cb0));

  e.nvm_mut().write_cb(cb0, v1);  // replay the older genuine version
  CHECK_THROWS_AS(e.write(addr_of(0, 0), pt(3)), IntegrityError);
}

TEST_CASE("corrupted metadata content is rejected on fetch") {
  Engine e(cfg(Scheme::Star, AwMode::High));
  LineId cb0 = LineId::counter_block(0);
  e.write(addr_of(0, 0), pt(1));
  REQUIRE(e.force_evict(cb0));
  CounterBlockLine v = e.nvm().read_cb(cb0);
  v.minors[5] ^= 1;  // sidecar intact, body corrupted
  e.nvm_mut().write_cb(cb0, v);
  CHECK_THROWS_AS(e.read(addr_of(0, 0)), IntegrityError);
}

TEST_CASE("stale replayed user data is rejected on read") {
  Engine e(cfg(Scheme::Star, AwMode::High));
  LineId u = LineId::user(0);
  e.write(addr_of(0, 0), pt(1));
  UserLine v1 = e.nvm().read_user(u);
  e.write(addr_of(0, 0), pt(2));
  e.nvm_mut().write_user(u, v1);
  CHECK_THROWS_AS(e.read(addr_of(0, 0)), IntegrityError);
}

TEST_CASE("strict flushes the whole branch on every write") {
  Engine e(cfg(Scheme::Strict, AwMode::Mid));
  uint32_t levels = e.geometry().levels();
  e.write(addr_of(0, 0), pt(1));
  CHECK(e.stats().w_data == 1);
  CHECK(e.stats().w_strict_branch == levels);
  e.write(addr_of(0, 0), pt(2));
  CHECK(e.stats().w_strict_branch == 2 * levels);
  CHECK(e.scan_dirty_ordinals().empty());
  // the flushed chain verifies on refetch after eviction
  REQUIRE(e.force_evict(LineId::counter_block(0)));
  CHECK(e.read(addr_of(0, 0)) == pt(2));
}

TEST_CASE("cache tree membership mirrors dirty flags over random churn") {
  Engine e(cfg(Scheme::Star, AwMode::Mid, 4ull << 20));
  std::mt19937_64 rng(17);
  for (int step = 0; step < 4000; ++step) {
    uint64_t page = rng() % 1024, line = rng() % 64;
    e.write(addr_of(page, line), pt(rng()));
    if (step % 7 == 0) e.force_evict(LineId::counter_block(rng() % 1024));
    if (step % 501 == 0 || step == 3999) {
      auto dirty = e.scan_dirty_ordinals();
      const CacheTreeModel* ct = e.cache_tree();
      REQUIRE(ct != nullptr);
      CHECK(ct->entry_count() == dirty.size());
      std::vector<std::map<uint64_t, uint64_t>> mirror(e.indexer().total());
      auto note = [&](const auto& l) {
        if (!l.dirty) return;
        size_t set = e.indexer().global_set(e.geometry(), l.id);
        uint64_t off = e.geometry().byte_offset(l.id);
        auto ent = ct->set_entries(set);
        REQUIRE(ent.count(off) == 1);
        CHECK(ent.at(off) == l.data.mac.mac54);
        mirror[set][off] = l.data.mac.mac54;
      };
      e.counter_cache().for_each(note);
      e.sit_cache().for_each(note);
      CHECK(CacheTreeModel::rebuild(e.crypto().prf(), mirror) ==
            e.ctree_root());
    }
  }
}

TEST_CASE("identical seeds and traffic give identical state") {
  auto drive = [](Engine& e) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 500; ++i) e.write(addr_of(rng() % 64, rng() % 64), pt(i));
  };
  Engine a(cfg(Scheme::Star, AwMode::Mid)), b(cfg(Scheme::Star, AwMode::Mid));
  drive(a);
  drive(b);
  CHECK(a.ctree_root() == b.ctree_root());
  CHECK(a.stats().writes_total() == b.stats().writes_total());
  CHECK(a.nvm().materialized_cbs() == b.nvm().materialized_cbs());
  CHECK(a.chip_state().root_counters == b.chip_state().root_counters);
}

TEST_CASE("engine rejects addresses past the end of memory") {
  Engine e(cfg(Scheme::Star, AwMode::Mid));
  CHECK_THROWS_AS(e.write(1ull << 20, pt(0)), std::out_of_range);
  CHECK_THROWS_AS(e.read(1ull << 20), std::out_of_range);
}
