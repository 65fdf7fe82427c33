#include <gtest/gtest.h>

#include <map>
#include <random>
#include <vector>

#include "flowgate/cuckoo_table.hpp"
#include "test_util.hpp"

using namespace flowgate;
using flowgate::test_support::random_key;
using flowgate::test_support::tcp_key;

using Table = CuckooTable<FlowKey, std::uint64_t>;

TEST(Cuckoo, InsertThenLookup) {
  Table t;
  EXPECT_EQ(t.insert(tcp_key(1), 7), InsertResult::Inserted);
  ASSERT_NE(t.lookup(tcp_key(1)), nullptr);
  EXPECT_EQ(*t.lookup(tcp_key(1)), 7u);
  EXPECT_EQ(t.lookup(tcp_key(2)), nullptr);
}

TEST(Cuckoo, RemoveTwice) {
  Table t;
  t.insert(tcp_key(1), 7);
  EXPECT_EQ(t.remove(tcp_key(1)), 7u);
  EXPECT_FALSE(t.remove(tcp_key(1)).has_value());
  EXPECT_EQ(t.size(), 0u);
}

TEST(Cuckoo, OccupancyCountsInsertsMinusRemoves) {
  Table t;
  for (std::uint32_t i = 0; i < 100; ++i) ASSERT_EQ(t.insert(tcp_key(i), i), InsertResult::Inserted);
  for (std::uint32_t i = 0; i < 40; ++i) ASSERT_TRUE(t.remove(tcp_key(i * 2)).has_value());
  EXPECT_EQ(t.size(), 60u);
}

TEST(Cuckoo, ToyTableFillUntilFullKeepsEverythingFindable) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Table t(CuckooConfig{8, 4, 32, seed, seed + 1000});
    std::map<FlowKey, std::uint64_t> ref;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 64; ++i) {
      const auto k = random_key(rng);
      if (ref.contains(k)) continue;
      if (t.insert(k, i) == InsertResult::Inserted) ref[k] = i;
      for (const auto& [rk, rv] : ref) {
        ASSERT_NE(t.lookup(rk), nullptr);
        ASSERT_EQ(*t.lookup(rk), rv);
      }
    }
    EXPECT_EQ(t.size(), ref.size());
    EXPECT_LE(t.size(), 8u);
  }
}

TEST(Cuckoo, EveryKeyLivesInOneOfItsTwoSlots) {
  Table t;
  std::mt19937_64 rng(4);
  for (int i = 0; i < 3500; ++i) t.insert(random_key(rng), i);
  std::size_t seen = 0;
  t.for_each([&](const FlowKey& k, const std::uint64_t&) {
    ++seen;
    EXPECT_NE(t.lookup(k), nullptr);
  });
  EXPECT_EQ(seen, t.size());
}

TEST(Cuckoo, RandomOpsMatchReferenceMap) {
  Table t;
  std::map<FlowKey, std::uint64_t> ref;
  std::mt19937_64 rng(123);
  std::vector<FlowKey> pool;
  for (int i = 0; i < 6000; ++i) pool.push_back(random_key(rng));
  for (int op = 0; op < 100'000; ++op) {
    const auto& k = pool[rng() % pool.size()];
    switch (rng() % 3) {
      case 0:
        if (!ref.contains(k) && t.insert(k, op) == InsertResult::Inserted) ref[k] = op;
        break;
      case 1: {
        const auto* v = t.lookup(k);
        auto it = ref.find(k);
        ASSERT_EQ(v != nullptr, it != ref.end());
        if (v) {
          ASSERT_EQ(*v, it->second);
        }
        break;
      }
      default: {
        const auto v = t.remove(k);
        auto it = ref.find(k);
        ASSERT_EQ(v.has_value(), it != ref.end());
        if (v) {
          ASSERT_EQ(*v, it->second);
          ref.erase(it);
        }
      }
    }
    ASSERT_EQ(t.size(), ref.size());
  }
}

TEST(Cuckoo, ReachesHighLoadBeforeFirstFull) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Table t(CuckooConfig{4096, 4, 32, seed * 7 + 1, seed * 13 + 2});
    std::mt19937_64 rng(seed);
    while (t.insert(random_key(rng), 0) == InsertResult::Inserted) {
    }
    EXPECT_GE(t.load_factor(), 0.9) << "seed " << seed;
  }
}

TEST(Cuckoo, FullAtCapacity) {
  Table t(CuckooConfig{4, 4, 32, 1, 2});
  for (std::uint32_t i = 0; i < 4; ++i) t.insert(tcp_key(i), i);
  EXPECT_EQ(t.insert(tcp_key(99), 0), InsertResult::Full);
  EXPECT_EQ(t.size(), 4u);
}
