#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

#include "flowgate/flow_key.hpp"

namespace flowgate {

// Default hasher: any key type with a `hash_flow_key`-style seeded hash.
template <class Key>
struct SeededHash;

template <>
struct SeededHash<FlowKey> {
  std::uint64_t operator()(const FlowKey& k, std::uint64_t seed) const noexcept {
    return hash_flow_key(k, seed);
  }
};

struct CuckooConfig {
  std::size_t capacity{4096};
  std::size_t buckets_per_slot{4};
  std::size_t max_kicks{32};
  std::uint64_t seed1{0x9AE16A3B2F90404FULL};
  std::uint64_t seed2{0xC3A5C85C97CB3127ULL};
};

enum class InsertResult : std::uint8_t { Inserted, Full };

// Two-choice bucketized cuckoo hash. Each key lives in one bucket of one of
// its two candidate slots, so a lookup touches at most two slots. Inserts
// search breadth-first for the shortest displacement chain ending at a free
// bucket, at most max_kicks hops long. Nothing moves unless a chain exists,
// so a Full result leaves the table exactly as before.
template <class Key, class Value, class Hasher = SeededHash<Key>>
class CuckooTable {
 public:
  explicit CuckooTable(CuckooConfig cfg = {}, Hasher hasher = {})
      : cfg_(cfg), hasher_(std::move(hasher)) {
    if (cfg_.capacity == 0) throw std::invalid_argument("cuckoo capacity must be > 0");
    if (cfg_.buckets_per_slot == 0) throw std::invalid_argument("buckets_per_slot must be > 0");
    if (cfg_.seed1 == cfg_.seed2) throw std::invalid_argument("cuckoo hash seeds must differ");
    slots_ = (cfg_.capacity + cfg_.buckets_per_slot - 1) / cfg_.buckets_per_slot;
    buckets_.resize(slots_ * cfg_.buckets_per_slot);
  }

  // Precondition: key is not already present.
  InsertResult insert(const Key& key, Value value) {
    if (size_ >= cfg_.capacity) return InsertResult::Full;
    const auto [s1, s2] = candidate_slots(key);
    for (std::size_t s : {s1, s2}) {
      if (auto* b = free_bucket(s)) {
        b->emplace(key, std::move(value));
        ++size_;
        return InsertResult::Inserted;
      }
    }

    const auto path = find_path(s1, s2);
    if (path.empty()) return InsertResult::Full;
    // Shift items one hop along the path, starting at the free end.
    auto* hole = free_bucket(path.back().slot);
    for (std::size_t i = path.size() - 1; i > 0; --i) {
      auto& src = buckets_[path[i - 1].slot * cfg_.buckets_per_slot + path[i].from_bucket];
      *hole = std::move(src);
      src.reset();
      hole = &src;
    }
    hole->emplace(key, std::move(value));
    ++size_;
    return InsertResult::Inserted;
  }

  Value* lookup(const Key& key) {
    auto* b = find_bucket(key);
    return b ? &(*b)->second : nullptr;
  }
  const Value* lookup(const Key& key) const {
    return const_cast<CuckooTable*>(this)->lookup(key);
  }

  std::optional<Value> remove(const Key& key) {
    auto* b = find_bucket(key);
    if (b == nullptr) return std::nullopt;
    std::optional<Value> out{std::move((*b)->second)};
    b->reset();
    --size_;
    return out;
  }

  template <class F>
  void for_each(F&& f) const {
    for (const auto& b : buckets_)
      if (b) f(b->first, b->second);
  }

  std::pair<std::size_t, std::size_t> candidate_slots(const Key& key) const {
    return {static_cast<std::size_t>(hasher_(key, cfg_.seed1) % slots_),
            static_cast<std::size_t>(hasher_(key, cfg_.seed2) % slots_)};
  }

  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return cfg_.capacity; }
  std::size_t slot_count() const noexcept { return slots_; }
  double load_factor() const noexcept {
    return static_cast<double>(size_) / static_cast<double>(cfg_.capacity);
  }
  const CuckooConfig& config() const noexcept { return cfg_; }

 private:
  using Item = std::pair<Key, Value>;

  std::optional<Item>* free_bucket(std::size_t slot) {
    auto* base = &buckets_[slot * cfg_.buckets_per_slot];
    for (std::size_t i = 0; i < cfg_.buckets_per_slot; ++i)
      if (!base[i]) return &base[i];
    return nullptr;
  }

  std::optional<Item>* find_bucket(const Key& key) {
    const auto [s1, s2] = candidate_slots(key);
    for (std::size_t s : {s1, s2}) {
      auto* base = &buckets_[s * cfg_.buckets_per_slot];
      for (std::size_t i = 0; i < cfg_.buckets_per_slot; ++i)
        if (base[i] && base[i]->first == key) return &base[i];
    }
    return nullptr;
  }

  struct PathNode {
    std::size_t slot;
    std::size_t parent;
    std::size_t from_bucket;  // bucket in the parent slot whose item moves here
    std::size_t depth;
  };

  // Returns root-to-leaf nodes, where the leaf slot has a free bucket, or an
  // empty vector when no chain within max_kicks exists.
  std::vector<PathNode> find_path(std::size_t s1, std::size_t s2) const {
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    const std::size_t node_budget = std::max<std::size_t>(64, cfg_.max_kicks * cfg_.buckets_per_slot * 8);
    std::vector<PathNode> nodes;
    std::unordered_set<std::size_t> seen;
    nodes.push_back({s1, kNone, 0, 0});
    seen.insert(s1);
    if (seen.insert(s2).second) nodes.push_back({s2, kNone, 0, 0});
    for (std::size_t head = 0; head < nodes.size(); ++head) {
      const PathNode node = nodes[head];
      if (node.depth > 0 && has_free(node.slot)) {
        std::vector<PathNode> path;
        for (std::size_t i = head; i != kNone; i = nodes[i].parent) path.push_back(nodes[i]);
        return {path.rbegin(), path.rend()};
      }
      if (node.depth == cfg_.max_kicks) continue;
      for (std::size_t b = 0; b < cfg_.buckets_per_slot && nodes.size() < node_budget; ++b) {
        const auto& item = buckets_[node.slot * cfg_.buckets_per_slot + b];
        const auto [v1, v2] = candidate_slots(item->first);
        const std::size_t alt = (v1 == node.slot) ? v2 : v1;
        if (seen.insert(alt).second) nodes.push_back({alt, head, b, node.depth + 1});
      }
    }
    return {};
  }

  bool has_free(std::size_t slot) const {
    const auto* base = &buckets_[slot * cfg_.buckets_per_slot];
    for (std::size_t i = 0; i < cfg_.buckets_per_slot; ++i)
      if (!base[i]) return true;
    return false;
  }

  CuckooConfig cfg_;
  Hasher hasher_;
  std::size_t slots_{0};
  std::size_t size_{0};
  std::vector<std::optional<Item>> buckets_;
};

}  // namespace flowgate
