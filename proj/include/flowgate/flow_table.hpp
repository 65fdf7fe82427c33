#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <list>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "flowgate/dpi.hpp"
#include "flowgate/errors.hpp"
#include "flowgate/flow_action.hpp"
#include "flowgate/flow_key.hpp"
#include "flowgate/sim_time.hpp"

namespace flowgate {

// Handle binding a hardware entry to its host twin. Zero is reserved for
// "first seen / unclassified" and is never allocated.
struct FlowId {
  std::uint64_t raw{0};

  constexpr bool is_zero() const noexcept { return raw == 0; }
  friend constexpr auto operator<=>(const FlowId&, const FlowId&) = default;
};

enum class OffloadState : std::uint8_t { NotEligible, Eligible, Requested, Programmed, HwPurged };

inline constexpr std::string_view to_string(OffloadState s) {
  switch (s) {
    case OffloadState::NotEligible: return "NotEligible";
    case OffloadState::Eligible: return "Eligible";
    case OffloadState::Requested: return "Requested";
    case OffloadState::Programmed: return "Programmed";
    case OffloadState::HwPurged: return "HwPurged";
  }
  return "?";
}

struct HostFlowEntry {
  FlowKey key;
  FlowId flow_id;
  std::uint64_t sw_packets{0};
  std::uint64_t sw_bytes{0};
  std::uint64_t hw_packets{0};
  std::uint64_t hw_bytes{0};
  SimTime first_seen;
  SimTime last_seen;
  std::unique_ptr<DpiState> dpi;  // null when DPI is off or a verdict was reached
  DpiVerdict l7;
  OffloadState offload_state{OffloadState::NotEligible};
  FlowAction action;
  // The hardware refused the program request (table full); the flow went
  // back to software ownership.
  bool hw_rejected{false};

  // Offload state only ever moves forward.
  void advance(OffloadState next) {
    if (next <= offload_state)
      throw std::logic_error("offload state cannot move from " +
                             std::string(to_string(offload_state)) + " to " +
                             std::string(to_string(next)));
    offload_state = next;
  }

  // Expiry by the host idle scan applies unless the hardware owns the flow.
  bool host_owned() const noexcept {
    return hw_rejected || (offload_state != OffloadState::Requested &&
                           offload_state != OffloadState::Programmed);
  }

  std::uint64_t total_packets() const noexcept { return sw_packets + hw_packets; }
  std::uint64_t total_bytes() const noexcept { return sw_bytes + hw_bytes; }

 private:
  friend class FlowTable;
  std::list<FlowKey>::iterator idle_pos_{};
  bool in_idle_list_{false};
};

enum class UpsertStatus : std::uint8_t { Found, Inserted, TableFull };

struct UpsertResult {
  HostFlowEntry* entry{nullptr};
  UpsertStatus status{UpsertStatus::TableFull};

  bool is_new() const noexcept { return status == UpsertStatus::Inserted; }
  bool table_full() const noexcept { return status == UpsertStatus::TableFull; }
};

class IdExhausted : public Error {
 public:
  IdExhausted() : Error("flow id space exhausted") {}
};

// Private per-worker flow cache. Host-owned entries are kept in idle order so
// an expiry scan only visits entries that are actually due.
class FlowTable {
 public:
  static constexpr SimTime kDefaultIdleTimeout = SimTime::from_seconds(30);
  static constexpr std::size_t kDefaultMaxEntries = 1u << 20;

  // Ids are handed out as first_id, first_id + id_stride, ... so tables owned
  // by different workers never collide.
  explicit FlowTable(SimTime idle_timeout = kDefaultIdleTimeout,
                     std::size_t max_entries = kDefaultMaxEntries, std::uint64_t first_id = 1,
                     std::uint64_t id_stride = 1)
      : idle_timeout_(idle_timeout),
        max_entries_(max_entries),
        next_id_(first_id),
        id_stride_(id_stride) {
    if (first_id == 0) throw std::invalid_argument("first flow id must be nonzero");
    if (id_stride == 0) throw std::invalid_argument("flow id stride must be nonzero");
  }

  FlowTable(const FlowTable&) = delete;
  FlowTable& operator=(const FlowTable&) = delete;
  FlowTable(FlowTable&&) = default;
  FlowTable& operator=(FlowTable&&) = default;

  UpsertResult upsert(const FlowKey& key, SimTime ts) {
    if (auto it = entries_.find(key); it != entries_.end()) return {&it->second, UpsertStatus::Found};
    if (entries_.size() >= max_entries_) return {nullptr, UpsertStatus::TableFull};
    auto [it, inserted] = entries_.try_emplace(key);
    auto& e = it->second;
    e.key = key;
    e.first_seen = ts;
    e.last_seen = ts;
    link_idle(e);
    return {&e, UpsertStatus::Inserted};
  }

  HostFlowEntry* find(const FlowKey& key) {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }
  const HostFlowEntry* find(const FlowKey& key) const {
    return const_cast<FlowTable*>(this)->find(key);
  }

  void touch(HostFlowEntry& e, const Packet& pkt) {
    ++e.sw_packets;
    e.sw_bytes += pkt.wire_len;
    if (pkt.ts > e.last_seen) e.last_seen = pkt.ts;
    if (e.in_idle_list_) {
      idle_order_.erase(e.idle_pos_);
      e.in_idle_list_ = false;
      link_idle(e);
    }
  }

  FlowId allocate_flowid(HostFlowEntry& e) {
    if (!e.flow_id.is_zero()) throw std::logic_error("flow already has an id");
    if (next_id_ == 0 || next_id_ > std::numeric_limits<std::uint64_t>::max() - id_stride_)
      throw IdExhausted{};
    const FlowId id{next_id_};
    next_id_ += id_stride_;
    e.flow_id = id;
    id_index_.emplace(id.raw, e.key);
    return id;
  }

  // nullptr when the id is not live. Zero ids are a protocol violation.
  HostFlowEntry* resolve_flowid(FlowId id) {
    if (id.is_zero()) throw ProtocolError("resolve_flowid: zero flow id");
    auto it = id_index_.find(id.raw);
    if (it == id_index_.end()) return nullptr;
    return find(it->second);
  }
  const HostFlowEntry* resolve_flowid(FlowId id) const {
    return const_cast<FlowTable*>(this)->resolve_flowid(id);
  }

  // Moves ownership between host and hardware; hardware-owned entries are
  // invisible to expire_scan.
  void sync_ownership(HostFlowEntry& e) {
    if (e.host_owned() && !e.in_idle_list_) {
      link_idle(e);
    } else if (!e.host_owned() && e.in_idle_list_) {
      idle_order_.erase(e.idle_pos_);
      e.in_idle_list_ = false;
    }
  }

  std::vector<HostFlowEntry> expire_scan(SimTime now) {
    std::vector<HostFlowEntry> expired;
    while (!idle_order_.empty()) {
      auto it = entries_.find(idle_order_.front());
      if (now - it->second.last_seen <= idle_timeout_) break;
      expired.push_back(take(it));
    }
    return expired;
  }

  std::optional<HostFlowEntry> release(const FlowKey& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return take(it);
  }

  // Empties the table; entries come back ordered by flow id, then key.
  std::vector<HostFlowEntry> drain() {
    std::vector<HostFlowEntry> out;
    out.reserve(entries_.size());
    while (!entries_.empty()) out.push_back(take(entries_.begin()));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      if (a.flow_id != b.flow_id) return a.flow_id < b.flow_id;
      return a.key < b.key;
    });
    return out;
  }

  template <class F>
  void for_each(F&& f) const {
    for (const auto& [k, e] : entries_) f(e);
  }

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t id_index_size() const noexcept { return id_index_.size(); }
  std::size_t max_entries() const noexcept { return max_entries_; }
  SimTime idle_timeout() const noexcept { return idle_timeout_; }

 private:
  using EntryMap = std::unordered_map<FlowKey, HostFlowEntry, FlowKeyHash>;

  // Keeps idle_order_ sorted by last_seen; appends in the common case.
  void link_idle(HostFlowEntry& e) {
    auto pos = idle_order_.end();
    while (pos != idle_order_.begin()) {
      auto prev = std::prev(pos);
      if (entries_.find(*prev)->second.last_seen <= e.last_seen) break;
      pos = prev;
    }
    e.idle_pos_ = idle_order_.insert(pos, e.key);
    e.in_idle_list_ = true;
  }

  HostFlowEntry take(EntryMap::iterator it) {
    auto& e = it->second;
    if (e.in_idle_list_) idle_order_.erase(e.idle_pos_);
    e.in_idle_list_ = false;
    if (!e.flow_id.is_zero()) id_index_.erase(e.flow_id.raw);
    HostFlowEntry out = std::move(e);
    entries_.erase(it);
    return out;
  }

  SimTime idle_timeout_;
  std::size_t max_entries_;
  std::uint64_t next_id_;
  std::uint64_t id_stride_;
  EntryMap entries_;
  std::unordered_map<std::uint64_t, FlowKey> id_index_;
  std::list<FlowKey> idle_order_;
};

}  // namespace flowgate
