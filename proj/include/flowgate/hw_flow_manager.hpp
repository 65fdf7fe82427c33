#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowgate/cuckoo_table.hpp"
#include "flowgate/errors.hpp"
#include "flowgate/flow_action.hpp"
#include "flowgate/flow_key.hpp"
#include "flowgate/flow_table.hpp"
#include "flowgate/sim_time.hpp"

namespace flowgate {

struct HwConfig {
  std::size_t capacity{4096};
  std::size_t buckets_per_slot{4};
  std::size_t max_kicks{32};
  double learn_rate_per_sec{1000.0};
  double learn_burst{100.0};
  double degrade_threshold{0.9};
  double degrade_floor{0.1};
  SimTime program_latency{SimTime::from_micros(10)};
  SimTime hw_idle_timeout{SimTime::from_seconds(30)};
  std::uint64_t hash_seed1{0x9AE16A3B2F90404FULL};
  std::uint64_t hash_seed2{0xC3A5C85C97CB3127ULL};
  std::uint32_t streams{1};
  std::uint16_t ports{2};

  static HwConfig desk() { return {}; }

  // NT200A02 adapter: 140M flows, 1M flows/s
  // learning on a single stream and 3M flows/s across multiple streams.
  static HwConfig nt200a02(std::uint32_t streams = 1) {
    HwConfig c;
    c.capacity = 140'000'000;
    c.streams = streams;
    c.learn_rate_per_sec = streams > 1 ? 3'000'000.0 : 1'000'000.0;
    c.learn_burst = c.learn_rate_per_sec / 10.0;
    return c;
  }

  // Shrinks table size and learning rate by the scenario scale factor.
  HwConfig scaled(double factor) const {
    HwConfig c = *this;
    c.capacity = std::max<std::size_t>(
        buckets_per_slot, static_cast<std::size_t>(std::llround(static_cast<double>(capacity) * factor)));
    c.learn_rate_per_sec = learn_rate_per_sec * factor;
    c.learn_burst = std::max(1.0, learn_burst * factor);
    return c;
  }

  void validate() const {
    if (capacity == 0) throw ConfigError("hw.capacity", "must be > 0");
    if (buckets_per_slot == 0) throw ConfigError("hw.buckets_per_slot", "must be > 0");
    if (!(learn_rate_per_sec > 0)) throw ConfigError("hw.learn_rate_per_sec", "must be > 0");
    if (learn_burst < 1) throw ConfigError("hw.learn_burst", "must be >= 1");
    if (!(degrade_threshold > 0 && degrade_threshold < 1))
      throw ConfigError("hw.degrade_threshold", "must be in (0,1)");
    if (!(degrade_floor > 0 && degrade_floor <= 1))
      throw ConfigError("hw.degrade_floor", "must be in (0,1]");
    if (program_latency.nanos == 0) throw ConfigError("hw.program_latency_us", "must be > 0");
    if (hw_idle_timeout.nanos == 0) throw ConfigError("hw.idle_timeout_s", "must be > 0");
    if (hash_seed1 == hash_seed2) throw ConfigError("hw.hash_seeds", "the two seeds must differ");
    if (ports == 0) throw ConfigError("hw.ports", "must be >= 1");
  }

  bool valid_egress(std::uint16_t port) const { return port == kAnalyticsPort || port < ports; }
};

struct HwFlowEntry {
  FlowKey key;
  FlowId flow_id;
  FlowAction action;
  std::uint64_t hw_packets{0};
  std::uint64_t hw_bytes{0};
  SimTime last_seen;
  SimTime programmed_at;
};

struct ProgramRequest {
  FlowKey key;
  FlowId flow_id;
  FlowAction action;
  SimTime submitted_at;
};

enum class PurgeReason : std::uint8_t { IdleTimeout, Evicted };

struct FlowEvent {
  enum class Kind : std::uint8_t { Purged };

  Kind kind{Kind::Purged};
  FlowId flow_id;
  FlowKey key;
  std::uint64_t hw_packets{0};
  std::uint64_t hw_bytes{0};
  SimTime last_seen;  // last packet handled in hardware
  SimTime purged_at;
  PurgeReason reason{PurgeReason::IdleTimeout};
};

struct HwDecision {
  enum class Kind : std::uint8_t { ToHost, HandledPass, HandledDrop };

  Kind kind{Kind::ToHost};
  FlowId flow_id;  // ToHost only; always zero for unknown/unprogrammed flows
  std::uint16_t egress_port{0};

  bool handled() const noexcept { return kind != Kind::ToHost; }
};

struct HwTickResult {
  std::size_t programmed{0};
  std::vector<FlowEvent> events;
  std::vector<FlowId> programmed_ids;
  std::vector<FlowId> rejected_ids;  // refused with table full
};

struct HwStats {
  std::uint64_t inserts{0};
  std::uint64_t purges{0};
  std::uint64_t duplicate_programs{0};
  std::uint64_t table_full_rejects{0};
  std::uint64_t handled_packets{0};
  std::uint64_t missed_packets{0};
};

class ZeroFlowId : public ProtocolError {
 public:
  ZeroFlowId() : ProtocolError("program request with zero flow id") {}
};

// Linear ramp: 1 up to `threshold`, falling to `floor` at a full table.
inline double degrade_multiplier(double occupancy, double threshold, double floor) {
  if (occupancy <= threshold) return 1.0;
  const double f = std::min(occupancy, 1.0);
  return 1.0 - (1.0 - floor) * (f - threshold) / (1.0 - threshold);
}

// Emulated SmartNIC flow manager: cuckoo table, token-bucket learning rate
// with high-occupancy degradation, deferred programming queue, idle purge.
class HwFlowManager {
 public:
  explicit HwFlowManager(HwConfig cfg)
      : cfg_((cfg.validate(), cfg)),
        table_(CuckooConfig{cfg.capacity, cfg.buckets_per_slot, cfg.max_kicks, cfg.hash_seed1,
                            cfg.hash_seed2}) {}

  // Never blocks; the request waits for program_latency and a learning token.
  void submit_program_request(const ProgramRequest& req) {
    if (req.flow_id.is_zero()) throw ZeroFlowId{};
    if (!req.action.offloadable())
      throw std::invalid_argument("hardware entries cannot forward to host");
    if (req.action.kind == FlowAction::Kind::PassTo && !cfg_.valid_egress(req.action.egress_port))
      throw std::invalid_argument("egress port " + std::to_string(req.action.egress_port) +
                                  " is not configured");
    queue_.push_back(req);
  }

  HwTickResult tick(SimTime now) {
    if (now < last_tick_) throw std::logic_error("hw_tick: time went backwards");
    HwTickResult out;

    const std::uint64_t elapsed = (now - last_tick_).nanos;
    last_tick_ = now;
    const double mult = degrade_multiplier(occupancy_fraction(), cfg_.degrade_threshold, cfg_.degrade_floor);
    tokens_ = std::min(cfg_.learn_burst,
                       tokens_ + static_cast<double>(elapsed) * cfg_.learn_rate_per_sec * mult / 1e9);

    while (!queue_.empty()) {
      const auto& req = queue_.front();
      if (req.submitted_at + cfg_.program_latency > now) break;
      if (table_.lookup(req.key) != nullptr) {
        ++stats_.duplicate_programs;
        queue_.pop_front();
        continue;
      }
      if (tokens_ < 1.0) break;
      tokens_ -= 1.0;
      HwFlowEntry entry{req.key, req.flow_id, req.action, 0, 0, now, now};
      if (table_.insert(req.key, entry) == InsertResult::Inserted) {
        ++stats_.inserts;
        ++out.programmed;
        out.programmed_ids.push_back(req.flow_id);
        expiry_.push({now + cfg_.hw_idle_timeout, req.key, req.flow_id});
      } else {
        ++stats_.table_full_rejects;
        out.rejected_ids.push_back(req.flow_id);
      }
      queue_.pop_front();
    }

    while (!expiry_.empty() && expiry_.top().deadline < now) {
      const auto due = expiry_.top();
      expiry_.pop();
      auto* e = table_.lookup(due.key);
      if (e == nullptr || e->flow_id != due.flow_id) continue;
      if (now - e->last_seen > cfg_.hw_idle_timeout) {
        out.events.push_back(purge(due.key, now, PurgeReason::IdleTimeout));
      } else {
        expiry_.push({e->last_seen + cfg_.hw_idle_timeout, due.key, due.flow_id});
      }
    }
    return out;
  }

  HwDecision process_packet(const Packet& pkt, SimTime now) {
    auto* e = table_.lookup(pkt.key);
    if (e == nullptr) {
      ++stats_.missed_packets;
      return {HwDecision::Kind::ToHost, FlowId{}, 0};
    }
    ++e->hw_packets;
    e->hw_bytes += pkt.wire_len;
    if (now > e->last_seen) e->last_seen = now;
    ++stats_.handled_packets;
    if (e->action.kind == FlowAction::Kind::Drop) return {HwDecision::Kind::HandledDrop, FlowId{}, 0};
    return {HwDecision::Kind::HandledPass, FlowId{}, e->action.egress_port};
  }

  // Purges every live entry (end of run). Ordered by flow id.
  std::vector<FlowEvent> drain(SimTime now) {
    std::vector<FlowKey> keys;
    table_.for_each([&](const FlowKey& k, const HwFlowEntry&) { keys.push_back(k); });
    std::vector<FlowEvent> out;
    out.reserve(keys.size());
    for (const auto& k : keys) out.push_back(purge(k, now, PurgeReason::Evicted));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.flow_id < b.flow_id; });
    expiry_ = {};
    return out;
  }

  const HwFlowEntry* lookup(const FlowKey& key) const { return table_.lookup(key); }

  template <class F>
  void for_each_entry(F&& f) const {
    table_.for_each([&](const FlowKey&, const HwFlowEntry& e) { f(e); });
  }

  std::size_t occupancy() const noexcept { return table_.size(); }
  double occupancy_fraction() const noexcept { return table_.load_factor(); }
  std::size_t queue_depth() const noexcept { return queue_.size(); }
  double tokens() const noexcept { return tokens_; }
  const HwStats& stats() const noexcept { return stats_; }
  const HwConfig& config() const noexcept { return cfg_; }

 private:
  struct Deadline {
    SimTime deadline;
    FlowKey key;
    FlowId flow_id;
    bool operator>(const Deadline& o) const {
      if (deadline != o.deadline) return deadline > o.deadline;
      return flow_id > o.flow_id;
    }
  };

  FlowEvent purge(const FlowKey& key, SimTime now, PurgeReason reason) {
    auto entry = table_.remove(key);
    ++stats_.purges;
    return {FlowEvent::Kind::Purged, entry->flow_id, key,        entry->hw_packets,
            entry->hw_bytes,     entry->last_seen, now, reason};
  }

  HwConfig cfg_;
  CuckooTable<FlowKey, HwFlowEntry> table_;
  std::deque<ProgramRequest> queue_;
  std::priority_queue<Deadline, std::vector<Deadline>, std::greater<>> expiry_;
  double tokens_{0.0};
  SimTime last_tick_{};
  HwStats stats_;
};

}  // namespace flowgate
