#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "flowgate/dpi.hpp"
#include "flowgate/errors.hpp"
#include "flowgate/export.hpp"
#include "flowgate/flow_action.hpp"
#include "flowgate/flow_key.hpp"
#include "flowgate/flow_table.hpp"
#include "flowgate/hw_flow_manager.hpp"
#include "flowgate/sim_time.hpp"

namespace flowgate {

enum class ProbeMode : std::uint8_t { Passive, InlineUni, InlineBi };

inline constexpr std::string_view to_string(ProbeMode m) {
  switch (m) {
    case ProbeMode::Passive: return "passive";
    case ProbeMode::InlineUni: return "inline-uni";
    case ProbeMode::InlineBi: return "inline-bi";
  }
  return "passive";
}

inline std::optional<ProbeMode> probe_mode_from_string(std::string_view s) {
  for (auto m : {ProbeMode::Passive, ProbeMode::InlineUni, ProbeMode::InlineBi})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

inline bool is_inline(ProbeMode m) { return m != ProbeMode::Passive; }

// Every present field must match. An empty match is a catch-all.
struct PolicyMatch {
  std::optional<std::string> l7;
  std::optional<std::uint8_t> proto;
  std::optional<std::uint16_t> src_port;
  std::optional<std::uint16_t> dst_port;

  // L7 conditions never match a flow whose protocol is still being detected.
  bool matches(const HostFlowEntry& e) const {
    if (l7 && (!e.l7.final() || e.l7.label() != *l7)) return false;
    if (proto && e.key.proto != *proto) return false;
    if (src_port && e.key.src_port != *src_port) return false;
    if (dst_port && e.key.dst_port != *dst_port) return false;
    return true;
  }
};

struct PolicyRule {
  PolicyMatch match;
  FlowAction action;
  int priority{0};
};

struct ProbeConfig {
  ProbeMode mode{ProbeMode::Passive};
  std::uint32_t workers{4};
  std::size_t host_queue_depth{4096};
  double host_budget_units_per_tick{1000.0};
  double cost_base{1.0};
  double cost_dpi{3.0};
  // Extra units charged when a packet creates a host flow entry.
  double cost_new_flow{0.0};
  // Host cache model: a worker keeps `cache_flows` flow entries warm. With N
  // flows touched by that worker within the host idle timeout, a packet
  // misses with probability 1 - cache/N and pays `cost_cache_miss` extra
  // units. Zero disables the model.
  std::size_t cache_flows{0};
  double cost_cache_miss{0.0};
  bool dpi_enabled{true};
  bool offload_enabled{true};
  std::vector<PolicyRule> policy;
  std::size_t export_batch{64};
  SimTime tick{SimTime::from_millis(1)};
  SimTime host_idle_timeout{FlowTable::kDefaultIdleTimeout};
  std::size_t max_entries{FlowTable::kDefaultMaxEntries};

  void validate(const HwConfig& hw) const {
    if (workers < 1) throw ConfigError("probe.workers", "must be >= 1");
    if (host_queue_depth < 1) throw ConfigError("probe.host_queue_depth", "must be >= 1");
    if (!(host_budget_units_per_tick >= 0))
      throw ConfigError("probe.host_budget_units_per_tick", "must be >= 0");
    if (!(cost_base >= 1)) throw ConfigError("probe.cost_base", "must be >= 1");
    if (!(cost_dpi >= cost_base)) throw ConfigError("probe.cost_dpi", "must be >= cost_base");
    if (!(cost_new_flow >= 0)) throw ConfigError("probe.cost_new_flow", "must be >= 0");
    if (!(cost_cache_miss >= 0)) throw ConfigError("probe.cost_cache_miss", "must be >= 0");
    if (export_batch < 1) throw ConfigError("probe.export_batch", "must be >= 1");
    if (tick.nanos == 0) throw ConfigError("probe.tick_us", "must be > 0");
    if (host_idle_timeout.nanos == 0) throw ConfigError("probe.idle_timeout_s", "must be > 0");
    if (max_entries < 1) throw ConfigError("probe.max_entries", "must be >= 1");
    for (const auto& r : policy) {
      if (r.action.kind == FlowAction::Kind::PassTo && r.action.egress_port != kPeerPort &&
          !hw.valid_egress(r.action.egress_port))
        throw ConfigError("probe.policy.action",
                          "egress port " + std::to_string(r.action.egress_port) + " not configured");
    }
  }
};

inline std::size_t rss_dispatch(const FlowKey& key, std::size_t workers) {
  return workers <= 1 ? 0 : static_cast<std::size_t>(rss::hash_key(key) % workers);
}

inline std::uint16_t bridge_peer(std::uint16_t ingress_port) {
  return static_cast<std::uint16_t>(ingress_port ^ 1u);
}

// Highest priority matching rule wins; equal priorities keep list order.
// Passive deployments never forward, so pass/drop collapse to analytics-only
// counting. `ForwardToHost` keeps the flow in software in every mode.
inline FlowAction evaluate_policy(std::span<const PolicyRule> policy, const HostFlowEntry& entry,
                                  ProbeMode mode, std::uint16_t ingress_port) {
  const PolicyRule* best = nullptr;
  for (const auto& rule : policy) {
    if (!rule.match.matches(entry)) continue;
    if (best == nullptr || rule.priority > best->priority) best = &rule;
  }
  FlowAction action = best ? best->action : FlowAction::pass_to(kPeerPort);
  if (action.kind == FlowAction::Kind::ForwardToHost) return action;
  if (mode == ProbeMode::Passive) return FlowAction::pass_to(kAnalyticsPort);
  if (action.kind == FlowAction::Kind::PassTo && action.egress_port == kPeerPort)
    action.egress_port = bridge_peer(ingress_port);
  return action;
}

enum class Disposition : std::uint8_t { Enqueued, DroppedQueueFull, HandledByHw };

// Counters owned by the probe. The runner adds generation totals and series.
struct ProbeCounters {
  std::uint64_t host_processed_packets{0};
  std::uint64_t hw_handled_packets{0};
  std::uint64_t dropped_queue_full{0};
  std::uint64_t dropped_table_full{0};
  std::uint64_t program_requests{0};
  std::uint64_t orphan_events{0};
  std::uint64_t exports{0};
  std::uint64_t flows_created{0};
  std::uint64_t egress_host_packets{0};
  std::uint64_t egress_hw_packets{0};
  std::uint64_t policy_drops_host{0};
  std::uint64_t policy_drops_hw{0};
  std::uint64_t pcie_rx_bytes{0};
  std::uint64_t pcie_tx_bytes{0};
  std::uint64_t peak_dpi_scratch_bytes{0};
  // Packets stamped at or after the measurement start.
  std::uint64_t window_host_processed{0};
  std::uint64_t window_hw_handled{0};
  std::uint64_t window_dropped{0};
};

// Per-worker flow caches fed by RSS, DPI-gated offload decisions and the
// purge-event consumer that keeps host and hardware tables in sync.
class Probe {
 public:
  Probe(ProbeConfig cfg, DpiEngine dpi, HwFlowManager& hw, BatchExporter& exporter)
      : cfg_(std::move(cfg)), dpi_(std::move(dpi)), hw_(hw), exporter_(exporter) {
    cfg_.validate(hw.config());
    std::stable_sort(cfg_.policy.begin(), cfg_.policy.end(),
                     [](const auto& a, const auto& b) { return a.priority > b.priority; });
    workers_.reserve(cfg_.workers);
    for (std::uint32_t w = 0; w < cfg_.workers; ++w)
      workers_.push_back(std::make_unique<Worker>(FlowTable(
          cfg_.host_idle_timeout, cfg_.max_entries, std::uint64_t{w} + 1, cfg_.workers)));
  }

  Probe(const Probe&) = delete;
  Probe& operator=(const Probe&) = delete;

  void set_measurement_start(SimTime t) { window_start_ = t; }

  Disposition ingest(const HwDecision& decision, const Packet& pkt) {
    const bool in_window = pkt.ts >= window_start_;
    if (decision.handled()) {
      ++c_.hw_handled_packets;
      if (in_window) ++c_.window_hw_handled;
      if (decision.kind == HwDecision::Kind::HandledDrop) {
        ++c_.policy_drops_hw;
      } else if (is_inline(cfg_.mode) && decision.egress_port != kAnalyticsPort) {
        ++c_.egress_hw_packets;
      }
      return Disposition::HandledByHw;
    }
    auto& wk = *workers_[rss_dispatch(pkt.key, workers_.size())];
    if (wk.queue.size() >= cfg_.host_queue_depth) {
      ++c_.dropped_queue_full;
      if (in_window) ++c_.window_dropped;
      return Disposition::DroppedQueueFull;
    }
    wk.queue.push_back(pkt);
    c_.pcie_rx_bytes += pkt.wire_len;
    return Disposition::Enqueued;
  }

  // Processes queued packets while their cost fits the worker's credit.
  // Unused credit carries over only while packets are still waiting.
  double worker_step(std::size_t w, double budget_units, SimTime now) {
    auto& wk = *workers_.at(w);
    if (cache_model()) age_warm(wk, now);
    wk.credit += budget_units;
    double consumed = 0.0;
    while (!wk.queue.empty()) {
      const Packet& pkt = wk.queue.front();
      const double cost = packet_cost(wk, pkt);
      if (cost > wk.credit) break;
      wk.credit -= cost;
      consumed += cost;
      process(wk, pkt, std::max(now, pkt.ts));
      wk.queue.pop_front();
    }
    if (wk.queue.empty()) wk.credit = 0.0;
    return consumed;
  }

  // Splits the per-tick budget evenly; returns total units consumed.
  double step_workers(SimTime now) {
    const double share = cfg_.host_budget_units_per_tick / static_cast<double>(workers_.size());
    double consumed = 0.0;
    for (std::size_t w = 0; w < workers_.size(); ++w) consumed += worker_step(w, share, now);
    return consumed;
  }

  // Records programming outcomes, then consumes purge events.
  void apply_hw_tick(const HwTickResult& r) {
    for (FlowId id : r.programmed_ids) {
      auto* e = owner_table(id).resolve_flowid(id);
      if (e == nullptr) throw InvariantViolation("programmed flow id has no host entry");
      e->advance(OffloadState::Programmed);
      owner_table(id).sync_ownership(*e);
    }
    for (FlowId id : r.rejected_ids) {
      auto* e = owner_table(id).resolve_flowid(id);
      if (e == nullptr) throw InvariantViolation("rejected flow id has no host entry");
      e->hw_rejected = true;
      owner_table(id).sync_ownership(*e);
    }
    consume_flow_events(r.events);
  }

  std::size_t consume_flow_events(std::span<const FlowEvent> events,
                                  EndReason reason = EndReason::HwPurge) {
    std::size_t emitted = 0;
    for (const auto& ev : events) {
      auto& table = workers_[rss_dispatch(ev.key, workers_.size())]->table;
      auto* e = table.resolve_flowid(ev.flow_id);
      if (e == nullptr || e->key != ev.key) {
        ++c_.orphan_events;
        continue;
      }
      e->hw_packets += ev.hw_packets;
      e->hw_bytes += ev.hw_bytes;
      if (ev.hw_packets > 0 && ev.last_seen > e->last_seen) e->last_seen = ev.last_seen;
      e->advance(OffloadState::HwPurged);
      auto freed = table.release(ev.key);
      emit(std::move(*freed), reason);
      ++emitted;
    }
    return emitted;
  }

  std::size_t expire(SimTime now) {
    std::size_t n = 0;
    for (auto& wk : workers_) {
      for (auto& e : wk->table.expire_scan(now)) {
        emit(std::move(e), EndReason::HostTimeout);
        ++n;
      }
    }
    return n;
  }

  // Purges the hardware table and flushes every host entry. Queued packets
  // stay queued and are reported as residual.
  void shutdown(SimTime now) {
    const auto events = hw_.drain(now);
    consume_flow_events(events, EndReason::Shutdown);
    for (auto& wk : workers_)
      for (auto& e : wk->table.drain()) emit(std::move(e), EndReason::Shutdown);
    exporter_.flush();
  }

  // Every hardware entry must resolve to a live host twin that is waiting for
  // or holding the offload.
  void check_sync() const {
    hw_.for_each_entry([&](const HwFlowEntry& hwe) {
      auto& table = workers_[rss_dispatch(hwe.key, workers_.size())]->table;
      const auto* e = table.resolve_flowid(hwe.flow_id);
      if (e == nullptr || e->key != hwe.key)
        throw InvariantViolation("hardware flow id " + std::to_string(hwe.flow_id.raw) +
                                 " has no host entry");
      if (e->offload_state != OffloadState::Requested && e->offload_state != OffloadState::Programmed)
        throw InvariantViolation("hardware flow id " + std::to_string(hwe.flow_id.raw) +
                                 " host state is " + std::string(to_string(e->offload_state)));
    });
  }

  std::size_t queued_packets() const {
    std::size_t n = 0;
    for (const auto& wk : workers_) n += wk->queue.size();
    return n;
  }
  std::size_t host_flows() const {
    std::size_t n = 0;
    for (const auto& wk : workers_) n += wk->table.size();
    return n;
  }
  std::size_t detecting_flows() const noexcept { return detecting_; }
  std::size_t live_dpi_scratch_bytes() const noexcept { return live_scratch_; }

  const ProbeCounters& counters() const noexcept { return c_; }
  const ProbeConfig& config() const noexcept { return cfg_; }
  const DpiEngine& dpi() const noexcept { return dpi_; }
  std::size_t worker_count() const noexcept { return workers_.size(); }
  FlowTable& table(std::size_t w) { return workers_.at(w)->table; }
  const std::deque<Packet>& queue(std::size_t w) const { return workers_.at(w)->queue; }

 private:
  struct Worker {
    explicit Worker(FlowTable t) : table(std::move(t)) {}
    FlowTable table;
    std::deque<Packet> queue;
    double credit{0.0};
    // Last host touch per flow, plus the touch log used to age it out.
    std::unordered_map<FlowKey, SimTime, FlowKeyHash> warm;
    std::deque<std::pair<SimTime, FlowKey>> warm_log;
  };

  FlowTable& owner_table(FlowId id) { return workers_[(id.raw - 1) % workers_.size()]->table; }

  bool cache_model() const { return cfg_.cache_flows > 0 && cfg_.cost_cache_miss > 0; }

  void age_warm(Worker& wk, SimTime now) {
    while (!wk.warm_log.empty() && now - wk.warm_log.front().first > cfg_.host_idle_timeout) {
      const auto& [t, key] = wk.warm_log.front();
      if (auto it = wk.warm.find(key); it != wk.warm.end() && it->second == t) wk.warm.erase(it);
      wk.warm_log.pop_front();
    }
  }

  void note_touch(Worker& wk, const Packet& pkt) {
    auto [it, inserted] = wk.warm.try_emplace(pkt.key, pkt.ts);
    if (!inserted) {
      if (pkt.ts <= it->second) return;
      it->second = pkt.ts;
    }
    wk.warm_log.emplace_back(pkt.ts, pkt.key);
  }

  double miss_cost(const Worker& wk) const {
    if (!cache_model()) return 0.0;
    const auto n = wk.warm.size();
    if (n <= cfg_.cache_flows) return 0.0;
    return cfg_.cost_cache_miss *
           (1.0 - static_cast<double>(cfg_.cache_flows) / static_cast<double>(n));
  }

  double packet_cost(Worker& wk, const Packet& pkt) {
    if (const auto* e = wk.table.find(pkt.key))
      return (e->dpi ? cfg_.cost_dpi : cfg_.cost_base) + miss_cost(wk);
    if (wk.table.size() >= wk.table.max_entries()) return cfg_.cost_base;
    return (cfg_.dpi_enabled ? cfg_.cost_dpi : cfg_.cost_base) + cfg_.cost_new_flow + miss_cost(wk);
  }

  void process(Worker& wk, const Packet& pkt, SimTime now) {
    const bool in_window = pkt.ts >= window_start_;
    const auto up = wk.table.upsert(pkt.key, pkt.ts);
    if (up.table_full()) {
      ++c_.dropped_table_full;
      if (in_window) ++c_.window_dropped;
      return;
    }
    auto& e = *up.entry;
    if (up.is_new()) {
      ++c_.flows_created;
      wk.table.allocate_flowid(e);
      if (cfg_.dpi_enabled) {
        e.dpi = std::make_unique<DpiState>(dpi_.start_flow());
        live_scratch_ += e.dpi->scratch_bytes();
        c_.peak_dpi_scratch_bytes = std::max<std::uint64_t>(c_.peak_dpi_scratch_bytes, live_scratch_);
        ++detecting_;
      } else {
        e.l7 = {VerdictKind::Unknown, {}};
      }
    }
    wk.table.touch(e, pkt);
    if (cache_model()) note_touch(wk, pkt);
    ++c_.host_processed_packets;
    if (in_window) ++c_.window_host_processed;

    bool eligible_now = false;
    if (e.dpi) {
      const std::size_t before = e.dpi->scratch_bytes();
      dpi_.feed(*e.dpi, pkt);
      if (e.dpi->verdict.final()) {
        e.l7 = e.dpi->verdict;
        live_scratch_ -= before;
        --detecting_;
        e.dpi.reset();
        eligible_now = true;
      }
    } else if (!cfg_.dpi_enabled && e.sw_packets == 2 && e.offload_state == OffloadState::NotEligible) {
      eligible_now = true;
    }

    if (eligible_now) {
      e.advance(OffloadState::Eligible);
      e.action = evaluate_policy(cfg_.policy, e, cfg_.mode, pkt.ingress_port);
      if (cfg_.offload_enabled && e.action.offloadable()) {
        e.advance(OffloadState::Requested);
        wk.table.sync_ownership(e);
        hw_.submit_program_request({e.key, e.flow_id, e.action, now});
        ++c_.program_requests;
      }
    }

    if (is_inline(cfg_.mode)) {
      const FlowAction act = e.offload_state >= OffloadState::Eligible
                                 ? e.action
                                 : evaluate_policy(cfg_.policy, e, cfg_.mode, pkt.ingress_port);
      if (act.kind == FlowAction::Kind::Drop) {
        ++c_.policy_drops_host;
      } else if (act.kind == FlowAction::Kind::PassTo || act.kind == FlowAction::Kind::ForwardToHost) {
        ++c_.egress_host_packets;
        c_.pcie_tx_bytes += pkt.wire_len;
      }
    }
  }

  void emit(HostFlowEntry&& e, EndReason reason) {
    if (e.dpi) {
      live_scratch_ -= e.dpi->scratch_bytes();
      --detecting_;
      e.dpi.reset();
    }
    ExportRecord r{e.key,
                   e.l7.final() ? e.l7.label() : std::string("Unknown"),
                   e.total_packets(),
                   e.total_bytes(),
                   e.first_seen,
                   e.last_seen,
                   reason};
    ++c_.exports;
    exporter_.add(std::move(r));
  }

  ProbeConfig cfg_;
  DpiEngine dpi_;
  HwFlowManager& hw_;
  BatchExporter& exporter_;
  std::vector<std::unique_ptr<Worker>> workers_;
  ProbeCounters c_;
  std::size_t detecting_{0};
  std::size_t live_scratch_{0};
  SimTime window_start_{};
};

}  // namespace flowgate
