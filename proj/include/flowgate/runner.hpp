#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowgate/dpi.hpp"
#include "flowgate/errors.hpp"
#include "flowgate/export.hpp"
#include "flowgate/hw_flow_manager.hpp"
#include "flowgate/probe.hpp"
#include "flowgate/sim_time.hpp"
#include "flowgate/traffic_gen.hpp"

namespace flowgate {

struct Metrics {
  std::string scenario;
  std::uint64_t seed{0};
  std::uint64_t ticks{0};

  std::uint64_t generated_packets{0};
  std::uint64_t host_processed_packets{0};
  std::uint64_t hw_handled_packets{0};
  std::uint64_t dropped_queue_full{0};
  std::uint64_t dropped_table_full{0};
  std::uint64_t residual_queued{0};
  std::uint64_t duplicate_programs{0};
  std::uint64_t hw_table_full_rejects{0};
  std::uint64_t program_requests{0};
  std::uint64_t hw_inserts{0};
  std::uint64_t hw_purges{0};
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

  // Measurement window: packets stamped at or after the warm-up.
  std::uint64_t window_generated{0};
  std::uint64_t window_dropped{0};
  std::uint64_t window_host_processed{0};
  std::uint64_t window_hw_handled{0};
  double mean_cpu_load{0.0};

  std::vector<double> cpu_load;
  std::vector<double> hw_occupancy;
  std::vector<std::uint64_t> prog_queue_depth;
  std::vector<std::uint64_t> drops_cum;
  std::vector<std::uint64_t> hw_inserts_per_tick;

  std::uint64_t dropped() const { return dropped_queue_full + dropped_table_full; }

  bool conservation_holds() const {
    return generated_packets == host_processed_packets + hw_handled_packets + dropped_queue_full +
                                    dropped_table_full + residual_queued;
  }

  static double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  }
  double drop_pct() const { return ratio(window_dropped, window_generated); }
  double host_fraction() const { return ratio(window_host_processed, window_generated); }
  double hw_fraction() const { return ratio(window_hw_handled, window_generated); }
  double occupancy_peak() const {
    return hw_occupancy.empty() ? 0.0 : *std::max_element(hw_occupancy.begin(), hw_occupancy.end());
  }
  std::uint64_t backlog_peak() const {
    return prog_queue_depth.empty() ? 0 : *std::max_element(prog_queue_depth.begin(), prog_queue_depth.end());
  }

  nlohmann::ordered_json to_json(bool with_series = true) const {
    nlohmann::ordered_json j;
    j["scenario"] = scenario;
    j["seed"] = seed;
    j["ticks"] = ticks;
    j["generated_packets"] = generated_packets;
    j["host_processed_packets"] = host_processed_packets;
    j["hw_handled_packets"] = hw_handled_packets;
    j["dropped_queue_full"] = dropped_queue_full;
    j["dropped_table_full"] = dropped_table_full;
    j["residual_queued"] = residual_queued;
    j["duplicate_programs"] = duplicate_programs;
    j["hw_table_full_rejects"] = hw_table_full_rejects;
    j["program_requests"] = program_requests;
    j["hw_inserts"] = hw_inserts;
    j["hw_purges"] = hw_purges;
    j["orphan_events"] = orphan_events;
    j["exports"] = exports;
    j["flows_created"] = flows_created;
    j["egress_host_packets"] = egress_host_packets;
    j["egress_hw_packets"] = egress_hw_packets;
    j["policy_drops_host"] = policy_drops_host;
    j["policy_drops_hw"] = policy_drops_hw;
    j["pcie_rx_bytes"] = pcie_rx_bytes;
    j["pcie_tx_bytes"] = pcie_tx_bytes;
    j["peak_dpi_scratch_bytes"] = peak_dpi_scratch_bytes;
    j["window_generated"] = window_generated;
    j["window_dropped"] = window_dropped;
    j["window_host_processed"] = window_host_processed;
    j["window_hw_handled"] = window_hw_handled;
    j["drop_pct"] = drop_pct();
    j["host_fraction"] = host_fraction();
    j["hw_fraction"] = hw_fraction();
    j["mean_cpu_load"] = mean_cpu_load;
    j["occupancy_peak"] = occupancy_peak();
    j["backlog_peak"] = backlog_peak();
    j["conservation_ok"] = conservation_holds();
    if (with_series) {
      j["series"]["cpu_load"] = cpu_load;
      j["series"]["hw_occupancy"] = hw_occupancy;
      j["series"]["prog_queue_depth"] = prog_queue_depth;
      j["series"]["drops_cum"] = drops_cum;
      j["series"]["hw_inserts"] = hw_inserts_per_tick;
    }
    return j;
  }

  void write_ticks_csv(std::ostream& out) const {
    out << "tick_index,cpu_load,hw_occupancy,prog_queue_depth,drops_cum\n";
    for (std::size_t i = 0; i < cpu_load.size(); ++i)
      out << i << ',' << cpu_load[i] << ',' << hw_occupancy[i] << ',' << prog_queue_depth[i] << ','
          << drops_cum[i] << '\n';
  }
};

// Read-only view handed to the per-tick observer.
struct TickView {
  std::uint64_t index;
  SimTime start;
  SimTime end;
  const HwFlowManager& hw;
  const Probe& probe;
  const HwTickResult& hw_result;
  double units_consumed;
};

inline constexpr std::uint64_t kSyncBucketsPerTick = 8192;

struct RunOptions {
  std::ostream* export_sink{nullptr};
  // Throw InvariantViolation on conservation, sync or single-offload failure.
  bool check_invariants{true};
  // Sync check cadence in ticks (0 disables the per-tick check). Unset means
  // every tick for small tables, sparser as the table grows, since each check
  // walks every hardware bucket.
  std::optional<std::uint64_t> sync_check_every;
  // Replay these packets instead of generating traffic.
  const std::vector<Packet>* trace{nullptr};
  std::function<void(const TickView&)> on_tick;
  std::function<void(std::span<const ExportRecord>)> on_export;
  // Receives the per-flow generator ledger after the run (generated traffic only).
  std::function<void(const FlowSchedule&, const std::vector<std::uint64_t>&)> on_ledger;
};

// Tick loop: generate -> hardware lookup -> ingest -> workers -> hardware
// tick -> purge events -> host expiry. Deterministic for a given config.
inline Metrics run_scenario(const ScenarioConfig& cfg, const RunOptions& opt = {}) {
  cfg.validate();

  std::optional<FlowSchedule> schedule;
  std::optional<PacketGenerator> gen;
  std::size_t trace_pos = 0;
  SimTime end = cfg.duration;
  if (opt.trace != nullptr) {
    if (!opt.trace->empty()) end = std::max(end, opt.trace->back().ts + cfg.probe.tick);
  } else {
    schedule = build_schedule(cfg);
    gen.emplace(*schedule);
  }
  auto has_packet_before = [&](SimTime t) {
    if (opt.trace != nullptr) return trace_pos < opt.trace->size() && (*opt.trace)[trace_pos].ts < t;
    return !gen->done() && gen->next_ts() < t;
  };
  auto next_packet = [&]() { return opt.trace != nullptr ? (*opt.trace)[trace_pos++] : gen->next(); };

  HwFlowManager hw(cfg.hw);
  BatchExporter exporter(opt.export_sink, cfg.probe.export_batch);
  if (opt.on_export) exporter.set_observer(opt.on_export);
  Probe probe(cfg.probe, DpiEngine::from_config(cfg.dpi), hw, exporter);
  probe.set_measurement_start(cfg.warmup);

  Metrics m;
  m.scenario = cfg.name;
  m.seed = cfg.seed;
  const SimTime tick = cfg.probe.tick;
  const std::uint64_t ticks = (end.nanos + tick.nanos - 1) / tick.nanos;
  const double budget = cfg.probe.host_budget_units_per_tick;
  double window_units = 0.0;
  std::uint64_t window_ticks = 0;
  m.cpu_load.reserve(ticks);
  m.hw_occupancy.reserve(ticks);
  m.prog_queue_depth.reserve(ticks);
  m.drops_cum.reserve(ticks);
  m.hw_inserts_per_tick.reserve(ticks);
  const std::uint64_t sync_every =
      opt.sync_check_every.value_or(std::max<std::uint64_t>(1, cfg.hw.capacity / kSyncBucketsPerTick));

  for (std::uint64_t k = 0; k < ticks; ++k) {
    const SimTime t0{k * tick.nanos};
    const SimTime t1 = t0 + tick;
    while (has_packet_before(t1)) {
      const Packet pkt = next_packet();
      ++m.generated_packets;
      if (pkt.ts >= cfg.warmup) ++m.window_generated;
      probe.ingest(hw.process_packet(pkt, pkt.ts), pkt);
    }
    const double consumed = probe.step_workers(t0);
    const HwTickResult r = hw.tick(t1);
    probe.apply_hw_tick(r);
    probe.expire(t1);

    m.cpu_load.push_back(budget > 0 ? consumed / budget : 0.0);
    m.hw_occupancy.push_back(hw.occupancy_fraction());
    m.prog_queue_depth.push_back(hw.queue_depth());
    const auto& c = probe.counters();
    m.drops_cum.push_back(c.dropped_queue_full + c.dropped_table_full);
    m.hw_inserts_per_tick.push_back(r.programmed);
    if (t0 >= cfg.warmup) {
      window_units += consumed;
      ++window_ticks;
    }
    if (opt.check_invariants && sync_every > 0 && k % sync_every == 0)
      probe.check_sync();
    if (opt.on_tick) opt.on_tick(TickView{k, t0, t1, hw, probe, r, consumed});
  }
  if (opt.check_invariants) probe.check_sync();
  probe.shutdown(SimTime{ticks * tick.nanos});

  const auto& c = probe.counters();
  m.ticks = ticks;
  m.host_processed_packets = c.host_processed_packets;
  m.hw_handled_packets = c.hw_handled_packets;
  m.dropped_queue_full = c.dropped_queue_full;
  m.dropped_table_full = c.dropped_table_full;
  m.residual_queued = probe.queued_packets();
  m.duplicate_programs = hw.stats().duplicate_programs;
  m.hw_table_full_rejects = hw.stats().table_full_rejects;
  m.program_requests = c.program_requests;
  m.hw_inserts = hw.stats().inserts;
  m.hw_purges = hw.stats().purges;
  m.orphan_events = c.orphan_events;
  m.exports = c.exports;
  m.flows_created = c.flows_created;
  m.egress_host_packets = c.egress_host_packets;
  m.egress_hw_packets = c.egress_hw_packets;
  m.policy_drops_host = c.policy_drops_host;
  m.policy_drops_hw = c.policy_drops_hw;
  m.pcie_rx_bytes = c.pcie_rx_bytes;
  m.pcie_tx_bytes = c.pcie_tx_bytes;
  m.peak_dpi_scratch_bytes = c.peak_dpi_scratch_bytes;
  m.window_dropped = c.window_dropped;
  m.window_host_processed = c.window_host_processed;
  m.window_hw_handled = c.window_hw_handled;
  m.mean_cpu_load = (budget > 0 && window_ticks > 0)
                        ? window_units / (budget * static_cast<double>(window_ticks))
                        : 0.0;

  if (schedule && opt.on_ledger) opt.on_ledger(*schedule, gen->ledger());

  if (opt.check_invariants) {
    if (!m.conservation_holds())
      throw InvariantViolation("packet conservation failed: generated " +
                               std::to_string(m.generated_packets) + " != host " +
                               std::to_string(m.host_processed_packets) + " + hw " +
                               std::to_string(m.hw_handled_packets) + " + drops " +
                               std::to_string(m.dropped()) + " + queued " +
                               std::to_string(m.residual_queued));
    if (m.duplicate_programs != 0)
      throw InvariantViolation("single-offload violated: " + std::to_string(m.duplicate_programs) +
                               " duplicate program requests");
    if (m.orphan_events != 0)
      throw InvariantViolation(std::to_string(m.orphan_events) + " purge events had no host entry");
  }
  return m;
}

}  // namespace flowgate
