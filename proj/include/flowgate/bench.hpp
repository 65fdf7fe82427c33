#pragma once

#include <cstddef>
#include <cstdint>
#include <future>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flowgate/hw_flow_manager.hpp"
#include "flowgate/runner.hpp"
#include "flowgate/scenario_io.hpp"
#include "flowgate/traffic_gen.hpp"

namespace flowgate {

// Host budget for the reference sweep, tuned once with calibrate_budget so the
// DPI-on, offload-off 1M-flow analog drops about 24% of its packets.
inline constexpr double kReferenceHostBudget = 18.3193;

// Passive probe at 80 Gbps with 970-byte frames, scaled by 1/1000, in front of
// the scaled NT200A02 preset in its multi-stream (16 queue) configuration.
inline ScenarioConfig reference_base(double scale_factor = 1e-3) {
  ScenarioConfig cfg;
  cfg.name = "sweep";
  cfg.packet_size = 970;
  cfg.rate_bits_per_sec = 80e9;
  cfg.scale_factor = scale_factor;
  cfg.duration = SimTime::from_seconds(30);
  cfg.warmup = SimTime::from_seconds(10);
  cfg.seed = 1;
  cfg.l7_mix = {{PayloadClass::Tls, 0.40},    {PayloadClass::Http, 0.15},  {PayloadClass::Quic, 0.15},
                {PayloadClass::Dns, 0.05},    {PayloadClass::Netflix, 0.05}, {PayloadClass::YouTube, 0.05},
                {PayloadClass::Spotify, 0.05}, {PayloadClass::Random, 0.10}};
  cfg.hw = hw_preset(HwPreset::Nt200a02, scale_factor, 16);
  cfg.hw.hw_idle_timeout = SimTime::from_seconds(5);
  cfg.probe.mode = ProbeMode::Passive;
  cfg.probe.workers = 1;
  cfg.probe.host_queue_depth = 4096;
  cfg.probe.host_budget_units_per_tick = kReferenceHostBudget;
  cfg.probe.cost_base = 1.0;
  cfg.probe.cost_dpi = 3.0;
  cfg.probe.cache_flows = 500;
  cfg.probe.cost_cache_miss = 2.0;
  cfg.probe.host_idle_timeout = SimTime::from_seconds(5);
  return cfg;
}

struct SweepRow {
  std::uint64_t active_flows;
  double new_flows_per_sec;
};

struct SweepMatrix {
  ScenarioConfig base;
  std::vector<SweepRow> rows;
  std::vector<bool> dpi{true, false};
  std::vector<bool> offload{false, true};

  // Reference-scale rows; the base scale factor shrinks them at run time.
  static std::vector<SweepRow> reference_rows() {
    return {{10'000, 1'000}, {100'000, 10'000}, {1'000'000, 100'000}, {10'000'000, 1'000'000},
            {20'000'000, 2'000'000}};
  }
  static SweepMatrix reference(double scale_factor = 1e-3) { return {reference_base(scale_factor), reference_rows()}; }

  std::size_t cell_count() const { return rows.size() * dpi.size() * offload.size(); }
};

inline std::string flow_label(std::uint64_t n) {
  if (n >= 1'000'000 && n % 1'000'000 == 0) return std::to_string(n / 1'000'000) + "M";
  if (n >= 1'000 && n % 1'000 == 0) return std::to_string(n / 1'000) + "K";
  return std::to_string(n);
}

struct CellResult {
  std::string scenario;
  std::uint64_t flows{0};
  double births{0.0};
  bool dpi{false};
  bool offload{false};
  double drop_pct{0.0};  // fraction in [0, 1]
  double cpu_load{0.0};
  double host_frac{0.0};
  double hw_frac{0.0};
  double occ_peak{0.0};
  std::uint64_t backlog_peak{0};

  static CellResult from(const ScenarioConfig& cfg, const Metrics& m) {
    return {cfg.name,
            cfg.active_flows,
            cfg.new_flows_per_sec,
            cfg.probe.dpi_enabled,
            cfg.probe.offload_enabled,
            m.drop_pct(),
            m.mean_cpu_load,
            m.host_fraction(),
            m.hw_fraction(),
            m.occupancy_peak(),
            m.backlog_peak()};
  }
};

inline constexpr const char* kSweepCsvHeader =
    "scenario,flows,births,dpi,offload,drop_pct,cpu_load,host_frac,hw_frac,occ_peak,backlog_peak";

inline void write_sweep_csv(const std::vector<CellResult>& cells, std::ostream& out) {
  out << kSweepCsvHeader << '\n';
  for (const auto& c : cells) {
    out << c.scenario << ',' << c.flows << ',' << c.births << ',' << (c.dpi ? "on" : "off") << ','
        << (c.offload ? "on" : "off") << ',' << c.drop_pct << ',' << c.cpu_load << ',' << c.host_frac
        << ',' << c.hw_frac << ',' << c.occ_peak << ',' << c.backlog_peak << '\n';
  }
}

// Cell configurations in matrix order: row, then DPI, then offload.
inline std::vector<ScenarioConfig> sweep_configs(const SweepMatrix& matrix) {
  std::vector<ScenarioConfig> out;
  out.reserve(matrix.cell_count());
  for (const auto& row : matrix.rows)
    for (bool dpi : matrix.dpi)
      for (bool off : matrix.offload) {
        ScenarioConfig c = matrix.base;
        c.active_flows = row.active_flows;
        c.new_flows_per_sec = row.new_flows_per_sec;
        c.probe.dpi_enabled = dpi;
        c.probe.offload_enabled = off;
        c.name = matrix.base.name + "-" + flow_label(row.active_flows);
        out.push_back(std::move(c));
      }
  return out;
}

// Cells are independent runs; `jobs` > 1 evaluates them concurrently. The
// result order is the matrix order either way.
inline std::vector<CellResult> bench_sweep(const SweepMatrix& matrix, unsigned jobs = 1) {
  const auto configs = sweep_configs(matrix);
  std::vector<CellResult> out(configs.size());
  auto run_one = [&](std::size_t i) {
    RunOptions opt;
    opt.sync_check_every = 1000;
    out[i] = CellResult::from(configs[i], run_scenario(configs[i], opt));
  };
  if (jobs <= 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) run_one(i);
    return out;
  }
  for (std::size_t start = 0; start < configs.size(); start += jobs) {
    std::vector<std::future<void>> batch;
    for (std::size_t i = start; i < std::min(configs.size(), start + jobs); ++i)
      batch.push_back(std::async(std::launch::async, run_one, i));
    for (auto& f : batch) f.get();
  }
  return out;
}

struct ComparisonReport {
  CellResult off;
  CellResult on;

  double delta_drop_pct() const { return on.drop_pct - off.drop_pct; }
  double delta_cpu_load() const { return on.cpu_load - off.cpu_load; }
  double delta_host_frac() const { return on.host_frac - off.host_frac; }
  double delta_hw_frac() const { return on.hw_frac - off.hw_frac; }

  static constexpr const char* kCsvHeader =
      "scenario,offload,drop_pct,cpu_load,host_frac,hw_frac,occ_peak,backlog_peak";

  void write_csv(std::ostream& out) const {
    out << kCsvHeader << '\n';
    for (const auto* c : {&off, &on})
      out << c->scenario << ',' << (c->offload ? "on" : "off") << ',' << c->drop_pct << ',' << c->cpu_load
          << ',' << c->host_frac << ',' << c->hw_frac << ',' << c->occ_peak << ',' << c->backlog_peak
          << '\n';
    out << off.scenario << ",delta," << delta_drop_pct() << ',' << delta_cpu_load() << ','
        << delta_host_frac() << ',' << delta_hw_frac() << ',' << on.occ_peak - off.occ_peak << ','
        << static_cast<double>(on.backlog_peak) - static_cast<double>(off.backlog_peak) << '\n';
  }
};

// Runs the scenario with offload off and on, same seed.
inline ComparisonReport compare_offload(const ScenarioConfig& cfg) {
  ComparisonReport r;
  for (bool on : {false, true}) {
    ScenarioConfig c = cfg;
    c.probe.offload_enabled = on;
    (on ? r.on : r.off) = CellResult::from(c, run_scenario(c));
  }
  return r;
}

// Bisects the host budget so `cfg` drops `target` of its window packets.
// Drop fraction falls monotonically as the budget grows.
inline double calibrate_budget(ScenarioConfig cfg, double target, double lo = 1.0, double hi = 100.0,
                               int iterations = 20) {
  auto drop_at = [&](double budget) {
    cfg.probe.host_budget_units_per_tick = budget;
    return run_scenario(cfg).drop_pct();
  };
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (drop_at(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace flowgate
