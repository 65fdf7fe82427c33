#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "flowgate/bench.hpp"

using namespace flowgate;
using namespace flowgate::literals;

namespace {

SweepMatrix quick_matrix() {
  auto m = SweepMatrix::reference(1e-4);
  m.base.duration = 1_s;
  m.base.warmup = 200_ms;
  return m;
}

std::vector<std::string> csv_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(FlowLabel, Suffixes) {
  EXPECT_EQ(flow_label(10'000), "10K");
  EXPECT_EQ(flow_label(1'000'000), "1M");
  EXPECT_EQ(flow_label(20'000'000), "20M");
  EXPECT_EQ(flow_label(1'500), "1500");
}

TEST(SweepMatrix, DefaultIsFiveRowsByTwoByTwo) {
  const auto m = SweepMatrix::reference();
  ASSERT_EQ(m.rows.size(), 5u);
  EXPECT_EQ(m.rows.front().active_flows, 10'000u);
  EXPECT_EQ(m.rows.back().active_flows, 20'000'000u);
  for (const auto& r : m.rows) EXPECT_DOUBLE_EQ(r.new_flows_per_sec, static_cast<double>(r.active_flows) / 10.0);
  EXPECT_EQ(m.cell_count(), 20u);
  const auto cfgs = sweep_configs(m);
  ASSERT_EQ(cfgs.size(), 20u);
  EXPECT_TRUE(cfgs[0].probe.dpi_enabled);
  EXPECT_FALSE(cfgs[0].probe.offload_enabled);
  EXPECT_TRUE(cfgs[1].probe.offload_enabled);
  EXPECT_FALSE(cfgs[2].probe.dpi_enabled);
  EXPECT_EQ(cfgs[4].name, "sweep-100K");
}

TEST(BenchSweep, TwentyRowsFixedHeaderMatrixOrder) {
  const auto m = quick_matrix();
  const auto cells = bench_sweep(m, 4);
  std::ostringstream os;
  write_sweep_csv(cells, os);
  const auto lines = csv_lines(os.str());
  ASSERT_EQ(lines.size(), 21u);
  EXPECT_EQ(lines[0], "scenario,flows,births,dpi,offload,drop_pct,cpu_load,host_frac,hw_frac,occ_peak,backlog_peak");
  EXPECT_EQ(lines[1].substr(0, lines[1].find(',')), "sweep-10K");
  for (std::size_t i = 1; i < lines.size(); ++i)
    EXPECT_EQ(std::count(lines[i].begin(), lines[i].end(), ','), 10) << lines[i];
  for (const auto& c : cells) {
    for (double f : {c.drop_pct, c.host_frac, c.hw_frac, c.occ_peak}) {
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
    }
    if (!c.offload) {
      EXPECT_DOUBLE_EQ(c.hw_frac, 0.0);
    }
  }
}

TEST(BenchSweep, ParallelMatchesSerial) {
  auto m = quick_matrix();
  m.rows.resize(2);
  const auto serial = bench_sweep(m, 1);
  const auto parallel = bench_sweep(m, 3);
  std::ostringstream a, b;
  write_sweep_csv(serial, a);
  write_sweep_csv(parallel, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Compare, TinyScenarioAmpleBudget) {
  ScenarioConfig cfg;
  cfg.active_flows = 50'000;
  cfg.new_flows_per_sec = 5'000;
  cfg.rate_bits_per_sec = 8e9;
  cfg.duration = 2_s;
  cfg.l7_mix = {{PayloadClass::Tls, 1.0}};
  cfg.probe.host_budget_units_per_tick = 1000;
  const auto r = compare_offload(cfg);
  EXPECT_DOUBLE_EQ(r.off.drop_pct, 0.0);
  EXPECT_DOUBLE_EQ(r.on.drop_pct, 0.0);
  EXPECT_LT(r.on.cpu_load, r.off.cpu_load);
  EXPECT_DOUBLE_EQ(r.off.hw_frac, 0.0);
  EXPECT_GT(r.on.hw_frac, 0.5);
  EXPECT_LT(r.delta_cpu_load(), 0.0);

  std::ostringstream os;
  r.write_csv(os);
  const auto lines = csv_lines(os.str());
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], ComparisonReport::kCsvHeader);
  EXPECT_NE(lines[3].find(",delta,"), std::string::npos);
}

TEST(Calibrate, BisectionHitsTarget) {
  ScenarioConfig cfg;
  cfg.active_flows = 50'000;
  cfg.new_flows_per_sec = 5'000;
  cfg.rate_bits_per_sec = 40e9;
  cfg.duration = 1_s;
  cfg.probe.workers = 1;
  cfg.probe.host_queue_depth = 64;
  const double budget = calibrate_budget(cfg, 0.3, 1.0, 50.0, 16);
  cfg.probe.host_budget_units_per_tick = budget;
  EXPECT_NEAR(run_scenario(cfg).drop_pct(), 0.3, 0.02);
}
