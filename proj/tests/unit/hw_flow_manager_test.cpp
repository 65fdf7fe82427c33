#include <gtest/gtest.h>

#include <map>
#include <random>
#include <vector>

#include "flowgate/hw_flow_manager.hpp"
#include "test_util.hpp"

using namespace flowgate;
using namespace flowgate::literals;
using flowgate::test_support::packet;
using flowgate::test_support::tcp_key;

namespace {

ProgramRequest req(std::uint32_t n, SimTime at, FlowAction a = FlowAction::pass_to(1)) {
  return {tcp_key(n), FlowId{n + 1}, a, at};
}

}  // namespace

TEST(HwSubmit, QueuesWithoutBlocking) {
  HwFlowManager m(HwConfig{});
  m.submit_program_request(req(0, 0_ns));
  EXPECT_EQ(m.queue_depth(), 1u);
  EXPECT_EQ(m.occupancy(), 0u);
}

TEST(HwSubmit, ZeroFlowIdRejected) {
  HwFlowManager m(HwConfig{});
  EXPECT_THROW(m.submit_program_request({tcp_key(1), FlowId{0}, FlowAction::drop(), 0_ns}), ZeroFlowId);
}

TEST(HwSubmit, HostActionAndUnknownPortRejected) {
  HwFlowManager m(HwConfig{});
  EXPECT_THROW(m.submit_program_request(req(1, 0_ns, FlowAction::forward_to_host())), std::invalid_argument);
  EXPECT_THROW(m.submit_program_request(req(1, 0_ns, FlowAction::pass_to(7))), std::invalid_argument);
  EXPECT_NO_THROW(m.submit_program_request(req(1, 0_ns, FlowAction::pass_to(kAnalyticsPort))));
}

TEST(HwTick, TokenArithmeticFiveOfTen) {
  HwFlowManager m(HwConfig{});
  for (std::uint32_t i = 0; i < 10; ++i) m.submit_program_request(req(i, 0_ns));
  // 1000 flows/s over 5 ms earns 1000 * 0.005 = 5 tokens.
  const auto r = m.tick(5_ms);
  EXPECT_EQ(r.programmed, 5u);
  EXPECT_EQ(m.queue_depth(), 5u);
  EXPECT_EQ(m.occupancy(), 5u);
}

TEST(HwTick, DuplicateProgramDroppedAndCounted) {
  HwFlowManager m(HwConfig{});
  m.submit_program_request(req(1, 0_ns));
  m.submit_program_request(req(1, 0_ns));
  m.tick(1_s);
  EXPECT_EQ(m.occupancy(), 1u);
  EXPECT_EQ(m.stats().duplicate_programs, 1u);
  EXPECT_EQ(m.queue_depth(), 0u);
}

TEST(HwTick, LatencyFloorHonoured) {
  HwConfig c;
  c.program_latency = 10_us;
  HwFlowManager m(c);
  m.tick(1_s);  // bank tokens
  m.submit_program_request(req(1, 1_s));
  EXPECT_EQ(m.tick(1_s + 9_us).programmed, 0u);
  EXPECT_EQ(m.tick(1_s + 10_us).programmed, 1u);
  EXPECT_EQ(m.lookup(tcp_key(1))->programmed_at, 1_s + 10_us);
}

TEST(HwTick, IdleEntryPurgedExactlyOnceWithCounters) {
  HwConfig c;
  c.hw_idle_timeout = 2_s;
  HwFlowManager m(c);
  m.tick(1_s);
  m.submit_program_request(req(1, 1_s));
  m.tick(1_s + 1_ms);
  for (int i = 0; i < 7; ++i) m.process_packet(packet(tcp_key(1), 2_s, 200), 2_s);
  EXPECT_TRUE(m.tick(4_s).events.empty());
  const auto r = m.tick(4_s + 1_ns);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].flow_id, FlowId{2});
  EXPECT_EQ(r.events[0].hw_packets, 7u);
  EXPECT_EQ(r.events[0].hw_bytes, 1400u);
  EXPECT_EQ(r.events[0].reason, PurgeReason::IdleTimeout);
  EXPECT_EQ(m.lookup(tcp_key(1)), nullptr);
  EXPECT_TRUE(m.tick(100_s).events.empty());
}

TEST(HwProcess, UnknownFlowGoesToHostWithZeroId) {
  HwFlowManager m(HwConfig{});
  const auto d = m.process_packet(packet(tcp_key(1), 0_ns), 0_ns);
  EXPECT_EQ(d.kind, HwDecision::Kind::ToHost);
  EXPECT_TRUE(d.flow_id.is_zero());
}

TEST(HwProcess, ProgrammedPassFlowHandledInHardware) {
  HwFlowManager m(HwConfig{});
  m.submit_program_request(req(1, 0_ns, FlowAction::pass_to(1)));
  m.tick(1_s);
  for (int i = 0; i < 100; ++i) {
    const auto d = m.process_packet(packet(tcp_key(1), 1_s), 1_s);
    ASSERT_EQ(d.kind, HwDecision::Kind::HandledPass);
    ASSERT_EQ(d.egress_port, 1);
  }
  EXPECT_EQ(m.lookup(tcp_key(1))->hw_packets, 100u);
}

TEST(HwProcess, DropActionHandledAsDrop) {
  HwFlowManager m(HwConfig{});
  m.submit_program_request(req(1, 0_ns, FlowAction::drop()));
  m.tick(1_s);
  EXPECT_EQ(m.process_packet(packet(tcp_key(1), 1_s), 1_s).kind, HwDecision::Kind::HandledDrop);
}

TEST(HwProcess, CapacityRejectedFlowBehavesLikeMiss) {
  HwConfig c;
  c.capacity = 4;
  HwFlowManager m(c);
  for (std::uint32_t i = 0; i < 6; ++i) m.submit_program_request(req(i, 0_ns));
  const auto r = m.tick(1_s);
  EXPECT_EQ(r.programmed, 4u);
  EXPECT_EQ(r.rejected_ids.size(), 2u);
  EXPECT_EQ(m.stats().table_full_rejects, 2u);
  EXPECT_LE(m.occupancy(), 4u);
  for (const FlowId id : r.rejected_ids) {
    const auto d = m.process_packet(packet(tcp_key(static_cast<std::uint32_t>(id.raw - 1)), 1_s), 1_s);
    EXPECT_EQ(d.kind, HwDecision::Kind::ToHost);
    EXPECT_TRUE(d.flow_id.is_zero());
  }
}

TEST(HwDegrade, ClosedFormMidpoint) {
  EXPECT_DOUBLE_EQ(degrade_multiplier(0.5, 0.9, 0.1), 1.0);
  EXPECT_DOUBLE_EQ(degrade_multiplier(0.9, 0.9, 0.1), 1.0);
  EXPECT_NEAR(degrade_multiplier(0.95, 0.9, 0.1), 0.55, 1e-12);
  EXPECT_NEAR(degrade_multiplier(1.0, 0.9, 0.1), 0.1, 1e-12);
}

TEST(HwDegrade, TokensAccrueAtDegradedRate) {
  HwConfig c;
  c.capacity = 400;
  c.learn_rate_per_sec = 1000;
  c.learn_burst = 1000;
  HwFlowManager m(c);
  for (std::uint32_t i = 0; i < 380; ++i) m.submit_program_request(req(i, 0_ns));
  m.tick(380_ms);
  ASSERT_EQ(m.occupancy(), 380u);  // 95%
  const double before = m.tokens();
  m.tick(380_ms + 100_ms);
  EXPECT_NEAR(m.tokens() - before, 0.55 * 100, 1e-6);
}

TEST(HwConfigPresets, Nt200a02Figures) {
  const auto single = HwConfig::nt200a02();
  EXPECT_EQ(single.capacity, 140'000'000u);
  EXPECT_DOUBLE_EQ(single.learn_rate_per_sec, 1'000'000.0);
  EXPECT_DOUBLE_EQ(HwConfig::nt200a02(16).learn_rate_per_sec, 3'000'000.0);
  const auto s = single.scaled(1e-3);
  EXPECT_EQ(s.capacity, 140'000u);
  EXPECT_DOUBLE_EQ(s.learn_rate_per_sec, 1000.0);
}

TEST(HwConfigValidate, RejectsBadRanges) {
  HwConfig c;
  c.degrade_threshold = 1.0;
  EXPECT_THROW(HwFlowManager{c}, ConfigError);
  c = {};
  c.degrade_floor = 0;
  EXPECT_THROW(HwFlowManager{c}, ConfigError);
  c = {};
  c.program_latency = 0_ns;
  EXPECT_THROW(HwFlowManager{c}, ConfigError);
}

// Random workload with a shadow model: learning-rate ceiling over every
// window, latency floor, occupancy bound, purge exactness and per-flow
// counter conservation.
TEST(HwProperty, RandomWorkloadKeepsAllContracts) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    HwConfig c;
    c.capacity = 256;
    c.learn_rate_per_sec = 2000;
    c.learn_burst = 20;
    c.program_latency = 50_us;
    c.hw_idle_timeout = 50_ms;
    HwFlowManager m(c);

    std::map<FlowKey, SimTime> submitted;
    std::map<FlowKey, std::uint64_t> shadow;
    std::vector<std::pair<SimTime, std::size_t>> inserts_per_tick;
    std::uint64_t events = 0;
    std::uint32_t next = 0;
    const SimTime tick = 1_ms;
    SimTime now;

    for (int t = 0; t < 2000; ++t) {
      const SimTime t0 = now;
      now += tick;
      const auto births = rng() % 6;
      for (std::uint64_t k = 0; k < births; ++k) {
        const std::uint32_t n = next++;
        m.submit_program_request(req(n, t0));
        submitted[tcp_key(n)] = t0;
      }
      for (int k = 0; k < 20 && next > 0; ++k) {
        const auto key = tcp_key(static_cast<std::uint32_t>(rng() % next));
        if (m.process_packet(packet(key, t0), t0).handled()) ++shadow[key];
      }
      const auto r = m.tick(now);
      inserts_per_tick.emplace_back(now, r.programmed);
      for (const auto& id : r.programmed_ids) {
        const auto key = tcp_key(static_cast<std::uint32_t>(id.raw - 1));
        ASSERT_GE(m.lookup(key)->programmed_at, submitted[key] + c.program_latency);
      }
      for (const auto& ev : r.events) {
        ASSERT_EQ(ev.hw_packets, shadow[ev.key]);
        shadow.erase(ev.key);
        ++events;
      }
      ASSERT_LE(m.occupancy(), c.capacity);
    }
    EXPECT_EQ(events, m.stats().inserts - m.occupancy());

    for (const std::size_t w : {1u, 5u, 50u, 500u}) {
      std::size_t sum = 0;
      for (std::size_t i = 0; i < inserts_per_tick.size(); ++i) {
        sum += inserts_per_tick[i].second;
        if (i >= w) sum -= inserts_per_tick[i - w].second;
        const double window_s = static_cast<double>(w) * tick.seconds();
        ASSERT_LE(static_cast<double>(sum), c.learn_burst + window_s * c.learn_rate_per_sec + 1e-9)
            << "window " << w << " ending at tick " << i;
      }
    }

    for (const auto& ev : m.drain(now)) {
      EXPECT_EQ(ev.hw_packets, shadow[ev.key]);
      EXPECT_EQ(ev.reason, PurgeReason::Evicted);
    }
    EXPECT_EQ(m.occupancy(), 0u);
    EXPECT_EQ(m.stats().purges, m.stats().inserts);
  }
}
