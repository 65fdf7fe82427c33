#include <gtest/gtest.h>

#include <string>

#include "flowgate/scenario_io.hpp"

using namespace flowgate;
using namespace flowgate::literals;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ScenarioParse, EmptyObjectGivesDefaults) {
  const auto cfg = parse_scenario("{}");
  EXPECT_EQ(cfg.active_flows, 10'000u);
  EXPECT_EQ(cfg.packet_size, 970u);
  EXPECT_EQ(cfg.hw.capacity, HwConfig{}.capacity);
}

TEST(ScenarioParse, ReadsEverySection) {
  const auto cfg = parse_scenario(R"({
    "scenario": {"name": "x", "active_flows": 20000, "new_flows_per_sec": 2000, "rate_gbps": 40,
                 "duration_s": 5, "warmup_s": 1, "seed": 9, "l7_mix": {"TLS": 0.25, "Random": 0.75}},
    "hw": {"capacity": 1024, "program_latency_us": 20, "idle_timeout_s": 3},
    "probe": {"mode": "inline-bi", "workers": 2, "dpi": false, "tick_us": 500,
              "policy": [{"match": {"l7": "Spotify"}, "action": "pass", "priority": 5},
                         {"action": "drop"}]},
    "dpi": {"max_dpi_packets": 6, "dissectors": [{"name": "t", "class": "TLS", "confirm": 2, "reject": 3}]}
  })");
  EXPECT_EQ(cfg.name, "x");
  EXPECT_DOUBLE_EQ(cfg.rate_bits_per_sec, 40e9);
  EXPECT_EQ(cfg.duration, 5_s);
  EXPECT_EQ(cfg.warmup, 1_s);
  ASSERT_EQ(cfg.l7_mix.size(), 2u);
  EXPECT_EQ(cfg.hw.capacity, 1024u);
  EXPECT_EQ(cfg.hw.program_latency, 20_us);
  EXPECT_EQ(cfg.probe.mode, ProbeMode::InlineBi);
  EXPECT_FALSE(cfg.probe.dpi_enabled);
  EXPECT_EQ(cfg.probe.tick, 500_us);
  ASSERT_EQ(cfg.probe.policy.size(), 2u);
  EXPECT_EQ(cfg.probe.policy[0].match.l7, "Spotify");
  EXPECT_EQ(cfg.probe.policy[1].action, FlowAction::drop());
  ASSERT_EQ(cfg.dpi.dissectors.size(), 1u);
  EXPECT_EQ(cfg.dpi.max_dpi_packets, 6u);
}

TEST(ScenarioParse, UnknownKeysNameTheField) {
  EXPECT_NE(error_of(R"({"scenario": {"packet_sise": 100}})").find("scenario.packet_sise"), std::string::npos);
  EXPECT_NE(error_of(R"({"hw": {"capacty": 1}})").find("hw.capacty"), std::string::npos);
  EXPECT_NE(error_of(R"({"probe": {"policy": [{"action": "drop", "prio": 1}]}})").find("probe.policy[0].prio"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"extra": 1})").find("extra"), std::string::npos);
}

TEST(ScenarioParse, PacketSizeTenIsRejectedByName) {
  EXPECT_NE(error_of(R"({"scenario": {"packet_size": 10}})").find("scenario.packet_size"), std::string::npos);
}

TEST(ScenarioParse, TypeAndRangeErrors) {
  EXPECT_NE(error_of(R"({"probe": {"workers": -1}})").find("probe.workers"), std::string::npos);
  EXPECT_NE(error_of(R"({"probe": {"dpi": "yes"}})").find("probe.dpi"), std::string::npos);
  EXPECT_NE(error_of(R"({"probe": {"mode": "sideways"}})").find("probe.mode"), std::string::npos);
  EXPECT_NE(error_of(R"({"scenario": {"packet_size": 99999999999}})").find("scenario.packet_size"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"hw": {"preset": "bogus"}})").find("hw.preset"), std::string::npos);
  EXPECT_NE(error_of("{not json").find("scenario file"), std::string::npos);
}

TEST(ScenarioParse, PresetScalesWithScenario) {
  const auto cfg = parse_scenario(R"({"scenario": {"scale_factor": 0.001}, "hw": {"preset": "nt200a02", "streams": 16,
                                      "idle_timeout_s": 5}})");
  EXPECT_EQ(cfg.hw.capacity, 140'000u);
  EXPECT_DOUBLE_EQ(cfg.hw.learn_rate_per_sec, 3000.0);
  EXPECT_EQ(cfg.hw.hw_idle_timeout, 5_s);
}

TEST(ScenarioRoundTrip, SerializeParseSerializeIsStable) {
  const auto cfg = parse_scenario(R"({
    "scenario": {"active_flows": 20000, "new_flows_per_sec": 2000, "l7_mix": {"DNS": 0.5, "HTTP": 0.5}},
    "probe": {"mode": "inline-uni", "policy": [{"match": {"dst_port": 53, "proto": 17}, "action": "pass:1"}]},
    "dpi": {"dissectors": [{"name": "d", "class": "DNS", "confirm": 1, "reject": 2}]}
  })");
  const auto once = scenario_to_json(cfg).dump();
  const auto twice = scenario_to_json(parse_scenario(once)).dump();
  EXPECT_EQ(once, twice);
}
