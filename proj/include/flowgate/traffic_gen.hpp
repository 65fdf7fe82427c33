#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flowgate/dpi.hpp"
#include "flowgate/errors.hpp"
#include "flowgate/flow_key.hpp"
#include "flowgate/hw_flow_manager.hpp"
#include "flowgate/probe.hpp"
#include "flowgate/sim_time.hpp"

namespace flowgate {

// Preamble + inter-frame gap + FCS, per packet, in rate <-> pps conversion.
inline constexpr double kDefaultWireOverhead = 24.0;
// Minimum-size frames on a 100 Gbps link: 64 B frame + 20 B preamble/IFG.
inline constexpr double kMaxWirePps = 100e9 / ((64.0 + 20.0) * 8.0);

inline double nominal_pps(double rate_bits_per_sec, double packet_size,
                          double overhead = kDefaultWireOverhead) {
  return rate_bits_per_sec / ((packet_size + overhead) * 8.0);
}

// Full experiment parameterization. Flow counts, birth rate and packet rate
// are given at the reference (line-rate) scale and multiplied by
// `scale_factor` before anything is generated.
struct ScenarioConfig {
  std::string name{"scenario"};
  std::uint64_t active_flows{10'000};
  double new_flows_per_sec{1'000.0};
  std::uint32_t packet_size{970};
  double rate_bits_per_sec{80e9};
  SimTime duration{SimTime::from_seconds(10)};
  SimTime warmup{};
  std::vector<std::pair<PayloadClass, double>> l7_mix{{PayloadClass::Random, 1.0}};
  std::uint64_t seed{1};
  double scale_factor{1e-3};
  double wire_overhead{kDefaultWireOverhead};
  SimTime min_flow_lifetime{SimTime::from_millis(1)};

  HwConfig hw;
  ProbeConfig probe;
  DpiConfig dpi;

  double pps() const { return nominal_pps(rate_bits_per_sec, packet_size, wire_overhead); }
  double scaled_pps() const { return pps() * scale_factor; }
  std::uint64_t scaled_active_flows() const {
    return std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::llround(static_cast<double>(active_flows) * scale_factor)));
  }
  double scaled_births_per_sec() const { return new_flows_per_sec * scale_factor; }
  bool bidirectional() const { return probe.mode == ProbeMode::InlineBi; }

  void validate() const {
    if (packet_size < kMinWireLen || packet_size > kMaxWireLen)
      throw ConfigError("scenario.packet_size", "must be in [" + std::to_string(kMinWireLen) + ", " +
                                                    std::to_string(kMaxWireLen) + "], got " +
                                                    std::to_string(packet_size));
    if (active_flows < 1) throw ConfigError("scenario.active_flows", "must be >= 1");
    if (!(new_flows_per_sec >= 0)) throw ConfigError("scenario.new_flows_per_sec", "must be >= 0");
    if (!(rate_bits_per_sec > 0)) throw ConfigError("scenario.rate_bits_per_sec", "must be > 0");
    if (!(wire_overhead >= 0)) throw ConfigError("scenario.wire_overhead", "must be >= 0");
    if (!(scale_factor > 0 && scale_factor <= 1))
      throw ConfigError("scenario.scale_factor", "must be in (0, 1]");
    if (duration.nanos == 0) throw ConfigError("scenario.duration_s", "must be > 0");
    if (warmup >= duration) throw ConfigError("scenario.warmup_s", "must be shorter than duration");
    if (pps() > kMaxWirePps)
      throw ConfigError("scenario.rate_bits_per_sec",
                        "packet rate " + std::to_string(pps() / 1e6) +
                            " Mpps exceeds the 100 Gbps ceiling of 148.8 Mpps");
    double sum = 0.0;
    for (const auto& [cls, frac] : l7_mix) {
      if (!(frac >= 0)) throw ConfigError("scenario.l7_mix", "fractions must be >= 0");
      sum += frac;
    }
    if (l7_mix.empty() || std::abs(sum - 1.0) > 1e-9)
      throw ConfigError("scenario.l7_mix", "fractions must sum to 1");
    if (new_flows_per_sec > 0) {
      const double lifetime = static_cast<double>(scaled_active_flows()) / scaled_births_per_sec();
      if (lifetime < min_flow_lifetime.seconds())
        throw ConfigError("scenario.new_flows_per_sec",
                          "steady state needs a flow lifetime of " + std::to_string(lifetime) +
                              " s, below the minimum " + std::to_string(min_flow_lifetime.seconds()) + " s");
      if (scaled_pps() < scaled_births_per_sec())
        throw ConfigError("scenario.rate_bits_per_sec",
                          "packet rate is lower than the flow birth rate (less than one packet per flow)");
    }
    hw.validate();
    probe.validate(hw);
  }
};

struct FlowSpec {
  FlowKey key;
  SimTime first_packet;
  SimTime gap;
  std::uint64_t packet_count{0};
  PayloadClass payload{PayloadClass::Random};
  std::uint16_t ingress_port{0};
};

struct FlowSchedule {
  std::vector<FlowSpec> flows;
  std::uint32_t packet_size{kMinWireLen};
  SimTime duration;
  double lifetime_s{0.0};
  std::uint64_t packets_per_flow{0};
  SimTime gap;
  double pps{0.0};

  std::uint64_t total_packets() const {
    std::uint64_t n = 0;
    for (const auto& f : flows) n += f.packet_count;
    return n;
  }
};

namespace detail {

inline double unit_interval(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline FlowKey draw_key(std::mt19937_64& rng) {
  FlowKey k;
  k.proto = (rng() & 1u) ? kProtoTcp : kProtoUdp;
  k.src_addr = 0x0A000000u | static_cast<std::uint32_t>(rng() & 0xFFFFFFu);
  k.dst_addr = 0x0A000000u | static_cast<std::uint32_t>(rng() & 0xFFFFFFu);
  k.src_port = static_cast<std::uint16_t>(1024 + rng() % 64512);
  k.dst_port = static_cast<std::uint16_t>(1 + rng() % 65535);
  return k;
}

// Emitted packet count for a flow truncated at `end`.
inline std::uint64_t packets_before(SimTime first, SimTime gap, std::uint64_t planned, SimTime end) {
  if (first >= end) return 0;
  const std::uint64_t fit = gap.nanos == 0 ? planned : (end.nanos - first.nanos + gap.nanos - 1) / gap.nanos;
  return std::min(planned, fit);
}

}  // namespace detail

// Steady-state schedule: every flow lives active/births seconds with an equal
// per-flow packet rate. An initial cohort with staggered remaining lifetimes
// keeps the concurrent flow count at `active_flows` from t=0; new flows are
// then born at a constant pace.
inline FlowSchedule build_schedule(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto active = cfg.scaled_active_flows();
  const double births = cfg.scaled_births_per_sec();
  const double pps = cfg.scaled_pps();
  const double duration_s = cfg.duration.seconds();

  FlowSchedule s;
  s.packet_size = cfg.packet_size;
  s.duration = cfg.duration;
  s.pps = pps;
  s.lifetime_s = births > 0 ? static_cast<double>(active) / births : duration_s;
  const double gap_s = static_cast<double>(active) / pps;
  s.gap = SimTime::from_seconds_f(gap_s);
  if (s.gap.nanos == 0) s.gap.nanos = 1;
  s.packets_per_flow = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(s.lifetime_s / gap_s)));

  std::mt19937_64 rng(cfg.seed);
  std::unordered_set<FlowKey, FlowKeyHash> used;
  auto pick_class = [&]() {
    const double u = detail::unit_interval(rng);
    double acc = 0.0;
    for (const auto& [cls, frac] : cfg.l7_mix) {
      acc += frac;
      if (u < acc) return cls;
    }
    return cfg.l7_mix.back().first;
  };
  auto add_flow = [&](SimTime first, std::uint64_t planned) {
    const auto count = detail::packets_before(first, s.gap, planned, cfg.duration);
    FlowKey key;
    do key = detail::draw_key(rng);
    while (!used.insert(key).second);
    const PayloadClass cls = pick_class();
    if (count == 0) return;
    const auto port = static_cast<std::uint16_t>(cfg.bidirectional() ? (s.flows.size() & 1u) : 0u);
    s.flows.push_back({key, first, s.gap, count, cls, port});
  };

  // Initial cohort: flow i has (i+1)/active of a lifetime left and a
  // low-discrepancy phase inside its first gap.
  constexpr double kGolden = 0.6180339887498949;
  for (std::uint64_t i = 0; i < active; ++i) {
    const double remaining = births > 0 ? s.lifetime_s * static_cast<double>(i + 1) / static_cast<double>(active)
                                        : duration_s;
    const auto planned = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(remaining / gap_s)));
    const double phase = std::fmod(static_cast<double>(i + 1) * kGolden, 1.0) * gap_s;
    add_flow(SimTime::from_seconds_f(phase), planned);
  }
  if (births > 0) {
    for (std::uint64_t k = 1;; ++k) {
      const SimTime birth = SimTime::from_seconds_f(static_cast<double>(k) / births);
      if (birth >= cfg.duration) break;
      add_flow(birth, s.packets_per_flow);
    }
  }
  return s;
}

// Merges the schedule's flows into one time-ordered stream without
// materializing it. Ties are broken by flow index.
class PacketGenerator {
 public:
  explicit PacketGenerator(const FlowSchedule& schedule)
      : schedule_(&schedule), emitted_(schedule.flows.size(), 0) {
    for (std::size_t i = 0; i < schedule.flows.size(); ++i)
      if (schedule.flows[i].packet_count > 0) heap_.push({schedule.flows[i].first_packet, i});
  }

  bool done() const { return heap_.empty(); }
  SimTime next_ts() const { return heap_.top().ts; }

  Packet next() {
    const auto top = heap_.top();
    heap_.pop();
    const auto& f = schedule_->flows[top.flow];
    const std::uint64_t seq = emitted_[top.flow]++;
    if (seq + 1 < f.packet_count) heap_.push({top.ts + f.gap, top.flow});
    return Packet{top.ts, f.key, schedule_->packet_size, f.ingress_port, f.payload, seq};
  }

  // Packets emitted so far, per flow (index into schedule.flows).
  const std::vector<std::uint64_t>& ledger() const { return emitted_; }

 private:
  struct Next {
    SimTime ts;
    std::size_t flow;
    bool operator>(const Next& o) const { return ts != o.ts ? ts > o.ts : flow > o.flow; }
  };

  const FlowSchedule* schedule_;
  std::vector<std::uint64_t> emitted_;
  std::priority_queue<Next, std::vector<Next>, std::greater<>> heap_;
};

inline std::vector<Packet> generate_stream(const FlowSchedule& schedule) {
  std::vector<Packet> out;
  out.reserve(static_cast<std::size_t>(schedule.total_packets()));
  PacketGenerator gen(schedule);
  while (!gen.done()) out.push_back(gen.next());
  return out;
}

// Trace files: JSON Lines with ts_ns, proto, src, dst, sport, dport, len, l7,
// seq. `port` and `vlan` are written only when set.
inline void write_trace(std::span<const Packet> packets, std::ostream& out) {
  for (const auto& p : packets) {
    nlohmann::ordered_json j;
    j["ts_ns"] = p.ts.nanos;
    j["proto"] = p.key.proto;
    j["src"] = format_ipv4(p.key.src_addr);
    j["dst"] = format_ipv4(p.key.dst_addr);
    j["sport"] = p.key.src_port;
    j["dport"] = p.key.dst_port;
    j["len"] = p.wire_len;
    j["l7"] = to_string(p.payload_class);
    j["seq"] = p.flow_seq;
    if (p.ingress_port != 0) j["port"] = p.ingress_port;
    if (p.key.vlan) j["vlan"] = *p.key.vlan;
    out << j.dump() << '\n';
  }
  if (!out) throw SinkWriteError("trace write failed");
}

inline std::vector<Packet> read_trace(std::istream& in) {
  std::vector<Packet> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto addr = [&](const char* f) {
        auto v = parse_ipv4(j.at(f).get<std::string>());
        if (!v) throw ParseError(line_no, std::string("bad IPv4 address in '") + f + "'");
        return *v;
      };
      RawHeader h;
      h.proto = j.at("proto").get<std::uint8_t>();
      h.src_addr = addr("src");
      h.dst_addr = addr("dst");
      h.src_port = j.at("sport").get<std::uint16_t>();
      h.dst_port = j.at("dport").get<std::uint16_t>();
      if (j.contains("vlan")) h.vlan = j.at("vlan").get<std::uint16_t>();
      Packet p;
      p.ts = SimTime{j.at("ts_ns").get<std::uint64_t>()};
      p.key = make_flow_key(h);
      p.wire_len = j.at("len").get<std::uint32_t>();
      if (p.wire_len < kMinWireLen || p.wire_len > kMaxWireLen)
        throw ParseError(line_no, "len out of range");
      auto cls = payload_class_from_string(j.at("l7").get<std::string>());
      if (!cls) throw ParseError(line_no, "unknown l7 class");
      p.payload_class = *cls;
      p.flow_seq = j.at("seq").get<std::uint64_t>();
      if (j.contains("port")) p.ingress_port = j.at("port").get<std::uint16_t>();
      if (!out.empty() && p.ts < out.back().ts) throw ParseError(line_no, "timestamps go backwards");
      out.push_back(p);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace flowgate
