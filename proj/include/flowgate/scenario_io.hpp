#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>

#include <json.hpp>

#include "flowgate/dpi.hpp"
#include "flowgate/errors.hpp"
#include "flowgate/flow_action.hpp"
#include "flowgate/hw_flow_manager.hpp"
#include "flowgate/probe.hpp"
#include "flowgate/traffic_gen.hpp"

namespace flowgate {

enum class HwPreset : std::uint8_t { Desk, Nt200a02 };

inline std::optional<HwPreset> hw_preset_from_string(std::string_view s) {
  if (s == "desk") return HwPreset::Desk;
  if (s == "nt200a02") return HwPreset::Nt200a02;
  return std::nullopt;
}

// The adapter preset is expressed at line-rate scale, so it shrinks with the
// scenario. The desk preset is already desk-sized.
inline HwConfig hw_preset(HwPreset p, double scale_factor, std::uint32_t streams = 1) {
  if (p == HwPreset::Desk) return HwConfig::desk();
  return HwConfig::nt200a02(streams).scaled(scale_factor);
}

namespace scenario_detail {

using nlohmann::json;

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(field(key), "must be true or false");
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
          throw ConfigError(field(key), "must be a non-negative integer");
        const auto u = v.get<std::uint64_t>();
        if (u > std::numeric_limits<T>::max()) throw ConfigError(field(key), "out of range");
        out = static_cast<T>(u);
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(field(key), "must be a number");
        out = v.get<T>();
        if (!std::isfinite(out)) throw ConfigError(field(key), "must be finite");
      } else {
        if (!v.is_string()) throw ConfigError(field(key), "must be a string");
        out = v.get<std::string>();
      }
    } catch (const json::exception& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  void get_seconds(const std::string& key, SimTime& out, double unit) {
    if (!has(key)) return;
    double v = 0;
    get(key, v);
    if (v < 0) throw ConfigError(field(key), "must be >= 0");
    out = SimTime::from_seconds_f(v * unit);
  }

  void reject_unknown() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.contains(k)) throw ConfigError(field(k), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_hw(Section s, HwConfig& hw) {
  s.get("capacity", hw.capacity);
  s.get("buckets_per_slot", hw.buckets_per_slot);
  s.get("max_kicks", hw.max_kicks);
  s.get("learn_rate_per_sec", hw.learn_rate_per_sec);
  s.get("learn_burst", hw.learn_burst);
  s.get("degrade_threshold", hw.degrade_threshold);
  s.get("degrade_floor", hw.degrade_floor);
  s.get_seconds("program_latency_us", hw.program_latency, 1e-6);
  s.get_seconds("idle_timeout_s", hw.hw_idle_timeout, 1.0);
  s.get("hash_seed1", hw.hash_seed1);
  s.get("hash_seed2", hw.hash_seed2);
  s.get("streams", hw.streams);
  s.get("ports", hw.ports);
  s.reject_unknown();
}

inline PolicyRule read_rule(const json& j, const std::string& path) {
  Section s(j, path);
  PolicyRule rule;
  if (s.has("match")) {
    Section m(s.raw("match"), path + ".match");
    std::string l7;
    if (m.has("l7")) {
      m.get("l7", l7);
      rule.match.l7 = l7;
    }
    std::uint8_t proto = 0;
    std::uint16_t port = 0;
    if (m.has("proto")) {
      m.get("proto", proto);
      rule.match.proto = proto;
    }
    if (m.has("src_port")) {
      m.get("src_port", port);
      rule.match.src_port = port;
    }
    if (m.has("dst_port")) {
      m.get("dst_port", port);
      rule.match.dst_port = port;
    }
    m.reject_unknown();
  }
  std::string action;
  s.get("action", action);
  if (!s.has("action")) throw ConfigError(path + ".action", "required");
  auto parsed = FlowAction::parse(action);
  if (!parsed) throw ConfigError(path + ".action", "unrecognized action '" + action + "'");
  rule.action = *parsed;
  std::int64_t prio = 0;
  if (s.has("priority")) {
    const auto& v = s.raw("priority");
    if (!v.is_number_integer()) throw ConfigError(path + ".priority", "must be an integer");
    prio = v.get<std::int64_t>();
  }
  rule.priority = static_cast<int>(prio);
  s.reject_unknown();
  return rule;
}

inline void read_probe(Section s, ProbeConfig& p) {
  if (s.has("mode")) {
    std::string mode;
    s.get("mode", mode);
    auto m = probe_mode_from_string(mode);
    if (!m) throw ConfigError("probe.mode", "must be passive, inline-uni or inline-bi");
    p.mode = *m;
  }
  s.get("workers", p.workers);
  s.get("host_queue_depth", p.host_queue_depth);
  s.get("host_budget_units_per_tick", p.host_budget_units_per_tick);
  s.get("cost_base", p.cost_base);
  s.get("cost_dpi", p.cost_dpi);
  s.get("cost_new_flow", p.cost_new_flow);
  s.get("cache_flows", p.cache_flows);
  s.get("cost_cache_miss", p.cost_cache_miss);
  s.get("dpi", p.dpi_enabled);
  s.get("offload", p.offload_enabled);
  s.get("export_batch", p.export_batch);
  s.get_seconds("tick_us", p.tick, 1e-6);
  s.get_seconds("idle_timeout_s", p.host_idle_timeout, 1.0);
  s.get("max_entries", p.max_entries);
  if (s.has("policy")) {
    const auto& arr = s.raw("policy");
    if (!arr.is_array()) throw ConfigError("probe.policy", "must be an array");
    p.policy.clear();
    for (std::size_t i = 0; i < arr.size(); ++i)
      p.policy.push_back(read_rule(arr[i], "probe.policy[" + std::to_string(i) + "]"));
  }
  s.reject_unknown();
}

inline void read_dpi(Section s, DpiConfig& d) {
  s.get("max_dpi_packets", d.max_dpi_packets);
  s.get("scratch_bytes", d.scratch_bytes);
  if (s.has("dissectors")) {
    const auto& arr = s.raw("dissectors");
    if (!arr.is_array()) throw ConfigError("dpi.dissectors", "must be an array");
    d.dissectors.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "dpi.dissectors[" + std::to_string(i) + "]";
      Section ds(arr[i], path);
      DissectorSpec spec;
      std::string cls;
      ds.get("name", spec.name);
      ds.get("class", cls);
      auto pc = payload_class_from_string(cls);
      if (!pc) throw ConfigError(path + ".class", "unknown payload class '" + cls + "'");
      spec.match_class = *pc;
      ds.get("confirm", spec.packets_to_confirm);
      ds.get("reject", spec.packets_to_reject);
      ds.reject_unknown();
      d.dissectors.push_back(spec);
    }
  }
  s.reject_unknown();
}

}  // namespace scenario_detail

// Strict scenario reader: unknown keys and mistyped values are errors that
// name the offending field. Defaults apply to anything left out.
inline ScenarioConfig scenario_from_json(const nlohmann::json& doc) {
  using scenario_detail::Section;
  Section top(doc, "");
  ScenarioConfig cfg;

  if (top.has("scenario")) {
    Section s(top.raw("scenario"), "scenario");
    s.get("name", cfg.name);
    s.get("active_flows", cfg.active_flows);
    s.get("new_flows_per_sec", cfg.new_flows_per_sec);
    s.get("packet_size", cfg.packet_size);
    s.get("rate_bits_per_sec", cfg.rate_bits_per_sec);
    if (s.has("rate_gbps")) {
      double g = 0;
      s.get("rate_gbps", g);
      cfg.rate_bits_per_sec = g * 1e9;
    }
    s.get_seconds("duration_s", cfg.duration, 1.0);
    s.get_seconds("warmup_s", cfg.warmup, 1.0);
    s.get("seed", cfg.seed);
    s.get("scale_factor", cfg.scale_factor);
    s.get("wire_overhead", cfg.wire_overhead);
    s.get_seconds("min_flow_lifetime_ms", cfg.min_flow_lifetime, 1e-3);
    if (s.has("l7_mix")) {
      const auto& mix = s.raw("l7_mix");
      if (!mix.is_object()) throw ConfigError("scenario.l7_mix", "must be an object");
      cfg.l7_mix.clear();
      for (const auto& [name, frac] : mix.items()) {
        auto cls = payload_class_from_string(name);
        if (!cls) throw ConfigError("scenario.l7_mix." + name, "unknown payload class");
        if (!frac.is_number()) throw ConfigError("scenario.l7_mix." + name, "must be a number");
        cfg.l7_mix.emplace_back(*cls, frac.get<double>());
      }
    }
    s.reject_unknown();
  }

  if (top.has("hw")) {
    const auto& hwj = top.raw("hw");
    if (hwj.is_object() && hwj.contains("preset")) {
      const auto& pj = hwj.at("preset");
      auto preset = pj.is_string() ? hw_preset_from_string(pj.get<std::string>()) : std::nullopt;
      if (!preset) throw ConfigError("hw.preset", "must be desk or nt200a02");
      std::uint32_t streams = 1;
      if (hwj.contains("streams") && hwj.at("streams").is_number_unsigned())
        streams = hwj.at("streams").get<std::uint32_t>();
      cfg.hw = hw_preset(*preset, cfg.scale_factor, streams);
      auto rest = hwj;
      rest.erase("preset");
      scenario_detail::read_hw(Section(rest, "hw"), cfg.hw);
    } else {
      scenario_detail::read_hw(Section(hwj, "hw"), cfg.hw);
    }
  }
  if (top.has("probe")) scenario_detail::read_probe(Section(top.raw("probe"), "probe"), cfg.probe);
  if (top.has("dpi")) scenario_detail::read_dpi(Section(top.raw("dpi"), "dpi"), cfg.dpi);
  top.reject_unknown();

  cfg.validate();
  return cfg;
}

inline ScenarioConfig parse_scenario(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("scenario file", e.what());
  }
  return scenario_from_json(doc);
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--scenario", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

inline nlohmann::ordered_json scenario_to_json(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  auto& s = j["scenario"];
  s["name"] = cfg.name;
  s["active_flows"] = cfg.active_flows;
  s["new_flows_per_sec"] = cfg.new_flows_per_sec;
  s["packet_size"] = cfg.packet_size;
  s["rate_bits_per_sec"] = cfg.rate_bits_per_sec;
  s["duration_s"] = cfg.duration.seconds();
  s["warmup_s"] = cfg.warmup.seconds();
  s["seed"] = cfg.seed;
  s["scale_factor"] = cfg.scale_factor;
  s["wire_overhead"] = cfg.wire_overhead;
  s["min_flow_lifetime_ms"] = cfg.min_flow_lifetime.seconds() * 1e3;
  for (const auto& [cls, frac] : cfg.l7_mix) s["l7_mix"][std::string(to_string(cls))] = frac;

  auto& h = j["hw"];
  h["capacity"] = cfg.hw.capacity;
  h["buckets_per_slot"] = cfg.hw.buckets_per_slot;
  h["max_kicks"] = cfg.hw.max_kicks;
  h["learn_rate_per_sec"] = cfg.hw.learn_rate_per_sec;
  h["learn_burst"] = cfg.hw.learn_burst;
  h["degrade_threshold"] = cfg.hw.degrade_threshold;
  h["degrade_floor"] = cfg.hw.degrade_floor;
  h["program_latency_us"] = static_cast<double>(cfg.hw.program_latency.nanos) / 1e3;
  h["idle_timeout_s"] = cfg.hw.hw_idle_timeout.seconds();
  h["hash_seed1"] = cfg.hw.hash_seed1;
  h["hash_seed2"] = cfg.hw.hash_seed2;
  h["streams"] = cfg.hw.streams;
  h["ports"] = cfg.hw.ports;

  auto& p = j["probe"];
  p["mode"] = std::string(to_string(cfg.probe.mode));
  p["workers"] = cfg.probe.workers;
  p["host_queue_depth"] = cfg.probe.host_queue_depth;
  p["host_budget_units_per_tick"] = cfg.probe.host_budget_units_per_tick;
  p["cost_base"] = cfg.probe.cost_base;
  p["cost_dpi"] = cfg.probe.cost_dpi;
  p["cost_new_flow"] = cfg.probe.cost_new_flow;
  p["cache_flows"] = cfg.probe.cache_flows;
  p["cost_cache_miss"] = cfg.probe.cost_cache_miss;
  p["dpi"] = cfg.probe.dpi_enabled;
  p["offload"] = cfg.probe.offload_enabled;
  p["export_batch"] = cfg.probe.export_batch;
  p["tick_us"] = static_cast<double>(cfg.probe.tick.nanos) / 1e3;
  p["idle_timeout_s"] = cfg.probe.host_idle_timeout.seconds();
  p["max_entries"] = cfg.probe.max_entries;
  p["policy"] = nlohmann::ordered_json::array();
  for (const auto& r : cfg.probe.policy) {
    nlohmann::ordered_json rj;
    rj["match"] = nlohmann::ordered_json::object();
    if (r.match.l7) rj["match"]["l7"] = *r.match.l7;
    if (r.match.proto) rj["match"]["proto"] = *r.match.proto;
    if (r.match.src_port) rj["match"]["src_port"] = *r.match.src_port;
    if (r.match.dst_port) rj["match"]["dst_port"] = *r.match.dst_port;
    rj["action"] = r.action.to_string();
    rj["priority"] = r.priority;
    p["policy"].push_back(rj);
  }

  auto& d = j["dpi"];
  d["max_dpi_packets"] = cfg.dpi.max_dpi_packets;
  d["scratch_bytes"] = cfg.dpi.scratch_bytes;
  if (!cfg.dpi.dissectors.empty()) {
    d["dissectors"] = nlohmann::ordered_json::array();
    for (const auto& ds : cfg.dpi.dissectors)
      d["dissectors"].push_back({{"name", ds.name},
                                 {"class", std::string(to_string(ds.match_class))},
                                 {"confirm", ds.packets_to_confirm},
                                 {"reject", ds.packets_to_reject}});
  }
  return j;
}

}  // namespace flowgate
