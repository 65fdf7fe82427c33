#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace flowgate {

// Egress sink that only counts: used by passive mode, where "forwarding" a
// flow in hardware means keeping its counters without delivering packets.
inline constexpr std::uint16_t kAnalyticsPort = 0xFFFF;
// Placeholder in policy rules meaning "the bridge peer of the ingress port".
inline constexpr std::uint16_t kPeerPort = 0xFFFE;

struct FlowAction {
  enum class Kind : std::uint8_t { ForwardToHost, PassTo, Drop };

  Kind kind{Kind::ForwardToHost};
  std::uint16_t egress_port{0};

  static constexpr FlowAction forward_to_host() { return {Kind::ForwardToHost, 0}; }
  static constexpr FlowAction pass_to(std::uint16_t port) { return {Kind::PassTo, port}; }
  static constexpr FlowAction drop() { return {Kind::Drop, 0}; }

  constexpr bool offloadable() const { return kind != Kind::ForwardToHost; }

  friend constexpr bool operator==(const FlowAction&, const FlowAction&) = default;

  std::string to_string() const {
    switch (kind) {
      case Kind::ForwardToHost: return "host";
      case Kind::Drop: return "drop";
      case Kind::PassTo:
        if (egress_port == kAnalyticsPort) return "analytics";
        if (egress_port == kPeerPort) return "pass";
        return "pass:" + std::to_string(egress_port);
    }
    return "host";
  }

  // Accepts "host", "drop", "pass", "analytics" and "pass:<port>".
  static std::optional<FlowAction> parse(const std::string& s) {
    if (s == "host") return forward_to_host();
    if (s == "drop") return drop();
    if (s == "pass") return pass_to(kPeerPort);
    if (s == "analytics") return pass_to(kAnalyticsPort);
    if (s.rfind("pass:", 0) == 0) {
      try {
        std::size_t used = 0;
        const unsigned long port = std::stoul(s.substr(5), &used);
        if (used != s.size() - 5 || port >= kPeerPort) return std::nullopt;
        return pass_to(static_cast<std::uint16_t>(port));
      } catch (const std::exception&) {
        return std::nullopt;
      }
    }
    return std::nullopt;
  }
};

}  // namespace flowgate
