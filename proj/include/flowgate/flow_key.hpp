#pragma once

#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "flowgate/sim_time.hpp"

namespace flowgate {

inline constexpr std::uint8_t kProtoIcmp = 1;
inline constexpr std::uint8_t kProtoTcp = 6;
inline constexpr std::uint8_t kProtoUdp = 17;

inline constexpr bool has_ports(std::uint8_t proto) {
  return proto == kProtoTcp || proto == kProtoUdp;
}

// Unidirectional IPv4 5-tuple (+ optional VLAN). Endpoints are never sorted:
// A->B and B->A are distinct flows.
struct FlowKey {
  std::uint8_t proto{0};
  std::uint32_t src_addr{0};
  std::uint32_t dst_addr{0};
  std::uint16_t src_port{0};
  std::uint16_t dst_port{0};
  std::optional<std::uint16_t> vlan;

  friend bool operator==(const FlowKey&, const FlowKey&) = default;
  friend auto operator<=>(const FlowKey&, const FlowKey&) = default;
};

// Header fields as parsed off the wire, before canonicalization.
struct RawHeader {
  std::uint8_t proto{0};
  std::uint32_t src_addr{0};
  std::uint32_t dst_addr{0};
  std::uint16_t src_port{0};
  std::uint16_t dst_port{0};
  std::optional<std::uint16_t> vlan;
};

inline FlowKey make_flow_key(const RawHeader& h) {
  FlowKey key{h.proto, h.src_addr, h.dst_addr, 0, 0, std::nullopt};
  if (has_ports(h.proto)) {
    key.src_port = h.src_port;
    key.dst_port = h.dst_port;
  }
  if (h.vlan) key.vlan = static_cast<std::uint16_t>(*h.vlan & 0x0FFFu);
  return key;
}

inline std::string format_ipv4(std::uint32_t addr) {
  std::string out;
  out.reserve(15);
  for (int shift = 24; shift >= 0; shift -= 8) {
    out += std::to_string((addr >> shift) & 0xFFu);
    if (shift) out += '.';
  }
  return out;
}

inline std::optional<std::uint32_t> parse_ipv4(std::string_view s) {
  std::uint32_t addr = 0;
  const char* p = s.data();
  const char* end = s.data() + s.size();
  for (int octet = 0; octet < 4; ++octet) {
    unsigned v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || next == p || v > 255) return std::nullopt;
    addr = (addr << 8) | v;
    p = next;
    if (octet < 3) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return addr;
}

// 64-bit finalizer (splitmix64).
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_flow_key(const FlowKey& k, std::uint64_t seed) {
  const std::uint64_t w0 = (std::uint64_t{k.src_addr} << 32) | k.dst_addr;
  const std::uint64_t w1 = (std::uint64_t{k.src_port} << 48) | (std::uint64_t{k.dst_port} << 32) |
                           (std::uint64_t{k.proto} << 16) |
                           (k.vlan ? (0x1000u | *k.vlan) : 0u);
  std::uint64_t h = mix64(seed ^ w0);
  h = mix64(h ^ w1 ^ 0x5851F42D4C957F2DULL);
  return h;
}

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& k) const noexcept {
    return static_cast<std::size_t>(hash_flow_key(k, 0x243F6A8885A308D3ULL));
  }
};

// Ground-truth L7 tag attached by the traffic generator. Random is the DPI
// worst case: no dissector ever matches.
enum class PayloadClass : std::uint8_t { Random, Http, Tls, Dns, Quic, Spotify, Netflix, YouTube };

inline constexpr std::array<PayloadClass, 8> kAllPayloadClasses{
    PayloadClass::Random, PayloadClass::Http,    PayloadClass::Tls,     PayloadClass::Dns,
    PayloadClass::Quic,   PayloadClass::Spotify, PayloadClass::Netflix, PayloadClass::YouTube};

inline constexpr std::string_view to_string(PayloadClass c) {
  switch (c) {
    case PayloadClass::Random: return "Random";
    case PayloadClass::Http: return "HTTP";
    case PayloadClass::Tls: return "TLS";
    case PayloadClass::Dns: return "DNS";
    case PayloadClass::Quic: return "QUIC";
    case PayloadClass::Spotify: return "Spotify";
    case PayloadClass::Netflix: return "Netflix";
    case PayloadClass::YouTube: return "YouTube";
  }
  return "Random";
}

inline std::optional<PayloadClass> payload_class_from_string(std::string_view s) {
  for (auto c : kAllPayloadClasses)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

// Minimum frame size accepted on the wire, FCS excluded (64 bytes with FCS).
inline constexpr std::uint32_t kMinWireLen = 60;
inline constexpr std::uint32_t kMaxWireLen = 9000;

struct Packet {
  SimTime ts;
  FlowKey key;
  std::uint32_t wire_len{kMinWireLen};
  std::uint16_t ingress_port{0};
  PayloadClass payload_class{PayloadClass::Random};
  std::uint64_t flow_seq{0};

  friend bool operator==(const Packet&, const Packet&) = default;
};

// Toeplitz hash as used by NIC receive-side scaling.
namespace rss {

inline constexpr std::array<std::uint8_t, 40> kDefaultKey{
    0x6d, 0x5a, 0x56, 0xda, 0x25, 0x5b, 0x0e, 0xc2, 0x41, 0x67, 0x25, 0x3d, 0x43, 0xa3,
    0x8f, 0xb0, 0xd0, 0xca, 0x2b, 0xcb, 0xae, 0x7b, 0x30, 0xb4, 0x77, 0xcb, 0x2d, 0xa3,
    0x80, 0x30, 0xf2, 0x0c, 0x6a, 0x42, 0xb7, 0x3b, 0xbe, 0xac, 0x01, 0xfa};

template <std::size_t N>
constexpr std::uint32_t toeplitz(const std::array<std::uint8_t, N>& input,
                                 const std::array<std::uint8_t, 40>& key = kDefaultKey) {
  static_assert(N + 4 <= 40, "input too long for key");
  std::uint32_t result = 0;
  std::uint32_t window = (std::uint32_t{key[0]} << 24) | (std::uint32_t{key[1]} << 16) |
                         (std::uint32_t{key[2]} << 8) | key[3];
  for (std::size_t i = 0; i < N; ++i) {
    for (int bit = 7; bit >= 0; --bit) {
      if (input[i] & (1u << bit)) result ^= window;
      window = (window << 1) | ((key[i + 4] >> bit) & 1u);
    }
  }
  return result;
}

// 4-tuple for TCP/UDP, 2-tuple otherwise (standard RSS input selection).
inline std::uint32_t hash_key(const FlowKey& k) {
  auto put32 = [](std::uint8_t* p, std::uint32_t v) {
    p[0] = static_cast<std::uint8_t>(v >> 24);
    p[1] = static_cast<std::uint8_t>(v >> 16);
    p[2] = static_cast<std::uint8_t>(v >> 8);
    p[3] = static_cast<std::uint8_t>(v);
  };
  if (has_ports(k.proto)) {
    std::array<std::uint8_t, 12> in{};
    put32(in.data(), k.src_addr);
    put32(in.data() + 4, k.dst_addr);
    in[8] = static_cast<std::uint8_t>(k.src_port >> 8);
    in[9] = static_cast<std::uint8_t>(k.src_port);
    in[10] = static_cast<std::uint8_t>(k.dst_port >> 8);
    in[11] = static_cast<std::uint8_t>(k.dst_port);
    return toeplitz(in);
  }
  std::array<std::uint8_t, 8> in{};
  put32(in.data(), k.src_addr);
  put32(in.data() + 4, k.dst_addr);
  return toeplitz(in);
}

}  // namespace rss

}  // namespace flowgate
