#pragma once

#include <cstdint>
#include <random>

#include "flowgate/flow_key.hpp"
#include "flowgate/sim_time.hpp"

namespace flowgate::test_support {

inline FlowKey tcp_key(std::uint32_t n, std::uint16_t dport = 80) {
  return make_flow_key({kProtoTcp, 0x0A000000u | n, 0x0A800000u | (n * 7u + 1u),
                        static_cast<std::uint16_t>(1024 + n % 60000), dport, std::nullopt});
}

inline Packet packet(const FlowKey& key, SimTime ts, std::uint32_t len = 100,
                     PayloadClass cls = PayloadClass::Random, std::uint64_t seq = 0) {
  return Packet{ts, key, len, 0, cls, seq};
}

inline FlowKey random_key(std::mt19937_64& rng) {
  const std::uint8_t protos[] = {kProtoTcp, kProtoUdp, kProtoIcmp};
  return make_flow_key({protos[rng() % 3], static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()),
                        static_cast<std::uint16_t>(rng()), static_cast<std::uint16_t>(rng()), std::nullopt});
}

}  // namespace flowgate::test_support
