#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowgate/errors.hpp"
#include "flowgate/flow_key.hpp"

namespace flowgate {

// A toy protocol dissector. It matches on the generator's ground-truth payload
// class instead of byte patterns: confirm after `packets_to_confirm` matching
// packets, give up after `packets_to_reject` non-matching ones.
struct DissectorSpec {
  std::string name;
  PayloadClass match_class{PayloadClass::Http};
  std::uint32_t packets_to_confirm{1};
  std::uint32_t packets_to_reject{1};
};

enum class VerdictKind : std::uint8_t { Detecting, Detected, Unknown };

struct DpiVerdict {
  VerdictKind kind{VerdictKind::Detecting};
  std::string protocol;  // set only when Detected

  bool final() const noexcept { return kind != VerdictKind::Detecting; }

  // Label used in exports and policy matching.
  std::string label() const {
    switch (kind) {
      case VerdictKind::Detected: return protocol;
      case VerdictKind::Detecting: return "Detecting";
      case VerdictKind::Unknown: break;
    }
    return "Unknown";
  }

  friend bool operator==(const DpiVerdict&, const DpiVerdict&) = default;
};

struct DissectorProgress {
  std::uint32_t matched{0};
  std::uint32_t mismatched{0};
  bool rejected{false};
};

// Per-flow inspection state. `scratch` stands in for the dissection buffers a
// real engine keeps per flow; it is released as soon as a verdict is reached.
struct DpiState {
  std::uint32_t inspected{0};
  std::vector<DissectorProgress> progress;
  DpiVerdict verdict;
  std::vector<std::byte> scratch;

  std::size_t scratch_bytes() const noexcept { return scratch.size(); }

  std::size_t live_candidates() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(progress.begin(), progress.end(), [](const auto& p) { return !p.rejected; }));
  }
};

class FeedAfterVerdict : public std::logic_error {
 public:
  FeedAfterVerdict() : std::logic_error("dpi_feed called on a flow with a final verdict") {}
};

class DuplicateDissector : public Error {
 public:
  explicit DuplicateDissector(const std::string& name)
      : Error("dissector already registered: " + name) {}
};

struct DpiConfig {
  std::uint32_t max_dpi_packets{8};
  std::size_t scratch_bytes{1024};
  std::vector<DissectorSpec> dissectors;  // empty => builtin set

  static std::vector<DissectorSpec> builtin_dissectors() {
    return {
        {"HTTP", PayloadClass::Http, 2, 4},       {"TLS", PayloadClass::Tls, 3, 6},
        {"DNS", PayloadClass::Dns, 1, 2},         {"QUIC", PayloadClass::Quic, 2, 5},
        {"Spotify", PayloadClass::Spotify, 3, 8}, {"Netflix", PayloadClass::Netflix, 3, 8},
        {"YouTube", PayloadClass::YouTube, 3, 7},
    };
  }
};

// Dissector registry plus the per-flow detect/reject/give-up state machine.
// Immutable once setup is done; safe to share read-only between workers.
class DpiEngine {
 public:
  explicit DpiEngine(std::uint32_t max_dpi_packets = 8, std::size_t scratch_bytes = 1024)
      : max_dpi_packets_(max_dpi_packets), scratch_bytes_(scratch_bytes) {
    if (max_dpi_packets_ == 0) throw ConfigError("dpi.max_dpi_packets", "must be >= 1");
  }

  static DpiEngine from_config(const DpiConfig& cfg) {
    DpiEngine engine(cfg.max_dpi_packets, cfg.scratch_bytes);
    const auto specs = cfg.dissectors.empty() ? DpiConfig::builtin_dissectors() : cfg.dissectors;
    for (const auto& spec : specs) engine.register_dissector(spec);
    return engine;
  }

  DpiEngine& register_dissector(DissectorSpec spec) {
    for (const auto& d : dissectors_)
      if (d.name == spec.name) throw DuplicateDissector(spec.name);
    if (spec.name.empty()) throw ConfigError("dpi.dissectors.name", "must not be empty");
    if (spec.packets_to_confirm < 1 || spec.packets_to_reject < 1)
      throw ConfigError("dpi.dissectors." + spec.name, "confirm/reject counts must be >= 1");
    if (spec.packets_to_confirm > max_dpi_packets_)
      throw ConfigError("dpi.dissectors." + spec.name + ".confirm",
                        "exceeds max_dpi_packets (" + std::to_string(max_dpi_packets_) + ")");
    dissectors_.push_back(std::move(spec));
    return *this;
  }

  const std::vector<DissectorSpec>& dissectors() const noexcept { return dissectors_; }
  std::uint32_t max_dpi_packets() const noexcept { return max_dpi_packets_; }
  std::size_t scratch_size() const noexcept { return scratch_bytes_; }

  DpiState start_flow() const {
    DpiState st;
    st.progress.resize(dissectors_.size());
    st.scratch.resize(scratch_bytes_);
    return st;
  }

  const DpiVerdict& feed(DpiState& st, const Packet& pkt) const {
    if (st.verdict.final()) throw FeedAfterVerdict{};
    ++st.inspected;

    const DissectorSpec* confirmed = nullptr;
    for (std::size_t i = 0; i < dissectors_.size(); ++i) {
      auto& prog = st.progress[i];
      if (prog.rejected) continue;
      const auto& spec = dissectors_[i];
      if (pkt.payload_class == spec.match_class) {
        if (++prog.matched >= spec.packets_to_confirm && confirmed == nullptr) confirmed = &spec;
      } else if (++prog.mismatched >= spec.packets_to_reject) {
        prog.rejected = true;
      }
    }

    if (confirmed != nullptr) {
      st.verdict = {VerdictKind::Detected, confirmed->name};
    } else if ((!dissectors_.empty() && st.live_candidates() == 0) ||
               st.inspected >= max_dpi_packets_) {
      st.verdict = {VerdictKind::Unknown, {}};
    }
    if (st.verdict.final()) release(st);
    return st.verdict;
  }

  static void release(DpiState& st) {
    st.scratch.clear();
    st.scratch.shrink_to_fit();
  }

 private:
  std::uint32_t max_dpi_packets_;
  std::size_t scratch_bytes_;
  std::vector<DissectorSpec> dissectors_;
};

}  // namespace flowgate
