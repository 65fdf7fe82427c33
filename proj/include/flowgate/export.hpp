#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flowgate/errors.hpp"
#include "flowgate/flow_key.hpp"
#include "flowgate/sim_time.hpp"

namespace flowgate {

enum class EndReason : std::uint8_t { HostTimeout, HwPurge, Shutdown };

inline constexpr std::string_view to_string(EndReason r) {
  switch (r) {
    case EndReason::HostTimeout: return "HostTimeout";
    case EndReason::HwPurge: return "HwPurge";
    case EndReason::Shutdown: return "Shutdown";
  }
  return "?";
}

inline std::optional<EndReason> end_reason_from_string(std::string_view s) {
  for (auto r : {EndReason::HostTimeout, EndReason::HwPurge, EndReason::Shutdown})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

struct ExportRecord {
  FlowKey key;
  std::string l7;
  std::uint64_t total_packets{0};
  std::uint64_t total_bytes{0};
  SimTime first_seen;
  SimTime last_seen;
  EndReason end_reason{EndReason::Shutdown};

  friend bool operator==(const ExportRecord&, const ExportRecord&) = default;
};

// Field order is part of the file format.
inline nlohmann::ordered_json to_json(const ExportRecord& r) {
  nlohmann::ordered_json j;
  j["key.proto"] = r.key.proto;
  j["key.src"] = format_ipv4(r.key.src_addr);
  j["key.dst"] = format_ipv4(r.key.dst_addr);
  j["key.sport"] = r.key.src_port;
  j["key.dport"] = r.key.dst_port;
  j["l7"] = r.l7;
  j["packets"] = r.total_packets;
  j["bytes"] = r.total_bytes;
  j["first_seen_ns"] = r.first_seen.nanos;
  j["last_seen_ns"] = r.last_seen.nanos;
  j["end_reason"] = to_string(r.end_reason);
  return j;
}

inline ExportRecord export_record_from_json(const nlohmann::json& j) {
  auto addr = [&](const char* field) {
    auto v = parse_ipv4(j.at(field).get<std::string>());
    if (!v) throw std::invalid_argument(std::string("bad address in ") + field);
    return *v;
  };
  ExportRecord r;
  r.key.proto = j.at("key.proto").get<std::uint8_t>();
  r.key.src_addr = addr("key.src");
  r.key.dst_addr = addr("key.dst");
  r.key.src_port = j.at("key.sport").get<std::uint16_t>();
  r.key.dst_port = j.at("key.dport").get<std::uint16_t>();
  r.l7 = j.at("l7").get<std::string>();
  r.total_packets = j.at("packets").get<std::uint64_t>();
  r.total_bytes = j.at("bytes").get<std::uint64_t>();
  r.first_seen = SimTime{j.at("first_seen_ns").get<std::uint64_t>()};
  r.last_seen = SimTime{j.at("last_seen_ns").get<std::uint64_t>()};
  auto reason = end_reason_from_string(j.at("end_reason").get<std::string>());
  if (!reason) throw std::invalid_argument("bad end_reason");
  r.end_reason = *reason;
  return r;
}

// Appends one JSON object per line to `sink`. Returns bytes written.
inline std::size_t export_flush(std::ostream& sink, std::span<const ExportRecord> batch) {
  std::size_t bytes = 0;
  for (const auto& r : batch) {
    const std::string line = to_json(r).dump() + '\n';
    sink.write(line.data(), static_cast<std::streamsize>(line.size()));
    bytes += line.size();
  }
  if (!sink) throw SinkWriteError("export sink write failed");
  return bytes;
}

// Buffers completed flows and flushes them in batches. A null sink only counts.
class BatchExporter {
 public:
  explicit BatchExporter(std::ostream* sink = nullptr, std::size_t batch = 64)
      : sink_(sink), batch_(batch == 0 ? 1 : batch) {}

  void add(ExportRecord r) {
    pending_.push_back(std::move(r));
    ++records_;
    if (pending_.size() >= batch_) flush();
  }

  std::size_t flush() {
    std::size_t bytes = 0;
    if (sink_ != nullptr) bytes = export_flush(*sink_, pending_);
    if (on_flush_) on_flush_(pending_);
    bytes_ += bytes;
    pending_.clear();
    return bytes;
  }

  // Test hook: observes every flushed batch.
  template <class F>
  void set_observer(F&& f) {
    on_flush_ = std::forward<F>(f);
  }

  std::uint64_t records() const noexcept { return records_; }
  std::uint64_t bytes_written() const noexcept { return bytes_; }
  std::size_t pending() const noexcept { return pending_.size(); }

 private:
  std::ostream* sink_;
  std::size_t batch_;
  std::vector<ExportRecord> pending_;
  std::function<void(std::span<const ExportRecord>)> on_flush_;
  std::uint64_t records_{0};
  std::uint64_t bytes_{0};
};

}  // namespace flowgate
