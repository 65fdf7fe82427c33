#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "flowgate/export.hpp"
#include "test_util.hpp"

using namespace flowgate;
using namespace flowgate::literals;

namespace {

ExportRecord rec(std::uint32_t n) {
  return {test_support::tcp_key(n), "TLS", 10 + n, 1000 + n, 1_ms, 2_s, EndReason::HwPurge};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(ExportFlush, EmptyBatchWritesNothing) {
  std::ostringstream os;
  EXPECT_EQ(export_flush(os, {}), 0u);
  EXPECT_TRUE(os.str().empty());
}

TEST(ExportFlush, OneRecordOneLineRoundTrip) {
  std::ostringstream os;
  const auto r = rec(3);
  const std::size_t n = export_flush(os, std::vector{r});
  const std::string out = os.str();
  EXPECT_EQ(n, out.size());
  ASSERT_EQ(out.back(), '\n');
  const auto ls = lines(out);
  ASSERT_EQ(ls.size(), 1u);
  EXPECT_EQ(export_record_from_json(nlohmann::json::parse(ls[0])), r);
}

TEST(ExportFlush, FieldOrderIsFixed) {
  std::ostringstream os;
  export_flush(os, std::vector{rec(1)});
  const std::string line = os.str();
  const char* order[] = {"key.proto", "key.src", "key.dst", "key.sport", "key.dport", "l7",
                         "packets",   "bytes",   "first_seen_ns", "last_seen_ns", "end_reason"};
  std::size_t pos = 0;
  for (const char* f : order) {
    const auto at = line.find(std::string("\"") + f + "\"", pos);
    ASSERT_NE(at, std::string::npos) << f;
    pos = at;
  }
}

TEST(ExportFlush, FailedSinkThrows) {
  std::ostringstream os;
  os.setstate(std::ios::badbit);
  EXPECT_THROW(export_flush(os, std::vector{rec(1)}), SinkWriteError);
}

TEST(BatchExporter, FRecordsGiveFLinesAcrossFlushes) {
  for (std::size_t batch : {1u, 3u, 7u, 64u}) {
    std::ostringstream os;
    BatchExporter ex(&os, batch);
    std::size_t flushes = 0;
    ex.set_observer([&](std::span<const ExportRecord> b) {
      if (!b.empty()) ++flushes;
      EXPECT_LE(b.size(), batch);
    });
    constexpr std::uint32_t kF = 50;
    for (std::uint32_t i = 0; i < kF; ++i) ex.add(rec(i));
    ex.flush();
    const auto ls = lines(os.str());
    ASSERT_EQ(ls.size(), kF);
    for (std::uint32_t i = 0; i < kF; ++i) EXPECT_EQ(export_record_from_json(nlohmann::json::parse(ls[i])), rec(i));
    EXPECT_EQ(ex.records(), kF);
    EXPECT_EQ(ex.bytes_written(), os.str().size());
    EXPECT_EQ(flushes, (kF + batch - 1) / batch);
  }
}

TEST(EndReason, NamesRoundTrip) {
  for (auto r : {EndReason::HostTimeout, EndReason::HwPurge, EndReason::Shutdown})
    EXPECT_EQ(end_reason_from_string(to_string(r)), r);
  EXPECT_FALSE(end_reason_from_string("Crash"));
}
