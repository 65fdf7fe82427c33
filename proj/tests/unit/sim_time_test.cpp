#include <gtest/gtest.h>

#include "flowgate/sim_time.hpp"

using namespace flowgate;
using namespace flowgate::literals;

TEST(SimTime, UnitConstructorsAgree) {
  EXPECT_EQ(SimTime::from_micros(1).nanos, 1'000u);
  EXPECT_EQ(SimTime::from_millis(1), 1'000_us);
  EXPECT_EQ(SimTime::from_seconds(1), 1'000_ms);
  EXPECT_EQ(SimTime::from_seconds_f(0.5), 500_ms);
  EXPECT_EQ(SimTime::from_seconds_f(10e-6), 10_us);
}

TEST(SimTime, ArithmeticAndOrdering) {
  EXPECT_EQ(3_ms + 2_ms, 5_ms);
  EXPECT_EQ(5_ms - 2_ms, 3_ms);
  EXPECT_EQ(2_ms - 5_ms, 0_ns);
  EXPECT_LT(1_us, 1_ms);
  SimTime t;
  t += 7_ns;
  EXPECT_EQ(t.nanos, 7u);
  EXPECT_DOUBLE_EQ((1500_ms).seconds(), 1.5);
}
