#pragma once

#include <compare>
#include <cstdint>
#include <cmath>

namespace flowgate {

// Simulated time in nanoseconds since scenario start. Also used for durations.
struct SimTime {
  std::uint64_t nanos{0};

  static constexpr SimTime from_nanos(std::uint64_t ns) { return SimTime{ns}; }
  static constexpr SimTime from_micros(std::uint64_t us) { return SimTime{us * 1'000ULL}; }
  static constexpr SimTime from_millis(std::uint64_t ms) { return SimTime{ms * 1'000'000ULL}; }
  static constexpr SimTime from_seconds(std::uint64_t s) { return SimTime{s * 1'000'000'000ULL}; }
  static SimTime from_seconds_f(double s) {
    return SimTime{static_cast<std::uint64_t>(std::llround(s * 1e9))};
  }

  constexpr double seconds() const { return static_cast<double>(nanos) * 1e-9; }

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime& operator+=(SimTime d) {
    nanos += d.nanos;
    return *this;
  }
  friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.nanos + b.nanos}; }
  // Saturates at zero.
  friend constexpr SimTime operator-(SimTime a, SimTime b) {
    return SimTime{a.nanos > b.nanos ? a.nanos - b.nanos : 0};
  }
};

namespace literals {
constexpr SimTime operator""_ns(unsigned long long v) { return SimTime::from_nanos(v); }
constexpr SimTime operator""_us(unsigned long long v) { return SimTime::from_micros(v); }
constexpr SimTime operator""_ms(unsigned long long v) { return SimTime::from_millis(v); }
constexpr SimTime operator""_s(unsigned long long v) { return SimTime::from_seconds(v); }
}  // namespace literals

}  // namespace flowgate
