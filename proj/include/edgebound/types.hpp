#pragma once

#include <boost/rational.hpp>

#include <cassert>
#include <compare>
#include <cstdint>
#include <stdexcept>

namespace edgebound {

// Malformed scenarios and parameter combinations rejected at load time.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A recorded trace that is internally inconsistent.
struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A requested end-to-end bound that leaves no usable shaping window.
struct InfeasibleBoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A shaper whose head-of-line packet can never accumulate enough credit.
struct StarvationError : ConfigError {
  using ConfigError::ConfigError;
};

// Time as a whole number of simulation ticks. All arithmetic is exact integer
// arithmetic; negative values are invalid by construction.
struct Tick {
  std::int64_t v{0};

  Tick() = default;
  constexpr explicit Tick(std::int64_t value) : v(value) { assert(value >= 0); }

  constexpr auto operator<=>(const Tick&) const = default;

  Tick& operator+=(Tick o) {
    v += o.v;
    return *this;
  }
};

constexpr Tick operator+(Tick a, Tick b) { return Tick(a.v + b.v); }
constexpr Tick operator-(Tick a, Tick b) { return Tick(a.v - b.v); }
constexpr Tick operator*(std::int64_t n, Tick t) { return Tick(n * t.v); }

// Data volume in whole bits.
struct Bits {
  std::int64_t v{0};

  Bits() = default;
  constexpr explicit Bits(std::int64_t value) : v(value) { assert(value >= 0); }

  constexpr auto operator<=>(const Bits&) const = default;

  Bits& operator+=(Bits o) {
    v += o.v;
    return *this;
  }
  Bits& operator-=(Bits o) {
    v -= o.v;
    assert(v >= 0);
    return *this;
  }
};

constexpr Bits operator+(Bits a, Bits b) { return Bits(a.v + b.v); }
constexpr Bits operator-(Bits a, Bits b) { return Bits(a.v - b.v); }
constexpr Bits operator*(std::int64_t n, Bits b) { return Bits(n * b.v); }

// Bandwidth in bits per tick. Always positive.
struct Rate {
  std::int64_t bits_per_tick{1};

  Rate() = default;
  constexpr explicit Rate(std::int64_t r) : bits_per_tick(r) { assert(r > 0); }

  constexpr auto operator<=>(const Rate&) const = default;
};

constexpr std::int64_t ceil_div(std::int64_t num, std::int64_t den) {
  assert(num >= 0 && den > 0);
  return (num + den - 1) / den;
}

// Store-and-forward serialization time of `size` at `rate`, rounded up to
// whole ticks.
constexpr Tick transmission_ticks(Bits size, Rate rate) {
  return Tick(ceil_div(size.v, rate.bits_per_tick));
}

constexpr Bits operator*(Tick t, Rate r) { return Bits(t.v * r.bits_per_tick); }

// Exact rational arithmetic for bound calculations.
using Rational = boost::rational<std::int64_t>;

inline std::int64_t ceil_rational(const Rational& r) {
  assert(r >= Rational(0));
  return ceil_div(r.numerator(), r.denominator());
}

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

}  // namespace edgebound
