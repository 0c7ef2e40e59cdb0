#pragma once

#include "edgebound/types.hpp"

#include <cassert>
#include <limits>
#include <random>
#include <vector>

namespace edgebound {

enum class GeneratorKind { periodic, bursty, uniform_random, greedy };

struct GeneratorSpec {
  GeneratorKind kind{GeneratorKind::periodic};
  Tick phase{};             // first emission instant (periodic, bursty)
  // periodic
  Tick period{Tick(1)};
  Bits size{};
  // bursty
  int burst_size{1};        // packets per burst, all at the same tick
  Tick burst_gap{Tick(1)};  // distance between burst instants
  Bits packet_size{};
  // uniform-random
  Tick mean_gap{Tick(1)};
  Bits size_lo{};
  Bits size_hi{};

  Bits max_size() const {
    switch (kind) {
      case GeneratorKind::periodic: return size;
      case GeneratorKind::bursty: return packet_size;
      case GeneratorKind::uniform_random: return size_hi;
      case GeneratorKind::greedy: return packet_size;
    }
    return Bits(0);
  }
};

struct Arrival {
  Tick time;
  Bits size;
};

// Uniform draw in [0, n) built on the fixed mt19937_64 output stream, so a
// given seed yields identical arrivals on every platform and standard library.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
  assert(n > 0);
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t rem = (kMax % n + 1) % n;  // 2^64 mod n
  std::uint64_t x = rng();
  while (rem != 0 && x >= kMax - rem + 1) x = rng();
  return x % n;
}

// Seeded arrival source for one flow. Greedy sources are closed-loop and do
// not pre-produce arrivals here; the simulation tops them up tick by tick.
class ArrivalGenerator {
 public:
  ArrivalGenerator(const GeneratorSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {
    validate();
    switch (spec_.kind) {
      case GeneratorKind::periodic:
      case GeneratorKind::bursty:
        next_ = spec_.phase;
        break;
      case GeneratorKind::uniform_random:
        next_ = Tick(gap());
        break;
      case GeneratorKind::greedy:
        break;
    }
  }

  const GeneratorSpec& spec() const { return spec_; }
  bool greedy() const { return spec_.kind == GeneratorKind::greedy; }

  // All arrivals with time in [cursor, up_to); the cursor then moves to up_to.
  std::vector<Arrival> next_arrivals(Tick up_to) {
    if (up_to < cursor_) throw std::logic_error("generator cursor moved backwards");
    std::vector<Arrival> out;
    if (greedy()) {
      cursor_ = up_to;
      return out;
    }
    while (next_ < up_to) {
      switch (spec_.kind) {
        case GeneratorKind::periodic:
          out.push_back({next_, spec_.size});
          next_ += spec_.period;
          break;
        case GeneratorKind::bursty:
          for (int i = 0; i < spec_.burst_size; ++i) out.push_back({next_, spec_.packet_size});
          next_ += spec_.burst_gap;
          break;
        case GeneratorKind::uniform_random: {
          const Bits span = spec_.size_hi - spec_.size_lo;
          const Bits size = spec_.size_lo + Bits(static_cast<std::int64_t>(
                                                bounded_draw(rng_, span.v + 1)));
          out.push_back({next_, size});
          next_ += Tick(gap());
          break;
        }
        case GeneratorKind::greedy:
          break;
      }
    }
    cursor_ = up_to;
    return out;
  }

 private:
  void validate() const {
    switch (spec_.kind) {
      case GeneratorKind::periodic:
        if (spec_.period.v < 1) throw ConfigError("periodic generator needs period >= 1");
        if (spec_.size.v < 1) throw ConfigError("periodic generator needs a positive size");
        break;
      case GeneratorKind::bursty:
        if (spec_.burst_size < 1) throw ConfigError("bursty generator needs burst_size >= 1");
        if (spec_.burst_gap.v < 1) throw ConfigError("bursty generator needs burst_gap >= 1");
        if (spec_.packet_size.v < 1) throw ConfigError("bursty generator needs a positive size");
        break;
      case GeneratorKind::uniform_random:
        if (spec_.mean_gap.v < 1) throw ConfigError("uniform generator needs mean_gap >= 1");
        if (spec_.size_lo.v < 1 || spec_.size_hi < spec_.size_lo)
          throw ConfigError("uniform generator needs 1 <= size_lo <= size_hi");
        break;
      case GeneratorKind::greedy:
        if (spec_.packet_size.v < 1) throw ConfigError("greedy generator needs a positive size");
        break;
    }
  }

  // Integer gap uniform on [1, 2*mean_gap - 1]; mean equals mean_gap.
  std::int64_t gap() {
    return 1 + static_cast<std::int64_t>(bounded_draw(rng_, 2 * spec_.mean_gap.v - 1));
  }

  GeneratorSpec spec_;
  std::mt19937_64 rng_;
  Tick next_;
  Tick cursor_;
};

}  // namespace edgebound
