#pragma once

#include "edgebound/model.hpp"

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace edgebound {

struct ShaperItem {
  std::uint64_t id{};
  Bits size;
  Tick arrival;
};

struct ShaperRelease {
  ShaperItem item;
  Tick time;
};

// Edge shaper interface. Sources offer packets as they are produced and the
// simulation advances the shaper clock; both calls may release held packets.
// Releases are strictly FIFO per shaper and never precede the packet arrival.
class Shaper {
 public:
  virtual ~Shaper() = default;

  virtual std::vector<ShaperRelease> offer(const ShaperItem& item, Tick now) = 0;
  virtual std::vector<ShaperRelease> advance(Tick now) = 0;

  // Earliest future instant at which a held packet may become releasable.
  virtual std::optional<Tick> next_wakeup() const = 0;

  virtual std::size_t backlog_size() const = 0;
  virtual Bits backlog_bits() const = 0;
};

// Unshaped flows: everything is released at the instant it is offered.
class PassThroughShaper final : public Shaper {
 public:
  std::vector<ShaperRelease> offer(const ShaperItem& item, Tick now) override {
    return {ShaperRelease{item, now}};
  }
  std::vector<ShaperRelease> advance(Tick) override { return {}; }
  std::optional<Tick> next_wakeup() const override { return std::nullopt; }
  std::size_t backlog_size() const override { return 0; }
  Bits backlog_bits() const override { return Bits(0); }
};

// Credit bucket of size `sigma` whose spent credit returns as discrete lumps
// exactly `window` ticks after each release. Because credit never refills
// faster than it was consumed one window earlier, any egress window of
// `window` ticks carries at most `sigma` bits.
//
// A release happens whenever the head-of-line packet fits the current credit
// (credit >= size); held packets are released at the instant the deciding
// replenishment lands, or at their arrival instant if later.
class QuantumShaper final : public Shaper {
 public:
  QuantumShaper(Bits sigma, Tick window)
      : sigma_(sigma), window_(window), credit_(sigma) {
    if (sigma.v <= 0) throw ConfigError("shaper budget must be positive");
    if (window.v <= 0) throw ConfigError("shaper window must be positive");
  }

  std::vector<ShaperRelease> offer(const ShaperItem& item, Tick now) override {
    touch(now);
    if (item.size > sigma_)
      throw StarvationError("packet of " + std::to_string(item.size.v) +
                            " bits can never clear a shaper budget of " +
                            std::to_string(sigma_.v) + " bits");
    std::vector<ShaperRelease> out;
    settle(now, out);
    backlog_.push_back(item);
    drain(now, out);
    check_invariants();
    return out;
  }

  std::vector<ShaperRelease> advance(Tick now) override {
    touch(now);
    std::vector<ShaperRelease> out;
    settle(now, out);
    drain(now, out);
    check_invariants();
    return out;
  }

  std::optional<Tick> next_wakeup() const override {
    if (backlog_.empty() || pending_.empty()) return std::nullopt;
    return pending_.begin()->first;
  }

  std::size_t backlog_size() const override { return backlog_.size(); }
  Bits backlog_bits() const override {
    Bits total;
    for (const auto& i : backlog_) total += i.size;
    return total;
  }

  Bits credit() const { return credit_; }
  Bits sigma() const { return sigma_; }
  Tick window() const { return window_; }
  Bits pending_total() const { return pending_total_; }
  std::optional<Bits> head_size() const {
    if (backlog_.empty()) return std::nullopt;
    return backlog_.front().size;
  }

 private:
  void touch(Tick now) {
    if (now < clock_) throw std::logic_error("shaper clock moved backwards");
    clock_ = now;
  }

  // Applies every replenishment due by `now`, releasing whatever each lump
  // unblocks at the lump's own due time.
  void settle(Tick now, std::vector<ShaperRelease>& out) {
    while (!pending_.empty() && pending_.begin()->first <= now) {
      const Tick due = pending_.begin()->first;
      const Bits amount = pending_.begin()->second;
      pending_.erase(pending_.begin());
      pending_total_ -= amount;
      credit_ = std::min(credit_ + amount, sigma_);  // cap; conservation keeps this exact
      drain(due, out);
    }
  }

  void drain(Tick at, std::vector<ShaperRelease>& out) {
    while (!backlog_.empty() && credit_ >= backlog_.front().size) {
      ShaperItem item = backlog_.front();
      backlog_.pop_front();
      const Tick release = std::max(at, item.arrival);
      credit_ -= item.size;
      pending_[release + window_] += item.size;
      pending_total_ += item.size;
      out.push_back(ShaperRelease{item, release});
    }
  }

  void check_invariants() const {
    assert(credit_ <= sigma_);
    assert(credit_ + pending_total_ == sigma_);
  }

  Bits sigma_;
  Tick window_;
  Bits credit_;
  Tick clock_;
  std::deque<ShaperItem> backlog_;
  std::map<Tick, Bits> pending_;  // due time -> amount; equal-time lumps merged
  Bits pending_total_;
};

// Classic credit bucket replenished continuously at rate_num/rate_den bits per
// tick (floor-accrued), clamped to `capacity`. Starts full. Credit is tracked
// in 1/rate_den units so accrual is exact.
class LeakyBucket final : public Shaper {
 public:
  LeakyBucket(Bits capacity, std::int64_t rate_num, std::int64_t rate_den)
      : capacity_(capacity), num_(rate_num), den_(rate_den),
        credit_frac_(capacity.v * rate_den) {
    if (capacity.v <= 0) throw ConfigError("leaky bucket capacity must be positive");
    if (rate_num <= 0 || rate_den <= 0)
      throw ConfigError("leaky bucket rate must be positive");
  }

  std::vector<ShaperRelease> offer(const ShaperItem& item, Tick now) override {
    touch(now);
    if (item.size > capacity_)
      throw StarvationError("packet of " + std::to_string(item.size.v) +
                            " bits can never clear a bucket of " +
                            std::to_string(capacity_.v) + " bits");
    backlog_.push_back(item);
    return release_until(now);
  }

  std::vector<ShaperRelease> advance(Tick now) override {
    touch(now);
    return release_until(now);
  }

  std::optional<Tick> next_wakeup() const override {
    if (backlog_.empty()) return std::nullopt;
    return ready_time(backlog_.front());
  }

  std::size_t backlog_size() const override { return backlog_.size(); }
  Bits backlog_bits() const override {
    Bits total;
    for (const auto& i : backlog_) total += i.size;
    return total;
  }

  // Whole credits currently available.
  Bits credit() const { return Bits(credit_frac_ / den_); }

 private:
  void touch(Tick now) {
    if (now < clock_) throw std::logic_error("shaper clock moved backwards");
    clock_ = now;
  }

  void accrue(Tick to) {
    assert(to >= last_);
    credit_frac_ += (to.v - last_.v) * num_;
    credit_frac_ = std::min(credit_frac_, capacity_.v * den_);
    last_ = to;
  }

  // First tick at which the head packet's cost is covered.
  Tick ready_time(const ShaperItem& head) const {
    const std::int64_t need = head.size.v * den_;
    if (credit_frac_ >= need) return last_;
    return Tick(last_.v + ceil_div(need - credit_frac_, num_));
  }

  // Releases head packets at their exact crossing instants up to `now`, so the
  // egress timing does not depend on how often the caller advances the clock.
  std::vector<ShaperRelease> release_until(Tick now) {
    std::vector<ShaperRelease> out;
    while (!backlog_.empty()) {
      Tick ready = ready_time(backlog_.front());
      if (ready > now) break;
      accrue(ready);
      ShaperItem item = backlog_.front();
      backlog_.pop_front();
      credit_frac_ -= item.size.v * den_;
      out.push_back(ShaperRelease{item, std::max(ready, item.arrival)});
    }
    accrue(now);
    return out;
  }

  Bits capacity_;
  std::int64_t num_;
  std::int64_t den_;
  std::int64_t credit_frac_;  // in 1/den_ units
  Tick last_;
  Tick clock_;
  std::deque<ShaperItem> backlog_;
};

inline std::unique_ptr<Shaper> make_shaper(const ShaperConfig& cfg, Bits flow_sigma) {
  switch (cfg.kind) {
    case ShaperKind::none:
      return std::make_unique<PassThroughShaper>();
    case ShaperKind::quantum:
      return std::make_unique<QuantumShaper>(flow_sigma, cfg.window);
    case ShaperKind::leaky:
      return std::make_unique<LeakyBucket>(cfg.capacity, cfg.rate_num, cfg.rate_den);
  }
  throw ConfigError("unknown shaper kind");
}

}  // namespace edgebound
