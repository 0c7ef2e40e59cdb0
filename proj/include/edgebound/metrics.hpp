#pragma once

#include "edgebound/model.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace edgebound {

// Row filter for trace metrics. An unset stage selects whole-network spans
// (entry at stage 1 to final departure); a set stage selects that stage's
// queue. Class and flow narrow either selection.
struct Scope {
  std::optional<int> stage;
  std::optional<int> class_id;
  std::optional<int> flow_id;

  static Scope network() { return {}; }
  static Scope at_stage(int h) {
    Scope s;
    s.stage = h;
    return s;
  }
  Scope with_class(int k) const {
    Scope s = *this;
    s.class_id = k;
    return s;
  }
  Scope with_flow(int f) const {
    Scope s = *this;
    s.flow_id = f;
    return s;
  }
};

// Offline trace analyses; every quantity is an exact integer.
//
// Boundary rules (consistent across all window metrics, half-open windows):
//  * an arrival at exactly t belongs to window [t, t+d) as an arrival;
//  * backlog carried into the window counts bits that arrived strictly before
//    t and whose service ends at t or later (a bit finishing exactly at t is
//    still charged to this window's history, matched by the completion that
//    out_volume records at t — the pair cancels in the queued balance);
//  * busy_index(t) counts bits with arrival <= t and service end > t, so a
//    packet no longer counts at the instant its last bit leaves.
// These are the unique discrete conventions under which the per-stage
// balance, stage chaining, and network telescoping identities all hold
// exactly for every t, including zero-dwell pass-through hops.
class TraceAnalyzer {
 public:
  explicit TraceAnalyzer(const EventTrace& trace) { build(trace); }

  int max_stage() const { return max_stage_; }
  std::size_t packet_count() const { return network_spans_.size(); }

  Bits busy_index(Tick t, const Scope& scope) const {
    const View& v = view(scope);
    return Bits(v.arrived_upto(t.v) - v.ended_upto(t.v));
  }

  struct Peak {
    Bits value;
    Tick at;
  };

  // Maximum instantaneous backlog. The maximum over continuous time is
  // attained at an arrival instant, so only those instants are scanned.
  Peak max_bi(const Scope& scope) const {
    const View& v = view(scope);
    Peak peak{Bits(0), Tick(0)};
    std::int64_t prev = std::numeric_limits<std::int64_t>::min();
    for (std::int64_t t : v.arr_t) {
      if (t == prev) continue;
      prev = t;
      const std::int64_t b = v.arrived_upto(t) - v.ended_upto(t);
      if (b > peak.value.v) peak = {Bits(b), Tick(t)};
    }
    return peak;
  }

  // Bits arriving in [t, t+d).
  Bits arrivals_volume(Tick t, Tick d, const Scope& scope) const {
    const View& v = view(scope);
    return Bits(v.arrived_before(t.v + d.v) - v.arrived_before(t.v));
  }

  // Bits arriving in [t, t+d) plus backlog carried into t.
  Bits in_volume(Tick t, Tick d, const Scope& scope) const {
    const View& v = view(scope);
    const std::int64_t carried = v.arrived_before(t.v) - v.ended_before(t.v);
    return Bits(carried + v.arrived_before(t.v + d.v) - v.arrived_before(t.v));
  }

  // Bits whose service completes in [t, t+d).
  Bits out_volume(Tick t, Tick d, const Scope& scope) const {
    const View& v = view(scope);
    return Bits(v.ended_before(t.v + d.v) - v.ended_before(t.v));
  }

  // Window balance: in_volume - out_volume. Negative means the trace claims
  // to have served bits it never admitted.
  Bits queued(Tick t, Tick d, const Scope& scope) const {
    const std::int64_t q = in_volume(t, d, scope).v - out_volume(t, d, scope).v;
    if (q < 0)
      throw TraceError("negative queued volume at t=" + std::to_string(t.v) +
                       " d=" + std::to_string(d.v));
    return Bits(q);
  }

  struct WindowMax {
    Bits value;
    Tick witness;
  };

  // Exact maximum of arrivals_volume(t, window) over all start instants.
  // The volume is piecewise constant in t and can only peak when the window
  // opens exactly on an arrival, so arrival instants (plus t=0) suffice.
  WindowMax sliding_window_max(Tick window, const Scope& scope) const {
    const View& v = view(scope);
    WindowMax best{Bits(0), Tick(0)};
    auto probe = [&](std::int64_t t) {
      const std::int64_t vol = v.arrived_before(t + window.v) - v.arrived_before(t);
      if (vol > best.value.v) best = {Bits(vol), Tick(t)};
    };
    probe(0);
    std::int64_t prev = std::numeric_limits<std::int64_t>::min();
    for (std::int64_t t : v.arr_t) {
      if (t == prev) continue;
      prev = t;
      probe(t);
    }
    return best;
  }

  // Raw (time, size) event streams, time-sorted; used for chaining checks.
  std::vector<std::pair<Tick, Bits>> arrival_events(const Scope& scope) const {
    const View& v = view(scope);
    std::vector<std::pair<Tick, Bits>> out;
    out.reserve(v.arr_t.size());
    for (std::size_t i = 0; i < v.arr_t.size(); ++i)
      out.emplace_back(Tick(v.arr_t[i]), Bits(v.arr_c[i + 1] - v.arr_c[i]));
    return out;
  }
  std::vector<std::pair<Tick, Bits>> end_events(const Scope& scope) const {
    const View& v = view(scope);
    std::vector<std::pair<Tick, Bits>> out;
    out.reserve(v.end_t.size());
    for (std::size_t i = 0; i < v.end_t.size(); ++i)
      out.emplace_back(Tick(v.end_t[i]), Bits(v.end_c[i + 1] - v.end_c[i]));
    return out;
  }

  // Distinct instants at which anything happened, ascending.
  std::vector<Tick> event_times() const {
    std::vector<std::int64_t> ts;
    for (const auto& s : stage_spans_) {
      ts.push_back(s.arrival.v);
      if (s.served) ts.push_back(s.end.v);
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    std::vector<Tick> out;
    out.reserve(ts.size());
    for (auto t : ts) out.push_back(Tick(t));
    return out;
  }

 private:
  static constexpr std::int64_t kUnserved = std::numeric_limits<std::int64_t>::max();

  struct Span {
    Tick arrival;
    Tick end{};  // valid when served
    bool served{false};
    bool started{false};
    Tick start{};
    Bits size;
    int stage{};
    int class_id{};
    int flow_id{};
    std::uint64_t packet{};
  };

  struct View {
    std::vector<std::int64_t> arr_t, end_t;  // sorted event times
    std::vector<std::int64_t> arr_c, end_c;  // cumulative bits, length n+1

    std::int64_t arrived_before(std::int64_t t) const {
      return arr_c[std::lower_bound(arr_t.begin(), arr_t.end(), t) - arr_t.begin()];
    }
    std::int64_t arrived_upto(std::int64_t t) const {
      return arr_c[std::upper_bound(arr_t.begin(), arr_t.end(), t) - arr_t.begin()];
    }
    std::int64_t ended_before(std::int64_t t) const {
      return end_c[std::lower_bound(end_t.begin(), end_t.end(), t) - end_t.begin()];
    }
    std::int64_t ended_upto(std::int64_t t) const {
      return end_c[std::upper_bound(end_t.begin(), end_t.end(), t) - end_t.begin()];
    }
  };

  void build(const EventTrace& trace) {
    std::map<std::pair<std::uint64_t, int>, std::size_t> open;
    for (const auto& r : trace.records) {
      const auto key = std::make_pair(r.packet_id, r.stage);
      switch (r.kind) {
        case TraceEventKind::arrival: {
          if (open.count(key))
            throw TraceError("duplicate arrival for packet " + std::to_string(r.packet_id) +
                             " at stage " + std::to_string(r.stage));
          Span s;
          s.arrival = r.time;
          s.size = r.size;
          s.stage = r.stage;
          s.class_id = r.class_id;
          s.flow_id = r.flow_id;
          s.packet = r.packet_id;
          open[key] = stage_spans_.size();
          stage_spans_.push_back(s);
          max_stage_ = std::max(max_stage_, r.stage);
          break;
        }
        case TraceEventKind::service_start: {
          auto it = open.find(key);
          if (it == open.end())
            throw TraceError("service_start without arrival for packet " +
                             std::to_string(r.packet_id) + " at stage " +
                             std::to_string(r.stage));
          Span& s = stage_spans_[it->second];
          if (s.started) throw TraceError("duplicate service_start");
          if (r.time < s.arrival) throw TraceError("service before arrival");
          s.started = true;
          s.start = r.time;
          break;
        }
        case TraceEventKind::service_end: {
          auto it = open.find(key);
          if (it == open.end())
            throw TraceError("service_end without arrival for packet " +
                             std::to_string(r.packet_id) + " at stage " + std::to_string(r.stage));
          Span& s = stage_spans_[it->second];
          if (!s.started) throw TraceError("service_end without service_start");
          if (s.served) throw TraceError("duplicate service_end");
          if (r.time < s.start) throw TraceError("service_end before service_start");
          s.served = true;
          s.end = r.time;
          break;
        }
      }
    }

    // Whole-network spans: entry at stage 1, exit at the final stage.
    std::map<std::uint64_t, Span> entry;
    std::map<std::uint64_t, Tick> exit;
    for (const auto& s : stage_spans_) {
      if (s.stage == 1) {
        if (!entry.emplace(s.packet, s).second)
          throw TraceError("packet " + std::to_string(s.packet) + " entered twice");
      } else if (!entry.count(s.packet)) {
        throw TraceError("packet " + std::to_string(s.packet) + " first appears at stage " +
                         std::to_string(s.stage));
      }
      if (s.stage == max_stage_ && s.served) exit[s.packet] = s.end;
    }
    for (auto& [id, s] : entry) {
      Span n = s;
      auto e = exit.find(id);
      n.served = e != exit.end();
      if (n.served) n.end = e->second;
      network_spans_.push_back(n);
    }
  }

  const View& view(const Scope& scope) const {
    const auto key =
        std::make_tuple(scope.stage.value_or(-1), scope.class_id.value_or(-1),
                        scope.flow_id.value_or(-1));
    auto it = views_.find(key);
    if (it != views_.end()) return it->second;

    const std::vector<Span>& source = scope.stage.has_value() ? stage_spans_ : network_spans_;
    std::vector<std::pair<std::int64_t, std::int64_t>> arr, end;
    for (const auto& s : source) {
      if (scope.stage && s.stage != *scope.stage) continue;
      if (scope.class_id && s.class_id != *scope.class_id) continue;
      if (scope.flow_id && s.flow_id != *scope.flow_id) continue;
      arr.emplace_back(s.arrival.v, s.size.v);
      if (s.served) end.emplace_back(s.end.v, s.size.v);
    }
    std::sort(arr.begin(), arr.end());
    std::sort(end.begin(), end.end());

    View v;
    v.arr_c.push_back(0);
    for (const auto& [t, b] : arr) {
      v.arr_t.push_back(t);
      v.arr_c.push_back(v.arr_c.back() + b);
    }
    v.end_c.push_back(0);
    for (const auto& [t, b] : end) {
      v.end_t.push_back(t);
      v.end_c.push_back(v.end_c.back() + b);
    }
    return views_.emplace(key, std::move(v)).first->second;
  }

  std::vector<Span> stage_spans_;
  std::vector<Span> network_spans_;
  int max_stage_{0};
  mutable std::map<std::tuple<int, int, int>, View> views_;
};

// ---------------------------------------------------------------------------
// Conservation identities
// ---------------------------------------------------------------------------

struct IdentityReport {
  bool ok{true};
  int checks{0};
  std::vector<std::string> issues;

  void fail(std::string what) {
    ok = false;
    if (issues.size() < 16) issues.push_back(std::move(what));
  }
};

// Exact integer conservation checks over a finished trace:
//  * per-stage balance: queued(h) = in(h) - out(h) and never negative;
//  * chaining: stage h completions equal stage h+1 arrivals as (time, size)
//    multisets, shifted by the uniform propagation delay;
//  * telescoping: the per-stage balances sum to the whole-network balance.
// `windows` selects the d values; start instants sample the trace's event
// times (capped at max_samples), always including t=0.
inline IdentityReport verify_identities(const EventTrace& trace, const std::vector<Tick>& windows,
                                        int max_samples = 128, Tick propagation = Tick(0)) {
  IdentityReport rep;
  if (trace.empty()) return rep;
  TraceAnalyzer a(trace);
  const int H = a.max_stage();

  for (int h = 1; h + 1 <= H; ++h) {
    auto ends = a.end_events(Scope::at_stage(h));
    auto arrs = a.arrival_events(Scope::at_stage(h + 1));
    for (auto& e : ends) e.first += propagation;
    auto norm = [](std::vector<std::pair<Tick, Bits>>& v) {
      std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) {
        return std::tie(x.first.v, x.second.v) < std::tie(y.first.v, y.second.v);
      });
    };
    norm(ends);
    norm(arrs);
    ++rep.checks;
    if (ends != arrs)
      rep.fail("stage " + std::to_string(h) + " completions do not match stage " +
               std::to_string(h + 1) + " arrivals");
  }

  std::vector<Tick> samples{Tick(0)};
  {
    const auto times = a.event_times();
    const std::size_t stride = std::max<std::size_t>(1, times.size() / std::max(1, max_samples));
    for (std::size_t i = 0; i < times.size(); i += stride) samples.push_back(times[i]);
    if (!times.empty()) samples.push_back(times.back());
  }

  for (Tick d : windows) {
    if (d.v <= 0) continue;
    for (Tick t : samples) {
      std::int64_t lhs = 0;
      bool balance_ok = true;
      for (int h = 1; h <= H; ++h) {
        const Scope sc = Scope::at_stage(h);
        const std::int64_t q = a.in_volume(t, d, sc).v - a.out_volume(t, d, sc).v;
        ++rep.checks;
        if (q < 0) {
          rep.fail("negative balance at stage " + std::to_string(h) + ", t=" +
                   std::to_string(t.v) + ", d=" + std::to_string(d.v));
          balance_ok = false;
        }
        lhs += q;
      }
      if (!balance_ok) continue;
      const std::int64_t rhs =
          a.in_volume(t, d, Scope::network()).v - a.out_volume(t, d, Scope::network()).v;
      ++rep.checks;
      if (lhs != rhs)
        rep.fail("telescoping mismatch at t=" + std::to_string(t.v) + ", d=" +
                 std::to_string(d.v) + ": stages sum to " + std::to_string(lhs) +
                 ", network balance is " + std::to_string(rhs));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Post-hoc audits of simulator behaviour
// ---------------------------------------------------------------------------

struct AuditResult {
  bool ok{true};
  std::string detail;
};

// Default-policy ports must never sit idle while a packet waits in one of
// their queues. Ports are reconstructed from each packet's flow path.
inline AuditResult audit_work_conservation(const EventTrace& trace,
                                           const std::vector<FlowSpec>& flows,
                                           const Topology& topology) {
  std::map<int, const FlowSpec*> by_flow;
  for (const auto& f : flows) by_flow[f.flow_id] = &f;

  struct PortData {
    std::vector<std::pair<std::int64_t, std::int64_t>> busy;   // [start, end)
    std::vector<std::pair<std::int64_t, std::int64_t>> waits;  // [arrival, start)
  };
  std::map<std::pair<int, int>, PortData> ports;

  std::map<std::pair<std::uint64_t, int>, std::pair<std::int64_t, std::int64_t>> arrival_start;
  std::int64_t horizon = 0;
  for (const auto& r : trace.records) horizon = std::max(horizon, r.time.v);

  for (const auto& r : trace.records) {
    auto fit = by_flow.find(r.flow_id);
    if (fit == by_flow.end()) return {false, "trace references unknown flow"};
    const auto& path = fit->second->path;
    if (r.stage < 1 || r.stage > static_cast<int>(path.size()))
      return {false, "trace references stage outside the flow path"};
    const int sw = path[r.stage - 1];
    const SwitchDesc* desc = topology.find_switch(sw);
    if (!desc) return {false, "trace references unknown switch"};
    if (desc->pass_through || desc->policy != PortPolicy::strict_priority) continue;
    const int next = r.stage < static_cast<int>(path.size()) ? path[r.stage] : kEgressNode;
    auto& port = ports[{sw, next}];
    const auto key = std::make_pair(r.packet_id, r.stage);
    switch (r.kind) {
      case TraceEventKind::arrival:
        arrival_start[key] = {r.time.v, -1};
        break;
      case TraceEventKind::service_start:
        arrival_start[key].second = r.time.v;
        port.waits.emplace_back(arrival_start[key].first, r.time.v);
        port.busy.emplace_back(r.time.v, std::numeric_limits<std::int64_t>::max());
        break;
      case TraceEventKind::service_end:
        if (!port.busy.empty()) port.busy.back().second = r.time.v;
        break;
    }
  }
  // Packets that never reached service wait until the end of the trace.
  std::map<std::pair<std::uint64_t, int>, bool> started;
  for (const auto& r : trace.records)
    if (r.kind == TraceEventKind::service_start) started[{r.packet_id, r.stage}] = true;
  for (const auto& r : trace.records) {
    if (r.kind != TraceEventKind::arrival || started.count({r.packet_id, r.stage})) continue;
    const auto& path = by_flow[r.flow_id]->path;
    const int sw = path[r.stage - 1];
    const SwitchDesc* desc = topology.find_switch(sw);
    if (!desc || desc->pass_through || desc->policy != PortPolicy::strict_priority) continue;
    const int next = r.stage < static_cast<int>(path.size()) ? path[r.stage] : kEgressNode;
    ports[{sw, next}].waits.emplace_back(r.time.v, horizon);
  }

  for (auto& [key, port] : ports) {
    std::sort(port.busy.begin(), port.busy.end());
    for (const auto& [a, s] : port.waits) {
      std::int64_t cur = a;
      for (const auto& [bs, be] : port.busy) {
        if (cur >= s) break;
        if (be <= cur) continue;
        if (bs > cur) break;  // gap at cur
        cur = std::max(cur, be);
      }
      if (cur < s)
        return {false, "port " + std::to_string(key.first) + "->" + std::to_string(key.second) +
                           " idle at t=" + std::to_string(cur) + " while a packet waited"};
    }
  }
  return {true, ""};
}

// Packets of one flow must clear every stage in emission order.
inline AuditResult audit_flow_fifo(const EventTrace& trace) {
  std::map<std::pair<int, int>, std::vector<std::uint64_t>> arrivals, ends;
  for (const auto& r : trace.records) {
    if (r.kind == TraceEventKind::arrival) arrivals[{r.flow_id, r.stage}].push_back(r.packet_id);
    if (r.kind == TraceEventKind::service_end) ends[{r.flow_id, r.stage}].push_back(r.packet_id);
  }
  for (const auto& [key, done] : ends) {
    const auto& arr = arrivals[key];
    if (done.size() > arr.size())
      return {false, "flow " + std::to_string(key.first) + " served more packets than arrived"};
    for (std::size_t i = 0; i < done.size(); ++i)
      if (done[i] != arr[i])
        return {false, "flow " + std::to_string(key.first) + " reordered at stage " +
                           std::to_string(key.second)};
  }
  return {true, ""};
}

// Every packet entering the network is either delivered or still inside.
inline AuditResult audit_conservation(const EventTrace& trace) {
  TraceAnalyzer a(trace);
  const int H = a.max_stage();
  std::size_t entered = a.arrival_events(Scope::at_stage(1)).size();
  std::size_t left = a.end_events(Scope::at_stage(H)).size();
  const Bits inside = a.busy_index(Tick(std::numeric_limits<std::int64_t>::max() / 2),
                                   Scope::network());
  if (left > entered) return {false, "more departures than entries"};
  if (inside.v == 0 && entered != left)
    return {false, "network drained but " + std::to_string(entered - left) +
                       " packets unaccounted for"};
  return {true, ""};
}

}  // namespace edgebound
