#pragma once

#include "edgebound/types.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace edgebound {

// ---------------------------------------------------------------------------
// Switches, links, topology
// ---------------------------------------------------------------------------

enum class PortPolicy {
  // Work-conserving: serve the lowest non-empty class queue, never idle while
  // a queue holds a packet, never preempt.
  strict_priority,
  // Demo policy: always prefer the packet from the lowest flow id, so a
  // saturating low-id flow starves everyone else while backlog stays bounded.
  starve_low_input,
};

struct SwitchDesc {
  int id{};
  bool pass_through{false};
  PortPolicy policy{PortPolicy::strict_priority};
};

// Node id reserved for the network exit.
inline constexpr int kEgressNode = 0;

struct Link {
  int from{};
  int to{};
  Rate capacity{};
  Tick propagation{};
};

struct Topology {
  std::vector<SwitchDesc> switches;
  std::vector<Link> links;
  std::optional<Rate> bottleneck_capacity;  // derived from flow paths when unset
  int H{0};                                 // 0: derive from the longest flow path

  const SwitchDesc* find_switch(int id) const {
    for (const auto& s : switches)
      if (s.id == id) return &s;
    return nullptr;
  }

  const Link* find_link(int from, int to) const {
    for (const auto& l : links)
      if (l.from == from && l.to == to) return &l;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Traffic classes and flows
// ---------------------------------------------------------------------------

// Bounded classes 1..K carry a window `d` and a bottleneck share; the optional
// best-effort class K+1 carries only its maximum packet size.
struct TrafficClass {
  int class_id{};
  std::optional<Tick> d;
  std::optional<Rate> share;
  Bits p_max{};

  bool best_effort() const { return !d.has_value(); }
};

// Checks ordering and completeness; returns K, the number of bounded classes.
// Classes must be contiguous 1..K(+1) with non-decreasing windows; a class
// without a window is best-effort and must come last.
inline int validate_classes(const std::vector<TrafficClass>& classes) {
  if (classes.empty()) throw ConfigError("no traffic classes declared");
  int K = 0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& c = classes[i];
    if (c.class_id != static_cast<int>(i) + 1)
      throw ConfigError("class ids must be contiguous starting at 1, got " +
                        std::to_string(c.class_id) + " at position " + std::to_string(i + 1));
    if (c.best_effort()) {
      if (i + 1 != classes.size())
        throw ConfigError("best-effort class " + std::to_string(c.class_id) +
                          " must be the last class");
    } else {
      if (!c.share.has_value())
        throw ConfigError("bounded class " + std::to_string(c.class_id) +
                          " is missing its bandwidth share");
      if (i > 0 && !classes[i - 1].best_effort() && *classes[i - 1].d > *c.d)
        throw ConfigError("class windows must be non-decreasing with class id");
      ++K;
    }
  }
  return K;
}

enum class ShaperKind { none, quantum, leaky };

struct ShaperConfig {
  ShaperKind kind{ShaperKind::none};
  Tick window{};             // quantum: replenishment horizon D
  Bits capacity{};           // leaky: bucket size
  std::int64_t rate_num{0};  // leaky: replenished bits ...
  std::int64_t rate_den{1};  // ... per this many ticks
};

struct FlowSpec {
  int flow_id{};
  int class_id{1};
  Bits sigma{};            // admitted per-window budget
  std::vector<int> path;   // switch ids, ingress first
  std::string generator;   // name of the bound generator
  ShaperConfig shaper;
};

// ---------------------------------------------------------------------------
// Packets
// ---------------------------------------------------------------------------

struct HopEvent {
  int switch_id{};
  Tick arrival;
  Tick departure;
};

struct Packet {
  std::uint64_t id{};
  int flow_id{};
  int class_id{1};
  Bits size{};
  Tick emit_time;     // produced by the source
  Tick ingress_time;  // entered stage 1 (after shaping)
  std::vector<HopEvent> per_hop_events;
  bool delivered{false};
  Tick egress_time;   // meaningful when delivered

  // Network delay: last-hop departure minus network entry.
  Tick delay() const {
    assert(delivered);
    return egress_time - ingress_time;
  }
};

// ---------------------------------------------------------------------------
// Event traces
// ---------------------------------------------------------------------------

enum class TraceEventKind { arrival, service_start, service_end };

inline const char* to_string(TraceEventKind k) {
  switch (k) {
    case TraceEventKind::arrival: return "arrival";
    case TraceEventKind::service_start: return "service_start";
    case TraceEventKind::service_end: return "service_end";
  }
  return "?";
}

struct TraceRecord {
  Tick time;
  std::uint64_t seq{};
  int stage{};  // 1-based position along the packet's normalized path
  int switch_id{};
  int class_id{};
  int flow_id{};
  std::uint64_t packet_id{};
  TraceEventKind kind{};
  Bits size;
};

struct EventTrace {
  std::vector<TraceRecord> records;

  // Appends in time order; assigns the stable tie-break sequence number.
  void append(TraceRecord r) {
    if (!records.empty() && r.time < records.back().time)
      throw TraceError("trace records appended out of time order");
    r.seq = records.size();
    records.push_back(r);
  }

  bool empty() const { return records.empty(); }
};

// ---------------------------------------------------------------------------
// Bound reports
// ---------------------------------------------------------------------------

struct ClassBound {
  int class_id{};
  Rational alpha{0};
  Rational delta{0};
  Rational epsilon{0};
  Rational zeta{0};
  Rational total{0};   // delta + epsilon + zeta, exact
  Tick bound;          // total rounded up to whole ticks
  Tick greedy_bound;   // H * (d + worst lower-priority packet time), rounded up
  // Unrestricted-window forms; computed for comparison, not proven.
  Rational delta_general{0};
  Rational delta_general_repaired{0};
};

struct BoundReport {
  bool admitted{true};
  std::vector<std::string> reasons;
  int H{1};
  Rate bottleneck{};
  Bits best_effort_p_max{};
  std::vector<ClassBound> classes;  // bounded classes only, ascending class_id

  const ClassBound* find_class(int class_id) const {
    for (const auto& c : classes)
      if (c.class_id == class_id) return &c;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Topology normalization
// ---------------------------------------------------------------------------

// Equalizes all flow paths to H stages by prepending zero-delay pass-through
// switches, validates path structure against the declared graph, and derives
// the bottleneck capacity from the links the flows actually use.
// Flow paths are rewritten in place.
inline Topology normalize_topology(const Topology& raw, std::vector<FlowSpec>& flows) {
  Topology out = raw;

  std::size_t longest = 0;
  std::vector<const Link*> used_links;
  for (const auto& f : flows) {
    if (f.path.empty())
      throw ConfigError("flow " + std::to_string(f.flow_id) + " has an empty path");
    std::set<int> seen;
    for (int sw : f.path) {
      if (sw == kEgressNode || !out.find_switch(sw))
        throw ConfigError("flow " + std::to_string(f.flow_id) + " references unknown switch " +
                          std::to_string(sw));
      if (!seen.insert(sw).second)
        throw ConfigError("cyclic flow path for flow " + std::to_string(f.flow_id));
    }
    for (std::size_t i = 0; i + 1 < f.path.size(); ++i) {
      const Link* l = out.find_link(f.path[i], f.path[i + 1]);
      if (!l)
        throw ConfigError("flow " + std::to_string(f.flow_id) + " needs missing link " +
                          std::to_string(f.path[i]) + "->" + std::to_string(f.path[i + 1]));
      used_links.push_back(l);
    }
    const Link* egress = out.find_link(f.path.back(), kEgressNode);
    if (!egress)
      throw ConfigError("switch " + std::to_string(f.path.back()) +
                        " has no egress link (to node 0) required by flow " +
                        std::to_string(f.flow_id));
    used_links.push_back(egress);
    longest = std::max(longest, f.path.size());
  }

  int H = raw.H > 0 ? raw.H : static_cast<int>(longest);
  if (static_cast<int>(longest) > H)
    throw ConfigError("declared H=" + std::to_string(H) + " is smaller than the longest path (" +
                      std::to_string(longest) + ")");
  out.H = H;

  int next_id = kEgressNode + 1;
  for (const auto& s : out.switches) next_id = std::max(next_id, s.id + 1);
  for (auto& f : flows) {
    while (static_cast<int>(f.path.size()) < H) {
      SwitchDesc pt;
      pt.id = next_id++;
      pt.pass_through = true;
      out.switches.push_back(pt);
      f.path.insert(f.path.begin(), pt.id);
    }
  }

  if (!out.bottleneck_capacity) {
    std::int64_t min_cap = 0;
    for (const Link* l : used_links)
      min_cap = min_cap == 0 ? l->capacity.bits_per_tick
                             : std::min(min_cap, l->capacity.bits_per_tick);
    if (min_cap == 0) {
      for (const auto& l : out.links)
        min_cap = min_cap == 0 ? l.capacity.bits_per_tick
                               : std::min(min_cap, l.capacity.bits_per_tick);
    }
    if (min_cap > 0) out.bottleneck_capacity = Rate(min_cap);
  }

  for (const auto& f : flows) assert(static_cast<int>(f.path.size()) == H);
  return out;
}

}  // namespace edgebound
