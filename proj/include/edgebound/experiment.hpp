#pragma once

#include "edgebound/engine.hpp"
#include "edgebound/io.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace edgebound {

// ---------------------------------------------------------------------------
// Reference streams
// ---------------------------------------------------------------------------

// Variable-size ingress burst used throughout the shaper walkthroughs:
// sizes 3,1,2,1,1 at t = 1,2,3,3,4.
inline std::vector<Arrival> reference_ingress() {
  return {{Tick(1), Bits(3)}, {Tick(2), Bits(1)}, {Tick(3), Bits(2)},
          {Tick(3), Bits(1)}, {Tick(4), Bits(1)}};
}

// Expected egress of that burst through a quantum shaper with sigma=4, D=6.
inline std::vector<std::pair<Tick, Bits>> reference_quantum_egress() {
  return {{Tick(1), Bits(3)}, {Tick(2), Bits(1)}, {Tick(7), Bits(2)},
          {Tick(7), Bits(1)}, {Tick(8), Bits(1)}};
}

// Pushes a prepared arrival list through a shaper and drains every later
// release up to `horizon`. offer() settles overdue replenishments itself, so
// no intermediate clock stepping is needed for exact release times.
inline std::vector<ShaperRelease> shape_stream(Shaper& shaper, const std::vector<Arrival>& arrivals,
                                               Tick horizon) {
  std::vector<ShaperRelease> out;
  std::uint64_t id = 0;
  for (const auto& a : arrivals) {
    auto released = shaper.offer(ShaperItem{id++, a.size, a.time}, a.time);
    out.insert(out.end(), released.begin(), released.end());
  }
  while (auto w = shaper.next_wakeup()) {
    if (*w > horizon) break;
    auto released = shaper.advance(*w);
    out.insert(out.end(), released.begin(), released.end());
  }
  return out;
}

inline std::vector<std::pair<Tick, Bits>> release_events(const std::vector<ShaperRelease>& rel) {
  std::vector<std::pair<Tick, Bits>> out;
  out.reserve(rel.size());
  for (const auto& r : rel) out.emplace_back(r.time, r.item.size);
  return out;
}

// Egress of a release list as a single-stage trace (zero dwell), suitable for
// the window metrics.
inline EventTrace trace_from_releases(const std::vector<ShaperRelease>& rel) {
  EventTrace t;
  for (const auto& r : rel) {
    TraceRecord rec;
    rec.time = r.time;
    rec.stage = 1;
    rec.switch_id = 1;
    rec.class_id = 1;
    rec.flow_id = 1;
    rec.packet_id = r.item.id;
    rec.size = r.item.size;
    rec.kind = TraceEventKind::arrival;
    t.append(rec);
    rec.kind = TraceEventKind::service_start;
    t.append(rec);
    rec.kind = TraceEventKind::service_end;
    t.append(rec);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Hand-built scenarios
// ---------------------------------------------------------------------------

// Saturating flow 1 plus a single flow-2 packet into a switch that always
// prefers the lowest flow id: backlog stays under two packets while the
// flow-2 packet waits forever.
inline Scenario starvation_scenario(Tick horizon) {
  Scenario s;
  SwitchDesc sw;
  sw.id = 1;
  sw.policy = PortPolicy::starve_low_input;
  s.topology.switches.push_back(sw);
  s.topology.links.push_back(Link{1, kEgressNode, Rate(1), Tick(0)});

  TrafficClass be;
  be.class_id = 1;
  be.p_max = Bits(8);
  s.classes.push_back(be);

  GeneratorSpec aggressor;
  aggressor.kind = GeneratorKind::periodic;
  aggressor.period = Tick(8);  // one packet per service time: back-to-back load
  aggressor.size = Bits(8);
  s.generators["aggressor"] = aggressor;

  GeneratorSpec victim;
  victim.kind = GeneratorKind::periodic;
  victim.period = Tick(1'000'000'000);
  victim.phase = Tick(2);
  victim.size = Bits(8);
  s.generators["victim"] = victim;

  FlowSpec f1;
  f1.flow_id = 1;
  f1.path = {1};
  f1.generator = "aggressor";
  s.flows.push_back(f1);
  FlowSpec f2;
  f2.flow_id = 2;
  f2.path = {1};
  f2.generator = "victim";
  s.flows.push_back(f2);

  s.run.duration = horizon;
  s.run.seed = 1;
  return s;
}

// Greedy source behind a quantum shaper (sigma=4, D=6) on a single switch.
inline Scenario utilization_scenario(ShaperKind kind) {
  Scenario s;
  s.topology.switches.push_back(SwitchDesc{1, false, PortPolicy::strict_priority});
  s.topology.links.push_back(Link{1, kEgressNode, Rate(2), Tick(0)});

  TrafficClass cls;
  cls.class_id = 1;
  cls.d = Tick(6);
  cls.share = Rate(2);
  cls.p_max = Bits(4);
  s.classes.push_back(cls);

  GeneratorSpec g;
  g.kind = GeneratorKind::greedy;
  g.packet_size = Bits(2);
  s.generators["src"] = g;

  FlowSpec f;
  f.flow_id = 1;
  f.class_id = 1;
  f.sigma = Bits(4);
  f.path = {1};
  f.generator = "src";
  if (kind == ShaperKind::quantum) {
    f.shaper.kind = ShaperKind::quantum;
    f.shaper.window = Tick(6);
  } else {
    f.shaper.kind = ShaperKind::leaky;
    f.shaper.capacity = Bits(4);
    f.shaper.rate_num = 1;
    f.shaper.rate_den = 6;
  }
  s.flows.push_back(f);

  s.run.duration = Tick(6000);  // 1000 windows
  s.run.seed = 1;
  return s;
}

// Random admitted single-class scenario on a line of H switches. Packet sizes
// are always multiples of every link capacity, so store-and-forward times are
// exact and the discrete run reproduces the fluid model it is checked against.
inline Scenario random_single_class_scenario(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0x51);
  Scenario s;

  const int H = 1 + static_cast<int>(bounded_draw(rng, 5));
  const int mode = static_cast<int>(bounded_draw(rng, 3));
  const std::int64_t base_cap = mode == 0 ? 1 : (mode == 1 ? 2 : 1 + bounded_draw(rng, 3));
  const bool mixed_caps = mode == 2;
  const std::int64_t unit = mixed_caps ? 2 * base_cap : base_cap;  // size granularity

  for (int i = 1; i <= H; ++i) s.topology.switches.push_back(SwitchDesc{i});
  auto link_cap = [&](std::uint64_t draw) {
    return Rate(mixed_caps && draw % 2 == 0 ? 2 * base_cap : base_cap);
  };
  for (int i = 1; i < H; ++i)
    s.topology.links.push_back(Link{i, i + 1, link_cap(bounded_draw(rng, 2)), Tick(0)});
  s.topology.links.push_back(Link{H, kEgressNode, link_cap(bounded_draw(rng, 2)), Tick(0)});

  const std::int64_t p_units = 2 + static_cast<std::int64_t>(bounded_draw(rng, 6));
  const Bits p_max(p_units * unit);

  const int n_flows = 1 + static_cast<int>(bounded_draw(rng, 20));
  std::vector<Bits> sigmas;
  std::int64_t sigma_total = 0;
  for (int i = 0; i < n_flows; ++i) {
    const Bits sigma(p_max.v + static_cast<std::int64_t>(bounded_draw(rng, p_max.v + 1)));
    sigmas.push_back(sigma);
    sigma_total += sigma.v;
  }

  // Window: at least the bottleneck drain time of all budgets (the derived
  // bottleneck is at least base_cap, so this is safe for any link mix).
  const Tick D(ceil_div(sigma_total, base_cap) + static_cast<std::int64_t>(bounded_draw(rng, 10)));

  TrafficClass cls;
  cls.class_id = 1;
  cls.d = D;
  cls.share = Rate(base_cap);
  cls.p_max = p_max;
  s.classes.push_back(cls);

  for (int i = 0; i < n_flows; ++i) {
    FlowSpec f;
    f.flow_id = i + 1;
    f.class_id = 1;
    f.sigma = sigmas[i];
    const int start = 1 + static_cast<int>(bounded_draw(rng, H));
    for (int sw = start; sw <= H; ++sw) f.path.push_back(sw);
    f.shaper.kind = ShaperKind::quantum;
    f.shaper.window = D;

    const std::string gname = "g" + std::to_string(i + 1);
    f.generator = gname;
    GeneratorSpec g;
    const Bits max_size(std::min(sigmas[i].v, p_max.v) / unit * unit);
    const auto pick_size = [&]() {
      return Bits(unit * (1 + static_cast<std::int64_t>(bounded_draw(
                                  rng, static_cast<std::uint64_t>(max_size.v / unit)))));
    };
    switch (bounded_draw(rng, mode == 0 ? 4 : 3)) {
      case 0:
        g.kind = GeneratorKind::periodic;
        g.period = Tick(1 + static_cast<std::int64_t>(bounded_draw(rng, 2 * D.v)));
        g.phase = Tick(bounded_draw(rng, D.v));
        g.size = pick_size();
        break;
      case 1:
        g.kind = GeneratorKind::bursty;
        g.burst_size = 1 + static_cast<int>(bounded_draw(rng, 4));
        g.burst_gap = Tick(1 + static_cast<std::int64_t>(bounded_draw(rng, 3 * D.v)));
        g.phase = Tick(bounded_draw(rng, D.v));
        g.packet_size = pick_size();
        break;
      case 2:
        g.kind = GeneratorKind::greedy;
        g.packet_size = pick_size();
        break;
      default:  // unit-capacity runs only: sizes need no granularity
        g.kind = GeneratorKind::uniform_random;
        g.mean_gap = Tick(1 + static_cast<std::int64_t>(bounded_draw(rng, D.v)));
        g.size_lo = Bits(1);
        g.size_hi = max_size;
        break;
    }
    s.generators[gname] = g;
    s.flows.push_back(f);
  }

  s.run.duration = Tick((25 + static_cast<std::int64_t>(bounded_draw(rng, 25))) * D.v);
  s.run.seed = seed;
  return s;
}

// Random admitted multi-class scenario: K = 2..3 bounded classes with evenly
// dividing windows plus greedy best-effort background, on a line of H
// switches with a uniform capacity that divides every packet size.
inline Scenario random_multi_class_scenario(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0xA7);
  Scenario s;

  const int H = 1 + static_cast<int>(bounded_draw(rng, 5));
  const int K = 2 + static_cast<int>(bounded_draw(rng, 2));
  const std::int64_t C = 6 + static_cast<std::int64_t>(bounded_draw(rng, 7));  // bits/tick

  for (int i = 1; i <= H; ++i) s.topology.switches.push_back(SwitchDesc{i});
  for (int i = 1; i < H; ++i) s.topology.links.push_back(Link{i, i + 1, Rate(C), Tick(0)});
  s.topology.links.push_back(Link{H, kEgressNode, Rate(C), Tick(0)});

  // Non-increasing priority gets non-decreasing packet ceilings.
  std::vector<std::int64_t> p_units(K + 1);
  p_units[0] = 1 + static_cast<std::int64_t>(bounded_draw(rng, 2));
  for (int k = 1; k <= K; ++k)
    p_units[k] = p_units[k - 1] + static_cast<std::int64_t>(bounded_draw(rng, 3));

  // Integer shares that leave headroom for best-effort.
  std::vector<std::int64_t> shares(K);
  std::int64_t left = C - 1;
  for (int k = 0; k < K; ++k) {
    const std::int64_t spread = std::max<std::int64_t>(1, left / (K - k));
    shares[k] = 1 + static_cast<std::int64_t>(bounded_draw(rng, spread));
    left -= shares[k];
  }

  std::vector<int> n_flows(K);
  for (int k = 0; k < K; ++k) n_flows[k] = 1 + static_cast<int>(bounded_draw(rng, 3));

  // Window chain d_k = d_1 * m_2 * ... * m_k keeps every ratio integral.
  std::vector<std::int64_t> mult(K, 1);
  for (int k = 1; k < K; ++k) mult[k] = 1 + static_cast<std::int64_t>(bounded_draw(rng, 3));
  std::vector<std::int64_t> scale(K, 1);
  for (int k = 1; k < K; ++k) scale[k] = scale[k - 1] * mult[k];

  std::int64_t d1 = 2 + static_cast<std::int64_t>(bounded_draw(rng, 8));
  for (int k = 0; k < K; ++k) {
    const std::int64_t need = ceil_div(n_flows[k] * p_units[k] * C, shares[k] * scale[k]);
    d1 = std::max(d1, need);
  }
  d1 += static_cast<std::int64_t>(bounded_draw(rng, 6));

  for (int k = 0; k < K; ++k) {
    TrafficClass cls;
    cls.class_id = k + 1;
    cls.d = Tick(d1 * scale[k]);
    cls.share = Rate(shares[k]);
    cls.p_max = Bits(p_units[k] * C);
    s.classes.push_back(cls);
  }
  TrafficClass be;
  be.class_id = K + 1;
  be.p_max = Bits(p_units[K] * C);
  s.classes.push_back(be);

  int flow_id = 0;
  for (int k = 0; k < K; ++k) {
    const Bits p_max = s.classes[k].p_max;
    const std::int64_t budget = s.classes[k].d->v * shares[k];
    std::int64_t spent = 0;
    for (int i = 0; i < n_flows[k]; ++i) {
      const std::int64_t spare = budget - spent - (n_flows[k] - i) * p_max.v;
      const Bits sigma(p_max.v +
                       (spare > 0 ? static_cast<std::int64_t>(bounded_draw(
                                        rng, static_cast<std::uint64_t>(spare / (n_flows[k] - i)) + 1))
                                  : 0));
      spent += sigma.v;

      FlowSpec f;
      f.flow_id = ++flow_id;
      f.class_id = k + 1;
      f.sigma = sigma;
      const int start = 1 + static_cast<int>(bounded_draw(rng, H));
      for (int sw = start; sw <= H; ++sw) f.path.push_back(sw);
      f.shaper.kind = ShaperKind::quantum;
      f.shaper.window = *s.classes[k].d;

      GeneratorSpec g;
      const auto pick_size = [&]() {
        return Bits(C * (1 + static_cast<std::int64_t>(
                                 bounded_draw(rng, static_cast<std::uint64_t>(p_units[k])))));
      };
      switch (bounded_draw(rng, 3)) {
        case 0:
          g.kind = GeneratorKind::periodic;
          g.period = Tick(1 + static_cast<std::int64_t>(bounded_draw(rng, 2 * s.classes[k].d->v)));
          g.phase = Tick(bounded_draw(rng, s.classes[k].d->v));
          g.size = pick_size();
          break;
        case 1:
          g.kind = GeneratorKind::bursty;
          g.burst_size = 1 + static_cast<int>(bounded_draw(rng, 3));
          g.burst_gap = Tick(1 + static_cast<std::int64_t>(bounded_draw(rng, 3 * s.classes[k].d->v)));
          g.phase = Tick(bounded_draw(rng, s.classes[k].d->v));
          g.packet_size = pick_size();
          break;
        default:
          g.kind = GeneratorKind::greedy;
          g.packet_size = pick_size();
          break;
      }
      const std::string gname = "g" + std::to_string(f.flow_id);
      s.generators[gname] = g;
      f.generator = gname;
      s.flows.push_back(f);
    }
  }

  // Greedy best-effort background: closed-loop, a couple of packets in flight.
  const int n_be = 1 + static_cast<int>(bounded_draw(rng, 2));
  for (int i = 0; i < n_be; ++i) {
    FlowSpec f;
    f.flow_id = ++flow_id;
    f.class_id = K + 1;
    const int start = 1 + static_cast<int>(bounded_draw(rng, H));
    for (int sw = start; sw <= H; ++sw) f.path.push_back(sw);
    GeneratorSpec g;
    g.kind = GeneratorKind::greedy;
    g.packet_size = be.p_max;
    const std::string gname = "g" + std::to_string(f.flow_id);
    s.generators[gname] = g;
    f.generator = gname;
    s.flows.push_back(f);
  }

  const std::int64_t dK = s.classes[K - 1].d->v;
  s.run.duration = Tick((20 + static_cast<std::int64_t>(bounded_draw(rng, 20))) * dK);
  s.run.seed = seed;
  return s;
}

// ---------------------------------------------------------------------------
// Per-scenario bound verification
// ---------------------------------------------------------------------------

struct BoundCheck {
  bool delays_ok{true};
  bool greedy_ordering_ok{true};
  bool bi_ok{true};
  bool identities_ok{true};
  bool audits_ok{true};
  std::int64_t worst_margin{std::numeric_limits<std::int64_t>::max()};
  std::string detail;

  bool ok() const { return delays_ok && greedy_ordering_ok && bi_ok && identities_ok && audits_ok; }
};

// Runs one admitted scenario and checks every delivered packet against its
// class bound, the computed bounds against the greedy per-hop bounds, the
// whole-network backlog against the loosest admissible ceiling, and the trace
// against the exact conservation identities and scheduling audits.
inline BoundCheck check_bound_scenario(Scenario& s, std::optional<std::uint64_t> seed = {}) {
  BoundCheck check;

  const AdmissionReport adm = validate_scenario(s);
  if (!adm.admitted) {
    check.delays_ok = false;
    check.detail = "scenario not admitted: " + (adm.reasons.empty() ? "" : adm.reasons.front());
    return check;
  }
  const BoundReport bounds = scenario_bounds(s);
  if (!bounds.admitted) {
    check.delays_ok = false;
    check.detail = "bound report rejected the class set";
    return check;
  }

  Simulation sim(s, seed);
  const RunResult result = sim.run();

  for (const auto& c : bounds.classes) {
    if (c.bound > c.greedy_bound) {
      check.greedy_ordering_ok = false;
      check.detail = "class " + std::to_string(c.class_id) + " bound exceeds the greedy bound";
    }
  }

  for (const auto& p : result.packets) {
    if (!p.delivered) continue;
    const ClassBound* b = bounds.find_class(p.class_id);
    if (!b) continue;  // best-effort
    const std::int64_t margin = b->bound.v - p.delay().v;
    check.worst_margin = std::min(check.worst_margin, margin);
    if (margin < 0) {
      check.delays_ok = false;
      check.detail = "packet " + std::to_string(p.id) + " (class " + std::to_string(p.class_id) +
                     ") delayed " + std::to_string(p.delay().v) + " ticks, bound " +
                     std::to_string(b->bound.v);
    }
  }

  TraceAnalyzer analyzer(result.trace);
  const Bits bi_ceiling = necessary_bi_bound(bounds.classes.back().bound, bounds.bottleneck);
  const auto peak = analyzer.max_bi(Scope::network());
  if (peak.value > bi_ceiling) {
    check.bi_ok = false;
    check.detail = "backlog peak " + std::to_string(peak.value.v) + " bits at t=" +
                   std::to_string(peak.at.v) + " exceeds ceiling " + std::to_string(bi_ceiling.v);
  }

  std::vector<Tick> windows;
  for (const auto& c : s.classes)
    if (c.d) windows.push_back(*c.d);
  windows.push_back(bounds.classes.back().bound);
  const IdentityReport idr = verify_identities(result.trace, windows, 64);
  if (!idr.ok) {
    check.identities_ok = false;
    check.detail = idr.issues.empty() ? "identity check failed" : idr.issues.front();
  }

  const AuditResult wc = audit_work_conservation(result.trace, s.normalized_flows, s.normalized);
  const AuditResult ff = audit_flow_fifo(result.trace);
  if (!wc.ok || !ff.ok) {
    check.audits_ok = false;
    check.detail = !wc.ok ? wc.detail : ff.detail;
  }
  return check;
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

struct SeedOutcome {
  std::uint64_t seed{};
  bool ok{true};
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  int runs{0};
  int violations{0};
  // Per-aspect tallies for the bound suites.
  int delay_violations{0};
  int greedy_violations{0};
  int bi_violations{0};
  int identity_violations{0};
  int audit_violations{0};
  std::vector<std::string> notes;
  std::vector<SeedOutcome> outcomes;

  bool ok() const { return violations == 0; }
};

namespace detail {

inline void finish(SuiteResult& r, const SeedOutcome& o, const std::string& out_dir,
                   const Scenario* repro) {
  ++r.runs;
  r.outcomes.push_back(o);
  if (!o.ok) {
    ++r.violations;
    if (repro && !out_dir.empty())
      save_scenario(*repro, out_dir + "/violation_seed_" + std::to_string(o.seed) + ".json");
  }
}

}  // namespace detail

inline SuiteResult run_fig4_suite() {
  SuiteResult r;
  r.suite = "fig4";

  {
    QuantumShaper q(Bits(4), Tick(6));
    const auto egress = release_events(shape_stream(q, reference_ingress(), Tick(100)));
    SeedOutcome o{0, egress == reference_quantum_egress(), ""};
    if (!o.ok) o.detail = "quantum egress diverged from the reference walkthrough";
    r.notes.push_back("quantum egress matches the reference walkthrough: " +
                      std::string(o.ok ? "yes" : "NO"));
    detail::finish(r, o, "", nullptr);
  }
  {
    LeakyBucket fast(Bits(4), 3, 6);
    const auto rel = shape_stream(fast, reference_ingress(), Tick(100));
    TraceAnalyzer a(trace_from_releases(rel));
    const auto wm = a.sliding_window_max(Tick(6), Scope::network());
    SeedOutcome o{1, wm.value > Bits(4), ""};
    if (!o.ok) o.detail = "rate 3/6 leaky bucket unexpectedly satisfied the window cap";
    r.notes.push_back("leaky 3-per-6 worst 6-tick window: " + std::to_string(wm.value.v) +
                      " bits (witness t=" + std::to_string(wm.witness.v) + ")");
    detail::finish(r, o, "", nullptr);
  }
  {
    LeakyBucket slow(Bits(4), 1, 6);
    const auto rel = shape_stream(slow, reference_ingress(), Tick(100));
    TraceAnalyzer a(trace_from_releases(rel));
    const auto wm = a.sliding_window_max(Tick(6), Scope::network());
    SeedOutcome o{2, wm.value <= Bits(4), ""};
    if (!o.ok) o.detail = "rate 1/6 leaky bucket violated the window cap";
    r.notes.push_back("leaky 1-per-6 worst 6-tick window: " + std::to_string(wm.value.v) +
                      " bits");
    detail::finish(r, o, "", nullptr);
  }
  return r;
}

inline SuiteResult run_starvation_suite() {
  SuiteResult r;
  r.suite = "starvation";
  const Bits p_max(8);
  std::vector<std::int64_t> waits;
  for (std::int64_t horizon : {1000, 10000, 100000}) {
    Scenario s = starvation_scenario(Tick(horizon));
    validate_scenario(s);
    Simulation sim(s);
    const RunResult result = sim.run();

    const Packet* victim = nullptr;
    for (const auto& p : result.packets)
      if (p.flow_id == 2) victim = &p;

    TraceAnalyzer a(result.trace);
    const auto peak = a.max_bi(Scope::network());

    SeedOutcome o{static_cast<std::uint64_t>(horizon), true, ""};
    if (!victim || victim->delivered) {
      o.ok = false;
      o.detail = "victim packet unexpectedly delivered";
    } else if (peak.value > Bits(2 * p_max.v)) {
      o.ok = false;
      o.detail = "backlog exceeded two packets: " + std::to_string(peak.value.v);
    } else {
      waits.push_back(horizon - victim->ingress_time.v);
    }
    r.notes.push_back("horizon " + std::to_string(horizon) + ": victim waited " +
                      std::to_string(victim ? horizon - victim->ingress_time.v : -1) +
                      " ticks, peak backlog " + std::to_string(peak.value.v) + " bits");
    detail::finish(r, o, "", nullptr);
  }
  if (waits.size() == 3 && (waits[1] < 9 * waits[0] || waits[2] < 9 * waits[1])) {
    SeedOutcome o{999, false, "victim waiting time did not grow linearly with the horizon"};
    detail::finish(r, o, "", nullptr);
  }
  return r;
}

inline SuiteResult run_bound_suite(const std::string& name,
                                   const std::vector<std::uint64_t>& seeds,
                                   const std::string& out_dir) {
  SuiteResult r;
  r.suite = name;
  const bool multi = name == "multi-class-bound";
  std::int64_t worst_margin = std::numeric_limits<std::int64_t>::max();
  for (std::uint64_t seed : seeds) {
    Scenario s = multi ? random_multi_class_scenario(seed) : random_single_class_scenario(seed);
    BoundCheck check = check_bound_scenario(s);
    worst_margin = std::min(worst_margin, check.worst_margin);
    r.delay_violations += check.delays_ok ? 0 : 1;
    r.greedy_violations += check.greedy_ordering_ok ? 0 : 1;
    r.bi_violations += check.bi_ok ? 0 : 1;
    r.identity_violations += check.identities_ok ? 0 : 1;
    r.audit_violations += check.audits_ok ? 0 : 1;
    detail::finish(r, SeedOutcome{seed, check.ok(), check.detail}, out_dir, &s);
  }
  r.notes.push_back("worst delay margin under the bound: " +
                    (worst_margin == std::numeric_limits<std::int64_t>::max()
                         ? std::string("n/a")
                         : std::to_string(worst_margin) + " ticks"));
  return r;
}

struct UtilizationOutcome {
  double quantum_rate{0};
  double leaky_rate{0};
  double target{0};
};

inline UtilizationOutcome measure_utilization() {
  UtilizationOutcome u;
  u.target = 4.0 / 6.0;
  {
    Scenario s = utilization_scenario(ShaperKind::quantum);
    validate_scenario(s);
    Simulation sim(s);
    const RunResult result = sim.run();
    TraceAnalyzer a(result.trace);
    std::int64_t bits = 0;
    for (const auto& [t, b] : a.arrival_events(Scope::at_stage(1))) bits += b.v;
    u.quantum_rate = static_cast<double>(bits) / static_cast<double>(result.horizon.v);
  }
  {
    Scenario s = utilization_scenario(ShaperKind::leaky);
    validate_scenario(s);
    Simulation sim(s);
    const RunResult result = sim.run();
    TraceAnalyzer a(result.trace);
    std::int64_t bits = 0;
    for (const auto& [t, b] : a.arrival_events(Scope::at_stage(1))) bits += b.v;
    u.leaky_rate = static_cast<double>(bits) / static_cast<double>(result.horizon.v);
  }
  return u;
}

inline SuiteResult run_utilization_suite() {
  SuiteResult r;
  r.suite = "utilization";
  const UtilizationOutcome u = measure_utilization();
  SeedOutcome o{0, true, ""};
  if (std::abs(u.quantum_rate - u.target) > 0.01 * u.target) {
    o.ok = false;
    o.detail = "quantum egress rate " + std::to_string(u.quantum_rate) +
               " deviates more than 1% from " + std::to_string(u.target);
  }
  r.notes.push_back("quantum egress rate " + std::to_string(u.quantum_rate) + " vs target " +
                    std::to_string(u.target));
  r.notes.push_back("reduced-rate leaky bucket egress rate " + std::to_string(u.leaky_rate) +
                    " (underutilization contrast)");
  detail::finish(r, o, "", nullptr);

  SeedOutcome contrast{1, u.leaky_rate < 0.5 * u.quantum_rate,
                       "leaky rate is not materially below the quantum rate"};
  if (contrast.ok) contrast.detail.clear();
  detail::finish(r, contrast, "", nullptr);
  return r;
}

inline std::vector<std::uint64_t> default_seeds(int n) {
  std::vector<std::uint64_t> seeds;
  for (int i = 1; i <= n; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
  return seeds;
}

inline SuiteResult run_suite(const std::string& name, const std::vector<std::uint64_t>& seeds,
                             const std::string& out_dir) {
  if (name == "fig4") return run_fig4_suite();
  if (name == "starvation") return run_starvation_suite();
  if (name == "single-class-bound") return run_bound_suite(name, seeds, out_dir);
  if (name == "multi-class-bound") return run_bound_suite(name, seeds, out_dir);
  if (name == "utilization") return run_utilization_suite();
  throw ConfigError("unknown suite '" + name +
                    "'; expected fig4, starvation, single-class-bound, multi-class-bound, or "
                    "utilization");
}

inline json suite_to_json(const SuiteResult& r) {
  json out;
  out["suite"] = r.suite;
  out["runs"] = r.runs;
  out["violations"] = r.violations;
  out["delay_violations"] = r.delay_violations;
  out["greedy_violations"] = r.greedy_violations;
  out["bi_violations"] = r.bi_violations;
  out["identity_violations"] = r.identity_violations;
  out["audit_violations"] = r.audit_violations;
  out["notes"] = r.notes;
  out["outcomes"] = json::array();
  for (const auto& o : r.outcomes) {
    json d{{"seed", o.seed}, {"ok", o.ok}};
    if (!o.detail.empty()) d["detail"] = o.detail;
    out["outcomes"].push_back(d);
  }
  return out;
}

}  // namespace edgebound
