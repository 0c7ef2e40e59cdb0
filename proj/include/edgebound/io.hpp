#pragma once

#include "edgebound/engine.hpp"
#include "edgebound/metrics.hpp"
#include "edgebound/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace edgebound {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Scenario JSON
// ---------------------------------------------------------------------------

namespace detail {

inline std::int64_t require_int(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key))
    throw ConfigError(ctx + ": missing field '" + key + "'");
  if (!j[key].is_number_integer())
    throw ConfigError(ctx + ": field '" + key + "' must be an integer");
  return j[key].get<std::int64_t>();
}

inline std::int64_t optional_int(const json& j, const std::string& key, std::int64_t fallback) {
  return j.contains(key) ? j[key].get<std::int64_t>() : fallback;
}

inline GeneratorKind parse_generator_kind(const std::string& s, const std::string& ctx) {
  if (s == "periodic") return GeneratorKind::periodic;
  if (s == "bursty") return GeneratorKind::bursty;
  if (s == "uniform-random" || s == "uniform_random") return GeneratorKind::uniform_random;
  if (s == "greedy") return GeneratorKind::greedy;
  throw ConfigError(ctx + ": unknown generator kind '" + s + "'");
}

inline const char* generator_kind_name(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::periodic: return "periodic";
    case GeneratorKind::bursty: return "bursty";
    case GeneratorKind::uniform_random: return "uniform-random";
    case GeneratorKind::greedy: return "greedy";
  }
  return "?";
}

inline json rational_json(const Rational& r) {
  return json{{"num", r.numerator()}, {"den", r.denominator()}, {"approx", to_double(r)}};
}

}  // namespace detail

inline Scenario scenario_from_json(const json& j) {
  Scenario s;

  if (!j.contains("topology")) throw ConfigError("scenario: missing 'topology' section");
  const json& topo = j["topology"];
  for (const auto& sw : topo.value("switches", json::array())) {
    SwitchDesc d;
    d.id = static_cast<int>(detail::require_int(sw, "id", "switch"));
    d.pass_through = sw.value("pass_through", false);
    const std::string policy = sw.value("policy", "strict_priority");
    if (policy == "strict_priority")
      d.policy = PortPolicy::strict_priority;
    else if (policy == "starve_low_input")
      d.policy = PortPolicy::starve_low_input;
    else
      throw ConfigError("switch " + std::to_string(d.id) + ": unknown policy '" + policy + "'");
    s.topology.switches.push_back(d);
  }
  for (const auto& lk : topo.value("links", json::array())) {
    Link l;
    l.from = static_cast<int>(detail::require_int(lk, "from", "link"));
    l.to = static_cast<int>(detail::require_int(lk, "to", "link"));
    l.capacity = Rate(detail::require_int(lk, "capacity", "link"));
    l.propagation = Tick(detail::optional_int(lk, "propagation", 0));
    s.topology.links.push_back(l);
  }
  if (topo.contains("bottleneck_capacity"))
    s.topology.bottleneck_capacity = Rate(topo["bottleneck_capacity"].get<std::int64_t>());
  s.topology.H = static_cast<int>(detail::optional_int(topo, "H", 0));

  for (const auto& c : j.value("classes", json::array())) {
    TrafficClass tc;
    tc.class_id = static_cast<int>(detail::require_int(c, "class_id", "class"));
    if (c.contains("d_k")) tc.d = Tick(c["d_k"].get<std::int64_t>());
    if (c.contains("C_k")) tc.share = Rate(c["C_k"].get<std::int64_t>());
    tc.p_max = Bits(detail::optional_int(c, "P_max_k", 0));
    s.classes.push_back(tc);
  }

  for (const auto& [name, g] : j.value("generators", json::object()).items()) {
    GeneratorSpec spec;
    const std::string ctx = "generator '" + name + "'";
    if (!g.contains("kind")) throw ConfigError(ctx + ": missing field 'kind'");
    spec.kind = detail::parse_generator_kind(g["kind"].get<std::string>(), ctx);
    spec.phase = Tick(detail::optional_int(g, "phase", 0));
    switch (spec.kind) {
      case GeneratorKind::periodic:
        spec.period = Tick(detail::require_int(g, "period", ctx));
        spec.size = Bits(detail::require_int(g, "size", ctx));
        break;
      case GeneratorKind::bursty:
        spec.burst_size = static_cast<int>(detail::require_int(g, "burst_size", ctx));
        spec.burst_gap = Tick(detail::require_int(g, "burst_gap", ctx));
        spec.packet_size = Bits(detail::require_int(g, "packet_size", ctx));
        break;
      case GeneratorKind::uniform_random: {
        spec.mean_gap = Tick(detail::require_int(g, "mean_gap", ctx));
        if (!g.contains("size_range") || !g["size_range"].is_array() ||
            g["size_range"].size() != 2)
          throw ConfigError(ctx + ": 'size_range' must be [lo, hi]");
        spec.size_lo = Bits(g["size_range"][0].get<std::int64_t>());
        spec.size_hi = Bits(g["size_range"][1].get<std::int64_t>());
        break;
      }
      case GeneratorKind::greedy:
        spec.packet_size = Bits(detail::require_int(g, "packet_size", ctx));
        break;
    }
    s.generators[name] = spec;
  }

  for (const auto& fj : j.value("flows", json::array())) {
    FlowSpec f;
    f.flow_id = static_cast<int>(detail::require_int(fj, "flow_id", "flow"));
    const std::string ctx = "flow " + std::to_string(f.flow_id);
    f.class_id = static_cast<int>(detail::require_int(fj, "class_id", ctx));
    f.sigma = Bits(detail::optional_int(fj, "sigma", 0));
    if (!fj.contains("path") || !fj["path"].is_array())
      throw ConfigError(ctx + ": missing 'path' array");
    for (const auto& sw : fj["path"]) f.path.push_back(sw.get<int>());
    if (!fj.contains("generator")) throw ConfigError(ctx + ": missing 'generator'");
    f.generator = fj["generator"].get<std::string>();
    if (fj.contains("shaper")) {
      const json& sh = fj["shaper"];
      const std::string kind = sh.value("kind", "none");
      if (kind == "none") {
        f.shaper.kind = ShaperKind::none;
      } else if (kind == "quantum") {
        f.shaper.kind = ShaperKind::quantum;
        f.shaper.window = Tick(detail::require_int(sh, "D", ctx + " shaper"));
      } else if (kind == "leaky") {
        f.shaper.kind = ShaperKind::leaky;
        f.shaper.capacity = Bits(detail::require_int(sh, "capacity", ctx + " shaper"));
        if (!sh.contains("replenish_rate"))
          throw ConfigError(ctx + " shaper: missing 'replenish_rate'");
        f.shaper.rate_num = detail::require_int(sh["replenish_rate"], "num", ctx + " shaper rate");
        f.shaper.rate_den = detail::require_int(sh["replenish_rate"], "den", ctx + " shaper rate");
      } else {
        throw ConfigError(ctx + ": unknown shaper kind '" + kind + "'");
      }
    }
    s.flows.push_back(f);
  }

  if (j.contains("run")) {
    s.run.duration = Tick(detail::require_int(j["run"], "duration", "run"));
    s.run.seed = static_cast<std::uint64_t>(detail::optional_int(j["run"], "seed", 1));
  }
  const std::string scope = j.value("admission_scope", "network");
  if (scope == "network")
    s.admission_scope = AdmissionScope::network;
  else if (scope == "per_link")
    s.admission_scope = AdmissionScope::per_link;
  else
    throw ConfigError("unknown admission_scope '" + scope + "'");

  return s;
}

inline json scenario_to_json(const Scenario& s) {
  json topo;
  topo["switches"] = json::array();
  for (const auto& sw : s.topology.switches) {
    json d{{"id", sw.id}};
    if (sw.pass_through) d["pass_through"] = true;
    if (sw.policy == PortPolicy::starve_low_input) d["policy"] = "starve_low_input";
    topo["switches"].push_back(d);
  }
  topo["links"] = json::array();
  for (const auto& l : s.topology.links) {
    json d{{"from", l.from}, {"to", l.to}, {"capacity", l.capacity.bits_per_tick}};
    if (l.propagation.v != 0) d["propagation"] = l.propagation.v;
    topo["links"].push_back(d);
  }
  if (s.topology.bottleneck_capacity)
    topo["bottleneck_capacity"] = s.topology.bottleneck_capacity->bits_per_tick;
  if (s.topology.H > 0) topo["H"] = s.topology.H;

  json classes = json::array();
  for (const auto& c : s.classes) {
    json d{{"class_id", c.class_id}, {"P_max_k", c.p_max.v}};
    if (c.d) d["d_k"] = c.d->v;
    if (c.share) d["C_k"] = c.share->bits_per_tick;
    classes.push_back(d);
  }

  json generators = json::object();
  for (const auto& [name, g] : s.generators) {
    json d{{"kind", detail::generator_kind_name(g.kind)}};
    if (g.phase.v != 0) d["phase"] = g.phase.v;
    switch (g.kind) {
      case GeneratorKind::periodic:
        d["period"] = g.period.v;
        d["size"] = g.size.v;
        break;
      case GeneratorKind::bursty:
        d["burst_size"] = g.burst_size;
        d["burst_gap"] = g.burst_gap.v;
        d["packet_size"] = g.packet_size.v;
        break;
      case GeneratorKind::uniform_random:
        d["mean_gap"] = g.mean_gap.v;
        d["size_range"] = json::array({g.size_lo.v, g.size_hi.v});
        break;
      case GeneratorKind::greedy:
        d["packet_size"] = g.packet_size.v;
        break;
    }
    generators[name] = d;
  }

  json flows = json::array();
  for (const auto& f : s.flows) {
    json d{{"flow_id", f.flow_id},
           {"class_id", f.class_id},
           {"sigma", f.sigma.v},
           {"path", f.path},
           {"generator", f.generator}};
    switch (f.shaper.kind) {
      case ShaperKind::none:
        break;
      case ShaperKind::quantum:
        d["shaper"] = json{{"kind", "quantum"}, {"D", f.shaper.window.v}};
        break;
      case ShaperKind::leaky:
        d["shaper"] = json{{"kind", "leaky"},
                           {"capacity", f.shaper.capacity.v},
                           {"replenish_rate",
                            json{{"num", f.shaper.rate_num}, {"den", f.shaper.rate_den}}}};
        break;
    }
    flows.push_back(d);
  }

  json out;
  out["topology"] = topo;
  out["classes"] = classes;
  out["flows"] = flows;
  out["generators"] = generators;
  out["run"] = json{{"duration", s.run.duration.v}, {"seed", s.run.seed}};
  if (s.admission_scope == AdmissionScope::per_link) out["admission_scope"] = "per_link";
  return out;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario parse error in " + path + ": " + e.what());
  }
  return scenario_from_json(j);
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write scenario file: " + path);
  out << scenario_to_json(s).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Trace and packet CSV (column orders are frozen; see README)
// ---------------------------------------------------------------------------

inline void write_trace_csv(const EventTrace& trace, std::ostream& out) {
  out << "time,seq,stage,switch,class,flow,packet,kind,size\n";
  for (const auto& r : trace.records) {
    out << r.time.v << ',' << r.seq << ',' << r.stage << ',' << r.switch_id << ',' << r.class_id
        << ',' << r.flow_id << ',' << r.packet_id << ',' << to_string(r.kind) << ',' << r.size.v
        << '\n';
  }
}

inline void write_trace_csv(const EventTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trace file: " + path);
  write_trace_csv(trace, out);
}

inline EventTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw TraceError("empty trace file");
  std::vector<TraceRecord> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 9)
      throw TraceError("trace line " + std::to_string(line_no) + ": expected 9 columns");
    TraceRecord r;
    try {
      r.time = Tick(std::stoll(fields[0]));
      r.seq = std::stoull(fields[1]);
      r.stage = std::stoi(fields[2]);
      r.switch_id = std::stoi(fields[3]);
      r.class_id = std::stoi(fields[4]);
      r.flow_id = std::stoi(fields[5]);
      r.packet_id = std::stoull(fields[6]);
      r.size = Bits(std::stoll(fields[8]));
    } catch (const std::exception&) {
      throw TraceError("trace line " + std::to_string(line_no) + ": bad number");
    }
    if (fields[7] == "arrival")
      r.kind = TraceEventKind::arrival;
    else if (fields[7] == "service_start")
      r.kind = TraceEventKind::service_start;
    else if (fields[7] == "service_end")
      r.kind = TraceEventKind::service_end;
    else
      throw TraceError("trace line " + std::to_string(line_no) + ": bad kind '" + fields[7] + "'");
    rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end(), [](const TraceRecord& a, const TraceRecord& b) {
    return std::tie(a.time.v, a.seq) < std::tie(b.time.v, b.seq);
  });
  EventTrace trace;
  for (const auto& r : rows) trace.append(r);
  return trace;
}

inline EventTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open trace file: " + path);
  return read_trace_csv(in);
}

inline void write_packets_csv(const std::vector<Packet>& packets, std::ostream& out) {
  out << "packet,flow,class,size,emit,ingress,egress,delay,delivered\n";
  for (const auto& p : packets) {
    out << p.id << ',' << p.flow_id << ',' << p.class_id << ',' << p.size.v << ','
        << p.emit_time.v << ',' << p.ingress_time.v << ',';
    if (p.delivered)
      out << p.egress_time.v << ',' << p.delay().v << ",1\n";
    else
      out << "-1,-1,0\n";
  }
}

inline void write_packets_csv(const std::vector<Packet>& packets, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write packets file: " + path);
  write_packets_csv(packets, out);
}

// ---------------------------------------------------------------------------
// Bound report rendering
// ---------------------------------------------------------------------------

inline json bound_report_to_json(const BoundReport& r) {
  json out;
  out["admitted"] = r.admitted;
  out["reasons"] = r.reasons;
  out["H"] = r.H;
  out["bottleneck_capacity"] = r.bottleneck.bits_per_tick;
  out["best_effort_p_max"] = r.best_effort_p_max.v;
  out["classes"] = json::array();
  for (const auto& c : r.classes) {
    json d;
    d["class_id"] = c.class_id;
    d["alpha"] = detail::rational_json(c.alpha);
    d["delta"] = detail::rational_json(c.delta);
    d["epsilon"] = detail::rational_json(c.epsilon);
    d["zeta"] = detail::rational_json(c.zeta);
    d["total"] = detail::rational_json(c.total);
    d["bound_ticks"] = c.bound.v;
    d["greedy_bound_ticks"] = c.greedy_bound.v;
    d["delta_general"] = detail::rational_json(c.delta_general);
    d["delta_general_repaired"] = detail::rational_json(c.delta_general_repaired);
    d["general_form"] = "conjectured";
    out["classes"].push_back(d);
  }
  return out;
}

inline std::string bound_report_table(const BoundReport& r) {
  std::ostringstream out;
  out << "admitted: " << (r.admitted ? "yes" : "no") << "\n";
  for (const auto& reason : r.reasons) out << "  ! " << reason << "\n";
  out << "H=" << r.H << "  C=" << r.bottleneck.bits_per_tick << " bits/tick"
      << "  best-effort p_max=" << r.best_effort_p_max.v << " bits\n";
  out << std::left << std::setw(7) << "class" << std::setw(10) << "alpha" << std::setw(10)
      << "delta" << std::setw(10) << "epsilon" << std::setw(10) << "zeta" << std::setw(12)
      << "bound" << std::setw(14) << "greedy bound" << "\n";
  for (const auto& c : r.classes) {
    out << std::left << std::setw(7) << c.class_id << std::setw(10) << std::fixed
        << std::setprecision(3) << to_double(c.alpha) << std::setw(10) << to_double(c.delta)
        << std::setw(10) << to_double(c.epsilon) << std::setw(10) << to_double(c.zeta)
        << std::setw(12) << c.bound.v << std::setw(14) << c.greedy_bound.v << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Run summary
// ---------------------------------------------------------------------------

// Per-class delay statistics with the computed bounds and the measured
// whole-network backlog peak against its admissible ceiling.
inline json build_summary(const Scenario& s, const RunResult& result,
                          const BoundReport* bounds) {
  json out;
  out["horizon"] = result.horizon.v;
  out["seed"] = s.run.seed;

  TraceAnalyzer analyzer(result.trace);
  json per_class = json::array();
  std::int64_t violations = 0;
  for (const auto& cls : s.classes) {
    std::int64_t delivered = 0, in_flight = 0;
    std::int64_t max_delay = -1;
    double sum_delay = 0;
    for (const auto& p : result.packets) {
      if (p.class_id != cls.class_id) continue;
      if (p.delivered) {
        ++delivered;
        max_delay = std::max(max_delay, p.delay().v);
        sum_delay += static_cast<double>(p.delay().v);
      } else {
        ++in_flight;
      }
    }
    json d;
    d["class_id"] = cls.class_id;
    d["delivered"] = delivered;
    d["in_flight"] = in_flight;
    d["max_delay"] = max_delay;
    d["mean_delay"] = delivered > 0 ? sum_delay / static_cast<double>(delivered) : 0.0;
    if (bounds) {
      if (const ClassBound* b = bounds->find_class(cls.class_id)) {
        d["bound"] = b->bound.v;
        d["greedy_bound"] = b->greedy_bound.v;
        d["margin"] = b->bound.v - max_delay;
        if (max_delay > b->bound.v) ++violations;
      }
    }
    per_class.push_back(d);
  }
  out["classes"] = per_class;
  out["delay_violations"] = violations;

  const auto peak = analyzer.max_bi(Scope::network());
  out["max_bi"] = peak.value.v;
  out["max_bi_at"] = peak.at.v;
  if (bounds && !bounds->classes.empty()) {
    const Bits ceiling = necessary_bi_bound(bounds->classes.back().bound, bounds->bottleneck);
    out["bi_bound"] = ceiling.v;
    out["bi_ok"] = peak.value <= ceiling;
  }
  return out;
}

}  // namespace edgebound
