#pragma once

#include "edgebound/bounds.hpp"
#include "edgebound/model.hpp"
#include "edgebound/traffic.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace edgebound {

struct RunConfig {
  Tick duration{Tick(1000)};
  std::uint64_t seed{1};
};

// Which capacity the budget gate divides among flows: the network-wide
// bottleneck (every class-k budget shares one pool), or each link separately
// (flows only share the pools of links they actually cross, scaled by the
// link's capacity relative to the bottleneck).
enum class AdmissionScope { network, per_link };

struct Scenario {
  Topology topology;  // as declared
  std::vector<TrafficClass> classes;
  std::vector<FlowSpec> flows;  // as declared
  std::map<std::string, GeneratorSpec> generators;
  RunConfig run;
  AdmissionScope admission_scope{AdmissionScope::network};

  // Filled by validate_scenario().
  Topology normalized;
  std::vector<FlowSpec> normalized_flows;
  int K{0};
  bool validated{false};
};

struct AdmissionReport {
  bool admitted{true};
  std::vector<std::string> reasons;
};

namespace detail {

// Real links crossed by a normalized flow path, egress link included.
inline std::vector<const Link*> links_of(const Topology& topo, const FlowSpec& f) {
  std::vector<const Link*> out;
  std::vector<int> real;
  for (int sw : f.path) {
    const SwitchDesc* d = topo.find_switch(sw);
    if (d && !d->pass_through) real.push_back(sw);
  }
  for (std::size_t i = 0; i + 1 < real.size(); ++i) out.push_back(topo.find_link(real[i], real[i + 1]));
  if (!real.empty()) out.push_back(topo.find_link(real.back(), kEgressNode));
  return out;
}

}  // namespace detail

// Structural validation (throws ConfigError) followed by the budget gate
// (reported, not thrown). Normalizes the topology and flow paths as a side
// effect; the declared sections are left untouched.
inline AdmissionReport validate_scenario(Scenario& s) {
  s.K = validate_classes(s.classes);

  std::set<int> flow_ids;
  for (const auto& f : s.flows) {
    if (!flow_ids.insert(f.flow_id).second)
      throw ConfigError("duplicate flow id " + std::to_string(f.flow_id));
    if (f.class_id < 1 || f.class_id > static_cast<int>(s.classes.size()))
      throw ConfigError("flow " + std::to_string(f.flow_id) + " references unknown class " +
                        std::to_string(f.class_id));
    auto g = s.generators.find(f.generator);
    if (g == s.generators.end())
      throw ConfigError("flow " + std::to_string(f.flow_id) + " references unknown generator '" +
                        f.generator + "'");
    const TrafficClass& cls = s.classes[f.class_id - 1];
    if (g->second.max_size() > cls.p_max)
      throw ConfigError("generator '" + f.generator + "' emits packets above class " +
                        std::to_string(f.class_id) + " p_max");
    if (!cls.best_effort() && f.sigma < cls.p_max)
      throw ConfigError("flow " + std::to_string(f.flow_id) + " budget " +
                        std::to_string(f.sigma.v) + " is below class p_max " +
                        std::to_string(cls.p_max.v) + "; a full-size packet would starve");
    if (f.shaper.kind == ShaperKind::quantum && f.shaper.window.v < 1)
      throw ConfigError("flow " + std::to_string(f.flow_id) + " shaper needs a positive window");
    if (f.shaper.kind == ShaperKind::leaky &&
        (f.shaper.capacity.v < 1 || f.shaper.rate_num < 1 || f.shaper.rate_den < 1))
      throw ConfigError("flow " + std::to_string(f.flow_id) +
                        " leaky shaper needs positive capacity and rate");
  }

  s.normalized_flows = s.flows;
  s.normalized = normalize_topology(s.topology, s.normalized_flows);
  s.validated = true;

  AdmissionReport rep;
  if (s.K == 0) return rep;
  if (!s.normalized.bottleneck_capacity) {
    rep.admitted = false;
    rep.reasons.push_back("no links to derive a bottleneck capacity from");
    return rep;
  }
  const Rate C = *s.normalized.bottleneck_capacity;

  std::int64_t share_sum = 0;
  for (int k = 1; k <= s.K; ++k) share_sum += s.classes[k - 1].share->bits_per_tick;
  if (share_sum > C.bits_per_tick) {
    rep.admitted = false;
    rep.reasons.push_back("condition 3 violated: class shares exceed the bottleneck capacity");
  }

  for (int k = 1; k <= s.K; ++k) {
    const TrafficClass& cls = s.classes[k - 1];
    const Bits pool = *cls.d * *cls.share;
    if (s.admission_scope == AdmissionScope::network) {
      Bits total;
      for (const auto& f : s.flows)
        if (f.class_id == k) total += f.sigma;
      if (total > pool) {
        rep.admitted = false;
        rep.reasons.push_back("class " + std::to_string(k) + " budgets total " +
                              std::to_string(total.v) + " bits, above its window pool of " +
                              std::to_string(pool.v) + " bits");
      }
    } else {
      // Per-link pools, scaled by link capacity relative to the bottleneck.
      std::map<std::pair<int, int>, Bits> per_link;
      for (const auto& f : s.normalized_flows) {
        if (f.class_id != k) continue;
        for (const Link* l : detail::links_of(s.normalized, f))
          per_link[{l->from, l->to}] += f.sigma;
      }
      for (const auto& [edge, total] : per_link) {
        const Link* l = s.normalized.find_link(edge.first, edge.second);
        const Rational scaled = Rational(pool.v) * Rational(l->capacity.bits_per_tick,
                                                            C.bits_per_tick);
        if (Rational(total.v) > scaled) {
          rep.admitted = false;
          rep.reasons.push_back("class " + std::to_string(k) + " budgets on link " +
                                std::to_string(edge.first) + "->" + std::to_string(edge.second) +
                                " exceed the scaled pool");
        }
      }
    }
  }
  return rep;
}

// Bound report for a validated scenario's class set.
inline BoundReport scenario_bounds(const Scenario& s, bool restricted = true) {
  if (!s.validated) throw std::logic_error("scenario_bounds needs a validated scenario");
  if (!s.normalized.bottleneck_capacity)
    throw ConfigError("cannot compute bounds without a bottleneck capacity");
  return multiclass_bounds(s.classes, std::max(1, s.normalized.H),
                           *s.normalized.bottleneck_capacity, restricted);
}

}  // namespace edgebound
