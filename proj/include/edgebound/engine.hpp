#pragma once

#include "edgebound/scenario.hpp"
#include "edgebound/shaper.hpp"
#include "edgebound/traffic.hpp"

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <vector>

namespace edgebound {

struct RunResult {
  EventTrace trace;
  std::vector<Packet> packets;
  Tick horizon;

  std::size_t delivered() const {
    std::size_t n = 0;
    for (const auto& p : packets) n += p.delivered ? 1 : 0;
    return n;
  }
};

// Deterministic single-run simulator: seeded sources feed per-flow edge
// shapers; released packets traverse their normalized path through output
// ports with one non-preemptive priority queue per class.
//
// Event order within a tick is fixed: sources and shaper wake-ups first, then
// hop arrivals, then service completions, then service-start decisions. A
// packet arriving exactly when a server frees up is therefore always eligible
// for it, and every same-tick arrival is enqueued before any port chooses its
// next packet.
class Simulation {
 public:
  explicit Simulation(const Scenario& scenario, std::optional<std::uint64_t> seed = {})
      : scenario_(scenario) {
    if (!scenario.validated)
      throw std::logic_error("Simulation requires a validated scenario");
    seed_ = seed.value_or(scenario.run.seed);
    build();
  }

  RunResult run(std::optional<Tick> horizon_opt = {}) {
    const Tick horizon = horizon_opt.value_or(scenario_.run.duration);

    for (std::size_t f = 0; f < flows_.size(); ++f) {
      if (generators_[f]->greedy()) {
        push(Tick(0), kRankSource, kKick, f, 0);
      } else {
        flow_arrivals_[f] = generators_[f]->next_arrivals(horizon);
        for (std::size_t i = 0; i < flow_arrivals_[f].size(); ++i)
          push(flow_arrivals_[f][i].time, kRankSource, kSource, f, static_cast<int>(i));
      }
    }

    while (!queue_.empty()) {
      const Ev ev = queue_.top();
      if (ev.time > horizon) break;
      queue_.pop();
      if (ev.time < clock_) throw std::logic_error("event queue time moved backwards");
      clock_ = ev.time;
      dispatch(ev);
    }

    RunResult result;
    result.trace = std::move(trace_);
    result.packets = std::move(packets_);
    result.horizon = horizon;
    return result;
  }

 private:
  static constexpr int kRankSource = 0;
  static constexpr int kRankArrival = 1;
  static constexpr int kRankComplete = 2;
  static constexpr int kRankStart = 3;

  enum EvKind { kSource, kKick, kWake, kHop, kComplete, kTryStart };

  struct Ev {
    Tick time;
    int rank{};
    std::uint64_t seq{};
    EvKind kind{};
    std::uint64_t a{};  // flow index, packet id, or port index
    int b{};            // arrival index or stage
  };

  struct EvAfter {
    bool operator()(const Ev& x, const Ev& y) const {
      if (x.time != y.time) return x.time > y.time;
      if (x.rank != y.rank) return x.rank > y.rank;
      return x.seq > y.seq;
    }
  };

  struct InService {
    std::uint64_t packet{};
    Tick done;
  };

  struct Port {
    int switch_id{};
    int next{};
    Rate capacity{};
    Tick propagation{};
    PortPolicy policy{PortPolicy::strict_priority};
    std::vector<std::deque<std::uint64_t>> class_queues;
    std::map<int, std::deque<std::uint64_t>> flow_queues;  // starve_low_input only
    std::optional<InService> in_service;
    std::size_t queued{0};
  };

  void build() {
    flows_ = scenario_.normalized_flows;
    const Topology& topo = scenario_.normalized;
    const std::size_t n_classes = scenario_.classes.size();

    for (std::size_t f = 0; f < flows_.size(); ++f) {
      const FlowSpec& flow = flows_[f];
      const GeneratorSpec& gspec = scenario_.generators.at(flow.generator);
      const std::uint64_t flow_seed =
          seed_ ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(flow.flow_id + 1));
      generators_.push_back(std::make_unique<ArrivalGenerator>(gspec, flow_seed));
      shapers_.push_back(make_shaper(flow.shaper, flow.sigma));
      alive_.push_back(0);

      if (gspec.kind == GeneratorKind::greedy) {
        if (flow.shaper.kind == ShaperKind::none) {
          greedy_target_.push_back(2);  // closed loop: keep two packets in flight
        } else {
          const Bits pool = flow.shaper.kind == ShaperKind::quantum ? flow.sigma
                                                                    : flow.shaper.capacity;
          greedy_target_.push_back(ceil_div(pool.v, gspec.packet_size.v) + 1);
        }
      } else {
        greedy_target_.push_back(0);
      }

      std::vector<int> stage_ports;
      for (std::size_t i = 0; i < flow.path.size(); ++i) {
        const int sw = flow.path[i];
        const SwitchDesc* desc = topo.find_switch(sw);
        if (desc->pass_through) {
          stage_ports.push_back(-1);
          continue;
        }
        int next = kEgressNode;
        for (std::size_t j = i + 1; j < flow.path.size(); ++j) {
          const SwitchDesc* nd = topo.find_switch(flow.path[j]);
          if (!nd->pass_through) {
            next = flow.path[j];
            break;
          }
        }
        const auto key = std::make_pair(sw, next);
        auto it = port_index_.find(key);
        if (it == port_index_.end()) {
          const Link* link = topo.find_link(sw, next);
          Port port;
          port.switch_id = sw;
          port.next = next;
          port.capacity = link->capacity;
          port.propagation = link->propagation;
          port.policy = desc->policy;
          port.class_queues.resize(n_classes);
          it = port_index_.emplace(key, ports_.size()).first;
          ports_.push_back(std::move(port));
        }
        stage_ports.push_back(static_cast<int>(it->second));
      }
      flow_stage_port_.push_back(std::move(stage_ports));
    }
    flow_arrivals_.resize(flows_.size());
    wakes_.resize(flows_.size());
  }

  void push(Tick time, int rank, EvKind kind, std::uint64_t a, int b) {
    queue_.push(Ev{time, rank, next_seq_++, kind, a, b});
  }

  void dispatch(const Ev& ev) {
    switch (ev.kind) {
      case kSource: {
        const Arrival& a = flow_arrivals_[ev.a][static_cast<std::size_t>(ev.b)];
        emit_packet(ev.a, a.size, ev.time);
        break;
      }
      case kKick:
        top_up_greedy(ev.a, ev.time);
        break;
      case kWake: {
        wakes_[ev.a].erase(ev.time);
        inject(ev.a, shapers_[ev.a]->advance(ev.time), ev.time);
        schedule_wake(ev.a);
        top_up_greedy(ev.a, ev.time);
        break;
      }
      case kHop:
        handle_hop(ev.a, ev.b, ev.time);
        break;
      case kComplete:
        handle_complete(ev.a, ev.time);
        break;
      case kTryStart:
        handle_try_start(ev.a, ev.time);
        break;
    }
  }

  void emit_packet(std::uint64_t f, Bits size, Tick now) {
    const FlowSpec& flow = flows_[f];
    Packet p;
    p.id = packets_.size();
    p.flow_id = flow.flow_id;
    p.class_id = flow.class_id;
    p.size = size;
    p.emit_time = now;
    packets_.push_back(std::move(p));
    current_stage_.push_back(0);
    ++alive_[f];

    inject(f, shapers_[f]->offer(ShaperItem{packets_.back().id, size, now}, now), now);
    schedule_wake(f);
  }

  void inject(std::uint64_t f, const std::vector<ShaperRelease>& releases, Tick now) {
    (void)f;
    for (const auto& rel : releases) {
      assert(rel.time == now);
      packets_[rel.item.id].ingress_time = rel.time;
      push(rel.time, kRankArrival, kHop, rel.item.id, 1);
    }
  }

  void schedule_wake(std::uint64_t f) {
    const auto w = shapers_[f]->next_wakeup();
    if (!w) return;
    if (wakes_[f].insert(*w).second) push(*w, kRankSource, kWake, f, 0);
  }

  // Closed-loop greedy source: keep the shaper backlog (shaped flows) or the
  // in-network packet count (unshaped flows) at its target. Levels only drop
  // at shaper releases and deliveries, so those are the only refill points.
  void top_up_greedy(std::uint64_t f, Tick now) {
    if (greedy_target_[f] == 0) return;
    const GeneratorSpec& g = generators_[f]->spec();
    const bool shaped = flows_[f].shaper.kind != ShaperKind::none;
    while ((shaped ? static_cast<std::int64_t>(shapers_[f]->backlog_size()) : alive_[f]) <
           greedy_target_[f])
      emit_packet(f, g.packet_size, now);
  }

  void handle_hop(std::uint64_t pid, int stage, Tick now) {
    Packet& p = packets_[pid];
    const std::size_t f = flow_index(p.flow_id);
    const FlowSpec& flow = flows_[f];
    const int sw = flow.path[static_cast<std::size_t>(stage - 1)];
    current_stage_[pid] = stage;
    record(now, stage, sw, p, TraceEventKind::arrival);
    p.per_hop_events.push_back(HopEvent{sw, now, now});

    const int port_idx = flow_stage_port_[f][static_cast<std::size_t>(stage - 1)];
    if (port_idx < 0) {  // pass-through stage: forward in zero time
      record(now, stage, sw, p, TraceEventKind::service_start);
      record(now, stage, sw, p, TraceEventKind::service_end);
      forward(pid, stage, now, Tick(0));
      return;
    }

    Port& port = ports_[static_cast<std::size_t>(port_idx)];
    if (port.policy == PortPolicy::starve_low_input)
      port.flow_queues[p.flow_id].push_back(pid);
    else
      port.class_queues[static_cast<std::size_t>(p.class_id - 1)].push_back(pid);
    ++port.queued;
    if (!port.in_service)
      push(now, kRankStart, kTryStart, static_cast<std::uint64_t>(port_idx), 0);
  }

  void handle_complete(std::uint64_t port_idx, Tick now) {
    Port& port = ports_[port_idx];
    assert(port.in_service && port.in_service->done == now);
    const std::uint64_t pid = port.in_service->packet;
    port.in_service.reset();

    Packet& p = packets_[pid];
    const int stage = current_stage_[pid];
    record(now, stage, port.switch_id, p, TraceEventKind::service_end);
    assert(!p.per_hop_events.empty() && p.per_hop_events.back().switch_id == port.switch_id);
    p.per_hop_events.back().departure = now;

    forward(pid, stage, now, port.propagation);
    push(now, kRankStart, kTryStart, port_idx, 0);
  }

  void forward(std::uint64_t pid, int stage, Tick now, Tick propagation) {
    Packet& p = packets_[pid];
    const std::size_t f = flow_index(p.flow_id);
    if (stage == static_cast<int>(flows_[f].path.size())) {
      p.delivered = true;
      p.egress_time = now;
      --alive_[f];
      top_up_greedy(f, now);
      return;
    }
    push(now + propagation, kRankArrival, kHop, pid, stage + 1);
  }

  void handle_try_start(std::uint64_t port_idx, Tick now) {
    Port& port = ports_[port_idx];
    if (port.in_service || port.queued == 0) return;

    std::uint64_t pid = 0;
    if (port.policy == PortPolicy::starve_low_input) {
      for (auto& [flow_id, q] : port.flow_queues) {
        if (!q.empty()) {
          pid = q.front();
          q.pop_front();
          break;
        }
      }
    } else {
      for (auto& q : port.class_queues) {
        if (!q.empty()) {
          pid = q.front();
          q.pop_front();
          break;
        }
      }
    }
    --port.queued;

    Packet& p = packets_[pid];
    const int stage = current_stage_[pid];
    record(now, stage, port.switch_id, p, TraceEventKind::service_start);
    const Tick done = now + transmission_ticks(p.size, port.capacity);
    port.in_service = InService{pid, done};
    push(done, kRankComplete, kComplete, port_idx, 0);
  }

  void record(Tick time, int stage, int sw, const Packet& p, TraceEventKind kind) {
    TraceRecord r;
    r.time = time;
    r.stage = stage;
    r.switch_id = sw;
    r.class_id = p.class_id;
    r.flow_id = p.flow_id;
    r.packet_id = p.id;
    r.kind = kind;
    r.size = p.size;
    trace_.append(r);
  }

  std::size_t flow_index(int flow_id) {
    auto it = flow_index_.find(flow_id);
    if (it == flow_index_.end()) {
      for (std::size_t i = 0; i < flows_.size(); ++i) flow_index_[flows_[i].flow_id] = i;
      it = flow_index_.find(flow_id);
    }
    return it->second;
  }

  const Scenario& scenario_;
  std::uint64_t seed_{};
  std::vector<FlowSpec> flows_;
  std::vector<std::unique_ptr<ArrivalGenerator>> generators_;
  std::vector<std::unique_ptr<Shaper>> shapers_;
  std::vector<std::vector<Arrival>> flow_arrivals_;
  std::vector<std::int64_t> alive_;
  std::vector<std::int64_t> greedy_target_;
  std::vector<std::vector<int>> flow_stage_port_;
  std::vector<Port> ports_;
  std::map<std::pair<int, int>, std::size_t> port_index_;
  std::map<int, std::size_t> flow_index_;
  std::vector<std::set<Tick>> wakes_;

  std::vector<Packet> packets_;
  std::vector<int> current_stage_;
  EventTrace trace_;
  std::priority_queue<Ev, std::vector<Ev>, EvAfter> queue_;
  std::uint64_t next_seq_{0};
  Tick clock_;
};

}  // namespace edgebound
