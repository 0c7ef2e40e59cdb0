#pragma once

#include "edgebound/model.hpp"

#include <numeric>
#include <string>
#include <vector>

namespace edgebound {

// Single-class deployment parameters: a target end-to-end bound D' over H
// stages with bottleneck capacity C, and the admitted per-flow budgets.
struct SingleClassConfig {
  Tick D_prime;
  int H{1};
  Bits p_max;
  Rate C;
  std::vector<Bits> sigmas;
};

// Shaping window that leaves room for the downstream serialization term:
// D = D' - ceil((H-1) * p_max / C). The subtraction rounds the transit term up
// so the published window is conservative.
inline Tick edge_window(const SingleClassConfig& cfg) {
  if (cfg.H < 1) throw ConfigError("H must be at least 1");
  const std::int64_t transit =
      ceil_div(static_cast<std::int64_t>(cfg.H - 1) * cfg.p_max.v, cfg.C.bits_per_tick);
  if (cfg.D_prime.v <= transit)
    throw InfeasibleBoundError("target bound of " + std::to_string(cfg.D_prime.v) +
                               " ticks is consumed by " + std::to_string(transit) +
                               " ticks of per-hop serialization");
  return Tick(cfg.D_prime.v - transit);
}

struct AdmissionVerdict {
  bool admitted{true};
  std::string reason;
};

// Budget gate for a single class: the flows' combined window budgets must fit
// the volume the bottleneck can drain in one window. Boundary inclusive.
inline AdmissionVerdict admission_single(const SingleClassConfig& cfg, Tick window) {
  Bits total;
  for (Bits s : cfg.sigmas) total += s;
  const Bits budget = window * cfg.C;
  if (total <= budget) return {true, ""};
  return {false, "sum of budgets " + std::to_string(total.v) + " bits exceeds window capacity " +
                     std::to_string(budget.v) + " bits"};
}

// Largest backlog compatible with a delay bound of D at capacity C. A measured
// backlog above this proves the trace cannot satisfy the bound.
inline Bits necessary_bi_bound(Tick D, Rate C) { return D * C; }

// Volume bound over an a-fold window: a per-window cap of B scales linearly.
inline Bits lemma1_scale(Bits bound, std::int64_t a) {
  if (a < 1) throw ConfigError("window multiple must be a positive integer");
  return a * bound;
}

namespace detail {

inline Rational packet_time(Bits p, Rate c) { return Rational(p.v, c.bits_per_tick); }

// Largest packet among classes strictly below priority k (higher class id),
// including best-effort.
inline Bits worst_lower_priority_packet(const std::vector<TrafficClass>& classes, int K,
                                        Bits best_effort_p_max, int k) {
  Bits worst = best_effort_p_max;
  for (int i = k + 1; i <= K; ++i) worst = std::max(worst, classes[i - 1].p_max);
  return worst;
}

}  // namespace detail

// Per-class delay bounds for K bounded classes sharing a strict-priority,
// work-conserving network of H stages with bottleneck capacity C.
//
// For each bounded class k the bound splits into three exact rational terms:
//   delta   — drain time of every same-or-higher-priority bit admitted per
//             window d_k (alpha_k * d_k with alpha_k the cumulative share);
//   epsilon — one non-preemptable lower-priority packet per stage;
//   zeta    — serialization after the first stage.
// Only the final per-class bound is rounded, and always upward.
//
// `restricted = true` requires every window pair to divide evenly and uses the
// proven delta form. Otherwise delta falls back to the unrestricted form,
// which is reported as conjectured (alongside a dimension-repaired variant,
// since the published correction term is a rate fraction rather than a time).
inline BoundReport multiclass_bounds(const std::vector<TrafficClass>& classes, int H, Rate C,
                                     bool restricted = true) {
  if (H < 1) throw ConfigError("H must be at least 1");
  const int K = validate_classes(classes);

  BoundReport report;
  report.H = H;
  report.bottleneck = C;

  Bits global_p_max;
  for (const auto& c : classes) global_p_max = std::max(global_p_max, c.p_max);
  if (static_cast<int>(classes.size()) == K + 1) {
    const Bits declared = classes.back().p_max;
    report.best_effort_p_max = declared.v > 0 ? declared : global_p_max;
  } else {
    report.best_effort_p_max = Bits(0);  // no best-effort traffic in the network
  }

  std::int64_t share_sum = 0;
  for (int k = 1; k <= K; ++k) share_sum += classes[k - 1].share->bits_per_tick;
  if (share_sum > C.bits_per_tick) {
    report.admitted = false;
    report.reasons.push_back("condition 3 violated: class shares total " +
                             std::to_string(share_sum) + " bits/tick on a bottleneck of " +
                             std::to_string(C.bits_per_tick) + " bits/tick");
  }

  if (restricted) {
    for (int k = 1; k <= K; ++k)
      for (int i = 1; i <= k; ++i) {
        const std::int64_t dk = classes[k - 1].d->v;
        const std::int64_t di = classes[i - 1].d->v;
        if (dk % di != 0)
          throw ConfigError("condition 4 violated: window of class " + std::to_string(k) + " (" +
                            std::to_string(dk) + ") is not an integer multiple of class " +
                            std::to_string(i) + " (" + std::to_string(di) + ")");
      }
  }

  std::int64_t cumulative_share = 0;
  for (int k = 1; k <= K; ++k) {
    const TrafficClass& cls = classes[k - 1];
    cumulative_share += cls.share->bits_per_tick;

    ClassBound b;
    b.class_id = k;
    b.alpha = Rational(cumulative_share, C.bits_per_tick);

    const Rational dk(cls.d->v);
    const Rational base = b.alpha * dk;

    Rational correction(0);
    Rational correction_repaired(0);
    for (int i = 1; i < k; ++i) {
      const std::int64_t dkv = cls.d->v;
      const std::int64_t div = classes[i - 1].d->v;
      const std::int64_t fractional = (dkv % div) ? 1 : 0;
      const Rational share_frac(classes[i - 1].share->bits_per_tick, C.bits_per_tick);
      correction += fractional * share_frac;
      correction_repaired += fractional * Rational(div) * share_frac;
    }
    b.delta_general = base + correction;
    b.delta_general_repaired = base + correction_repaired;
    b.delta = restricted ? base : b.delta_general;

    const Bits blocking =
        detail::worst_lower_priority_packet(classes, K, report.best_effort_p_max, k);
    b.epsilon = Rational(H) * detail::packet_time(blocking, C);
    b.zeta = Rational(H - 1) * detail::packet_time(cls.p_max, C);

    b.total = b.delta + b.epsilon + b.zeta;
    b.bound = Tick(ceil_rational(b.total));
    b.greedy_bound = Tick(ceil_rational(Rational(H) * (dk + detail::packet_time(blocking, C))));

    report.classes.push_back(b);
  }

  return report;
}

}  // namespace edgebound
