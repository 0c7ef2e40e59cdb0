#include "edgebound/bounds.hpp"
#include "edgebound/experiment.hpp"
#include "edgebound/metrics.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace edgebound;

TEST_CASE("edge window collapses to the target bound on a single hop") {
  SingleClassConfig cfg{Tick(42), 1, Bits(1500 * 8), Rate(12000), {}};
  CHECK(edge_window(cfg) == Tick(42));
}

TEST_CASE("edge window subtracts the rounded-up transit term") {
  // (H-1) * p_max / C = 4 * 12000 / 12000 = 4 ticks
  SingleClassConfig cfg{Tick(100), 5, Bits(1500 * 8), Rate(12000), {}};
  CHECK(edge_window(cfg) == Tick(96));

  // fractional transit rounds up: 4 * 9000 / 12000 = 3 ticks exactly; 4 * 9001 -> 4 ticks
  cfg.p_max = Bits(9000);
  CHECK(edge_window(cfg) == Tick(97));
  cfg.p_max = Bits(9001);
  CHECK(edge_window(cfg) == Tick(96));
}

TEST_CASE("edge window rejects a bound consumed by serialization") {
  SingleClassConfig cfg{Tick(4), 5, Bits(12000), Rate(12000), {}};
  CHECK_THROWS_AS(edge_window(cfg), InfeasibleBoundError);
  cfg.D_prime = Tick(5);
  CHECK(edge_window(cfg) == Tick(1));
}

TEST_CASE("single-class admission is boundary inclusive") {
  SingleClassConfig cfg{Tick(6), 1, Bits(4), Rate(1), {Bits(4)}};
  CHECK(admission_single(cfg, Tick(6)).admitted);

  cfg.sigmas = {Bits(3), Bits(3)};  // exactly D*C
  CHECK(admission_single(cfg, Tick(6)).admitted);

  cfg.sigmas = {Bits(3), Bits(4)};  // D*C + 1
  const auto verdict = admission_single(cfg, Tick(6));
  CHECK_FALSE(verdict.admitted);
  CHECK_FALSE(verdict.reason.empty());
}

TEST_CASE("necessary backlog bound is the plain product") {
  CHECK(necessary_bi_bound(Tick(6), Rate(1)) == Bits(6));
  CHECK(necessary_bi_bound(Tick(96), Rate(12000)) == Bits(1152000));
  CHECK(necessary_bi_bound(Tick(0), Rate(5)) == Bits(0));  // only an always-empty system
}

TEST_CASE("window-multiple volume bound scales linearly") {
  CHECK(lemma1_scale(Bits(4), 1) == Bits(4));
  CHECK(lemma1_scale(Bits(4), 3) == Bits(12));
  CHECK_THROWS_AS(lemma1_scale(Bits(4), 0), ConfigError);
}

TEST_CASE("a shaped stream respects the scaled bound over tripled windows") {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 50; ++round) {
    QuantumShaper shaper(Bits(4), Tick(6));
    std::vector<Arrival> arrivals;
    Tick t(0);
    for (int i = 0; i < 60; ++i) {
      t += Tick(bounded_draw(rng, 4));
      arrivals.push_back({t, Bits(1 + static_cast<std::int64_t>(bounded_draw(rng, 4)))});
    }
    const auto egress = shape_stream(shaper, arrivals, t + Tick(600));
    TraceAnalyzer a(trace_from_releases(egress));
    CHECK(a.sliding_window_max(Tick(6), Scope::network()).value <= Bits(4));
    CHECK(a.sliding_window_max(Tick(18), Scope::network()).value <= lemma1_scale(Bits(4), 3));
  }
}

namespace {

TrafficClass bounded_class(int id, std::int64_t d, std::int64_t share, std::int64_t p_max) {
  TrafficClass c;
  c.class_id = id;
  c.d = Tick(d);
  c.share = Rate(share);
  c.p_max = Bits(p_max);
  return c;
}

TrafficClass best_effort_class(int id, std::int64_t p_max) {
  TrafficClass c;
  c.class_id = id;
  c.p_max = Bits(p_max);
  return c;
}

}  // namespace

TEST_CASE("one class, one hop, no background collapses to the window itself") {
  const auto report = multiclass_bounds({bounded_class(1, 10, 4, 4)}, 1, Rate(4));
  REQUIRE(report.admitted);
  REQUIRE(report.classes.size() == 1);
  const ClassBound& b = report.classes[0];
  CHECK(b.alpha == Rational(1));
  CHECK(b.epsilon == Rational(0));
  CHECK(b.zeta == Rational(0));
  CHECK(b.bound == Tick(10));
}

TEST_CASE("two bounded classes over three hops, hand-computed") {
  // d = (10, 20), shares C/4 each, every packet one tick long at C = 4.
  const std::vector<TrafficClass> classes = {
      bounded_class(1, 10, 1, 4), bounded_class(2, 20, 1, 4), best_effort_class(3, 4)};
  const auto report = multiclass_bounds(classes, 3, Rate(4));
  REQUIRE(report.admitted);
  REQUIRE(report.classes.size() == 2);

  const ClassBound& c2 = report.classes[1];
  CHECK(c2.alpha == Rational(1, 2));
  CHECK(c2.delta == Rational(10));   // alpha * d = 20 / 2
  CHECK(c2.epsilon == Rational(3));  // 3 hops x 1 tick of best-effort blocking
  CHECK(c2.zeta == Rational(2));     // 2 extra hops x 1 tick serialization
  CHECK(c2.total == Rational(15));
  CHECK(c2.bound == Tick(15));

  const ClassBound& c1 = report.classes[0];
  CHECK(c1.alpha == Rational(1, 4));
  CHECK(c1.delta == Rational(5, 2));
  CHECK(c1.epsilon == Rational(3));
  CHECK(c1.zeta == Rational(2));
  CHECK(c1.total == Rational(15, 2));
  CHECK(c1.bound == Tick(8));  // only the final bound is rounded, upward
}

TEST_CASE("restricted form rejects windows that do not divide evenly") {
  const std::vector<TrafficClass> classes = {bounded_class(1, 10, 1, 4),
                                             bounded_class(2, 25, 1, 4)};
  CHECK_THROWS_AS(multiclass_bounds(classes, 3, Rate(4), true), ConfigError);
  CHECK_NOTHROW(multiclass_bounds(classes, 3, Rate(4), false));
}

TEST_CASE("share overflow yields a rejection verdict, not an exception") {
  const std::vector<TrafficClass> classes = {bounded_class(1, 10, 3, 4),
                                             bounded_class(2, 20, 3, 4)};
  const auto report = multiclass_bounds(classes, 2, Rate(4));
  CHECK_FALSE(report.admitted);
  REQUIRE_FALSE(report.reasons.empty());
  CHECK(report.reasons.front().find("condition 3") != std::string::npos);
}

TEST_CASE("declared best-effort class without a size defaults to the global maximum") {
  const std::vector<TrafficClass> classes = {bounded_class(1, 10, 2, 8),
                                             best_effort_class(2, 0)};
  const auto report = multiclass_bounds(classes, 2, Rate(4));
  CHECK(report.best_effort_p_max == Bits(8));
  // with no best-effort class at all there is nothing below class K
  const auto none = multiclass_bounds({bounded_class(1, 10, 2, 8)}, 2, Rate(4));
  CHECK(none.best_effort_p_max == Bits(0));
  CHECK(none.classes[0].epsilon == Rational(0));
}

TEST_CASE("restricted and general deltas agree whenever ratios are integral") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 200; ++round) {
    const int K = 1 + static_cast<int>(bounded_draw(rng, 3));
    const std::int64_t C = 4 + static_cast<std::int64_t>(bounded_draw(rng, 13));
    std::vector<TrafficClass> classes;
    std::int64_t d = 1 + static_cast<std::int64_t>(bounded_draw(rng, 6));
    std::int64_t share_left = C;
    for (int k = 1; k <= K; ++k) {
      const std::int64_t share =
          1 + static_cast<std::int64_t>(bounded_draw(rng, std::max<std::int64_t>(1, share_left / (K - k + 1))));
      share_left -= share;
      classes.push_back(bounded_class(k, d, share, 1 + bounded_draw(rng, 16)));
      d *= 1 + static_cast<std::int64_t>(bounded_draw(rng, 3));
    }
    const auto restricted = multiclass_bounds(classes, 1 + bounded_draw(rng, 5), Rate(C), true);
    const auto general = multiclass_bounds(classes, restricted.H, Rate(C), false);
    for (int k = 0; k < K; ++k) {
      CHECK(restricted.classes[k].delta == general.classes[k].delta);
      CHECK(restricted.classes[k].delta == restricted.classes[k].delta_general);
      CHECK(restricted.classes[k].delta == restricted.classes[k].delta_general_repaired);
      CHECK(restricted.classes[k].total ==
            restricted.classes[k].delta + restricted.classes[k].epsilon +
                restricted.classes[k].zeta);
      if (restricted.admitted) CHECK(restricted.classes[k].alpha <= Rational(1));
    }
  }
}

TEST_CASE("bounds are monotone in class id when packet ceilings are ordered too") {
  std::mt19937_64 rng(13);
  for (int round = 0; round < 200; ++round) {
    const int K = 2 + static_cast<int>(bounded_draw(rng, 2));
    const std::int64_t C = 8 + static_cast<std::int64_t>(bounded_draw(rng, 9));
    std::vector<TrafficClass> classes;
    std::int64_t d = 2 + static_cast<std::int64_t>(bounded_draw(rng, 6));
    std::int64_t p = 1 + static_cast<std::int64_t>(bounded_draw(rng, 4));
    std::int64_t share_left = C - 1;
    for (int k = 1; k <= K; ++k) {
      const std::int64_t share =
          1 + static_cast<std::int64_t>(bounded_draw(rng, std::max<std::int64_t>(1, share_left / (K - k + 1))));
      share_left -= share;
      classes.push_back(bounded_class(k, d, share, p));
      d *= 1 + static_cast<std::int64_t>(bounded_draw(rng, 3));
      p += static_cast<std::int64_t>(bounded_draw(rng, 4));
    }
    classes.push_back(best_effort_class(K + 1, p));
    const auto report = multiclass_bounds(classes, 1 + bounded_draw(rng, 5), Rate(C));
    REQUIRE(report.admitted);
    for (int k = 1; k < K; ++k) {
      CHECK(report.classes[k].bound >= report.classes[k - 1].bound);
      CHECK(report.classes[k - 1].bound <= report.classes[k - 1].greedy_bound);
    }
  }
}

TEST_CASE("a low-priority class with tiny packets can undercut a huge-packet class") {
  // Ordered windows alone do not force monotone bounds: serialization of the
  // oversized class-1 packets dominates its own bound.
  const std::vector<TrafficClass> classes = {bounded_class(1, 10, 5, 100),
                                             bounded_class(2, 10, 5, 10)};
  const auto report = multiclass_bounds(classes, 5, Rate(10));
  REQUIRE(report.admitted);
  CHECK(report.classes[0].bound > report.classes[1].bound);
}

TEST_CASE("general-form correction terms are emitted for non-integral ratios") {
  const std::vector<TrafficClass> classes = {bounded_class(1, 10, 1, 4),
                                             bounded_class(2, 25, 1, 4)};
  const auto report = multiclass_bounds(classes, 1, Rate(4), false);
  const ClassBound& c2 = report.classes[1];
  // alpha_2 * d_2 = 25/2; correction (ceil-floor)(25/10) * C_1/C = 1/4
  CHECK(c2.delta_general == Rational(25, 2) + Rational(1, 4));
  // repaired variant scales the correction by d_1
  CHECK(c2.delta_general_repaired == Rational(25, 2) + Rational(10) * Rational(1, 4));
  CHECK(c2.delta == c2.delta_general);
}
