#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "morseflow/lyapunov.hpp"
#include "morseflow/rational.hpp"

using namespace morseflow;

namespace {

const Partition p200(StateBox(-1.0, 1.0), 200);
const CocycleSystem kSys = CocycleSystem::exact_double_well();

// Analytic zero-noise crossing time of the double well: solve
// phi(t) x = b for x, b in (0, 1), from the closed form
//   phi(t) x = x e^t / sqrt(1 - x^2 + x^2 e^{2t}).
double crossing_time(double x, double b) {
  return 0.5 * std::log((b * b * (1.0 - x * x)) / (x * x * (1.0 - b * b)));
}

PairContext canonical_pair(const SearchWindow& search) {
  PairContext ctx;
  ctx.attractor = SetRule::intervals(p200, {{1.0, 1.0}}, "A");
  ctx.repeller = SetRule::intervals(p200, {{-1.0, 0.0}}, "R");
  ctx.neighborhood = SetRule::intervals(p200, {{0.5, 1.0}}, "N");
  ctx.search = search;
  return ctx;
}

SearchWindow wide_window() {
  SearchWindow s;
  s.t_lo = -30.0;
  s.t_hi = 30.0;
  s.dt = 0.05;
  s.refine_iters = 40;
  return s;
}

}  // namespace

TEST_CASE("extended time ordering") {
  const ExtendedTime ni = ExtendedTime::minus_infinity();
  const ExtendedTime pi = ExtendedTime::plus_infinity();
  const ExtendedTime a = ExtendedTime::finite_at(-3.0);
  const ExtendedTime b = ExtendedTime::finite_at(2.0);
  CHECK(ni < a);
  CHECK(a < b);
  CHECK(b < pi);
  CHECK(ni < pi);
  CHECK_FALSE(pi < pi);
  CHECK_FALSE(ni < ni);
  CHECK(a == ExtendedTime::finite_at(-3.0));
  CHECK_FALSE(a == b);
  CHECK(a.is_finite());
  CHECK_FALSE(pi.is_finite());
}

TEST_CASE("search window validation and precision") {
  SearchWindow s = wide_window();
  CHECK_NOTHROW(s.validate());
  CHECK(s.precision() == doctest::Approx(std::ldexp(0.05, -40)));
  s.t_lo = 1.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = wide_window();
  s.dt = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = wide_window();
  s.refine_iters = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("entrance time on the zero path matches the analytic crossings") {
  const TimeGrid g(-40.0, 40.0, 0.01);
  const NoisePath z = zero_path(g);
  const PairContext ctx = canonical_pair(wide_window());

  SUBCASE("x = 0.1 enters late") {
    const EntranceResult er = entrance_time(ctx, kSys, z, make_point(0.1));
    REQUIRE(er.censor == Censor::none);
    REQUIRE(er.tau.is_finite());
    const double expect = crossing_time(0.1, 0.5);
    CHECK(expect == doctest::Approx(0.5 * std::log(33.0)).epsilon(1e-12));
    CHECK(er.tau.value == doctest::Approx(expect).epsilon(1e-4));
    CHECK(er.precision <= wide_window().precision() * 1.0001);
  }

  SUBCASE("x = 0.8 entered already") {
    const EntranceResult er = entrance_time(ctx, kSys, z, make_point(0.8));
    REQUIRE(er.censor == Censor::none);
    REQUIRE(er.tau.is_finite());
    const double expect = crossing_time(0.8, 0.5);
    CHECK(expect == doctest::Approx(0.5 * std::log(0.1875)).epsilon(1e-12));
    CHECK(er.tau.value == doctest::Approx(expect).epsilon(1e-3));
    CHECK(er.tau.value < 0.0);
  }

  SUBCASE("x = 0.5 sits on the threshold") {
    const EntranceResult er = entrance_time(ctx, kSys, z, make_point(0.5));
    REQUIRE(er.censor == Censor::none);
    REQUIRE(er.tau.is_finite());
    CHECK(std::abs(er.tau.value) <= 1e-3);
  }

  SUBCASE("attractor and repeller cells short-circuit") {
    const EntranceResult at_a = entrance_time(ctx, kSys, z, make_point(1.0));
    CHECK(at_a.tau == ExtendedTime::minus_infinity());
    const EntranceResult at_r = entrance_time(ctx, kSys, z, make_point(-0.3));
    CHECK(at_r.tau == ExtendedTime::plus_infinity());
    const EntranceResult at_zero = entrance_time(ctx, kSys, z, make_point(-0.9));
    CHECK(at_zero.tau == ExtendedTime::plus_infinity());
  }
}

TEST_CASE("censoring is flagged, not asserted away") {
  const TimeGrid g(-40.0, 40.0, 0.01);
  const NoisePath z = zero_path(g);
  SearchWindow tight = wide_window();
  tight.t_hi = 1.0;
  tight.t_lo = -1.0;
  PairContext ctx = canonical_pair(tight);

  // x = 0.01 needs t ~ 4.6 to reach 0.5: censored high at the window edge
  const EntranceResult high = entrance_time(ctx, kSys, z, make_point(0.01));
  CHECK(high.censor == Censor::high);
  REQUIRE(high.tau.is_finite());
  CHECK(high.tau.value == doctest::Approx(1.0));

  // x = 0.97 was inside [0.5, 1] long before -1: censored low
  // (0.99 would land in the attractor cell itself and short-circuit)
  const EntranceResult low = entrance_time(ctx, kSys, z, make_point(0.97));
  CHECK(low.censor == Censor::low);
  REQUIRE(low.tau.is_finite());
  CHECK(low.tau.value == doctest::Approx(-1.0));
}

TEST_CASE("lyapunov value function") {
  CHECK(lyap_value(ExtendedTime::minus_infinity()) == 0.0);
  CHECK(lyap_value(ExtendedTime::plus_infinity()) == 1.0);
  CHECK(lyap_value(ExtendedTime::finite_at(0.0)) == doctest::Approx(0.5));
  CHECK(lyap_value(ExtendedTime::finite_at(-std::log(2.0))) ==
        doctest::Approx(0.25));
  // both branches agree at zero
  CHECK(lyap_value(ExtendedTime::finite_at(-1e-15)) ==
        doctest::Approx(0.5).epsilon(1e-12));
  double prev = -1.0;
  for (double t = -20.0; t <= 20.0; t += 0.37) {
    const double v = lyap_value(ExtendedTime::finite_at(t));
    CHECK(v > prev);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    prev = v;
  }
}

TEST_CASE("pair lyapunov evaluates through the entrance time") {
  const TimeGrid g(-40.0, 40.0, 0.01);
  const NoisePath z = zero_path(g);
  const PairContext ctx = canonical_pair(wide_window());
  const LyapEval on_a = pair_lyapunov(ctx, kSys, z, make_point(1.0));
  CHECK(on_a.value == 0.0);
  CHECK_FALSE(on_a.censored);
  const LyapEval on_r = pair_lyapunov(ctx, kSys, z, make_point(-0.5));
  CHECK(on_r.value == 1.0);
  const LyapEval mid = pair_lyapunov(ctx, kSys, z, make_point(0.8));
  CHECK(mid.value > 0.0);
  CHECK(mid.value < 0.5);  // negative entrance time
}

TEST_CASE("tau cocycle identity along sampled paths") {
  const TimeGrid g(-40.0, 40.0, 0.01);
  const PairContext ctx = canonical_pair(wide_window());
  const double tol = 4.0 * wide_window().precision();
  int checked = 0;
  for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
    const NoisePath w = sample_wiener(g, seed);
    for (double x : {0.1, 0.35, 0.62, 0.9}) {
      for (double t : {-1.5, -0.25, 0.5, 2.0}) {
        const auto res = tau_cocycle_residual(ctx, kSys, w, make_point(x), t);
        if (res.has_value()) {
          CHECK(*res <= tol);
          ++checked;
        }
      }
    }
  }
  CHECK(checked >= 30);  // most tuples must be finite and uncensored
}

TEST_CASE("morse lyapunov hits the exact plateaus") {
  const Partition p201(StateBox(-1.0, 1.0), 201);
  const TimeGrid g(-40.0, 40.0, 0.01);
  MorseContext mctx;
  {
    PairContext pc1;
    pc1.attractor = SetRule::intervals(p201, {{-1.0, -1.0}}, "A1");
    pc1.repeller = SetRule::intervals(p201, {{0.0, 1.0}}, "R1");
    pc1.neighborhood = SetRule::intervals(p201, {{-1.0, -0.4}}, "N1");
    pc1.search = wide_window();
    PairContext pc2;
    pc2.attractor =
        SetRule::intervals(p201, {{-1.0, -1.0}, {1.0, 1.0}}, "A2");
    pc2.repeller = SetRule::intervals(p201, {{0.0, 0.0}}, "R2");
    pc2.neighborhood =
        SetRule::intervals(p201, {{-1.0, -0.4}, {0.4, 1.0}}, "N2");
    pc2.search = wide_window();
    mctx.pairs = {pc1, pc2};
  }
  for (std::uint64_t seed : {3ULL, 4ULL}) {
    const NoisePath w = sample_wiener(g, seed);
    const LyapEval at_m1 = morse_lyapunov(mctx, kSys, w, make_point(-1.0));
    CHECK(std::abs(at_m1.value - Rational{2, 3}.to_double()) <= 1e-12);
    const LyapEval at_m2 = morse_lyapunov(mctx, kSys, w, make_point(1.0));
    CHECK(std::abs(at_m2.value - Rational{8, 9}.to_double()) <= 1e-12);
    const LyapEval at_m3 = morse_lyapunov(mctx, kSys, w, make_point(0.0));
    CHECK(std::abs(at_m3.value - Rational{26, 27}.to_double()) <= 1e-12);
    CHECK_FALSE(at_m1.censored);
    CHECK_FALSE(at_m2.censored);
    CHECK_FALSE(at_m3.censored);
  }
}

TEST_CASE("monotonicity profile decreases along forward orbits") {
  const TimeGrid g(-40.0, 40.0, 0.01);
  const PairContext ctx = canonical_pair(wide_window());
  for (std::uint64_t seed : {21ULL, 22ULL}) {
    const NoisePath w = sample_wiener(g, seed);
    const auto profile =
        monotonicity_profile(ctx, kSys, w, make_point(0.15), 2.0, 0.25);
    REQUIRE(profile.size() == 9);
    CHECK(profile.front().t == doctest::Approx(0.0));
    CHECK(profile.back().t == doctest::Approx(2.0));
    for (std::size_t i = 1; i < profile.size(); ++i) {
      const auto& a = profile[i - 1];
      const auto& b = profile[i];
      if (a.entrance.tau.is_finite() && b.entrance.tau.is_finite() &&
          a.entrance.censor == Censor::none &&
          b.entrance.censor == Censor::none) {
        // tau drops by exactly the elapsed time, so L must drop too
        CHECK(b.entrance.tau.value ==
              doctest::Approx(a.entrance.tau.value - 0.25).epsilon(1e-6));
        CHECK(b.L < a.L);
      }
    }
  }
}

TEST_CASE("pair context validation") {
  PairContext ctx = canonical_pair(wide_window());
  CHECK_NOTHROW(ctx.validate());
  ctx.attractor = SetRule();
  CHECK_THROWS_AS(ctx.validate(), ConfigError);

  MorseContext mctx;
  CHECK_THROWS_AS(mctx.validate(), ConfigError);  // needs at least one pair
}
