#include "morseflow/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "morseflow/rational.hpp"

namespace morseflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Retry budget for the residual check below; each retry halves the scan step.
constexpr int kMaxResidualHalvings = 14;

}  // namespace

void SearchWindow::validate() const {
  if (!(t_lo < 0.0) || !(t_hi > 0.0))
    throw ConfigError("SearchWindow: window must straddle zero (t_lo < 0 < t_hi)");
  if (!(dt > 0.0)) throw ConfigError("SearchWindow: dt must be positive");
  if (refine_iters < 1)
    throw ConfigError("SearchWindow: refine_iters must be >= 1");
}

void PairContext::validate() const {
  if (!attractor.valid() || !repeller.valid() || !neighborhood.valid())
    throw ConfigError("PairContext: all three set rules must be bound");
  if (!(attractor.partition() == repeller.partition()) ||
      !(attractor.partition() == neighborhood.partition()))
    throw ConfigError("PairContext: set rules disagree on the partition");
  search.validate();
}

void MorseContext::validate() const {
  if (pairs.empty()) throw ConfigError("MorseContext: no pairs");
  for (const auto& p : pairs) p.validate();
  for (std::size_t i = 1; i < pairs.size(); ++i)
    if (!(pairs[i].attractor.partition() == pairs[0].attractor.partition()))
      throw ConfigError("MorseContext: pairs disagree on the partition");
}

EntranceResult entrance_time(const PairContext& ctx, const CocycleSystem& sys,
                             const NoisePath& path, const Point& x) {
  ctx.validate();
  const Partition& part = ctx.neighborhood.partition();
  const int cell0 = part.locate(x);
  if (ctx.attractor(path).contains(cell0))
    return {ExtendedTime::minus_infinity(), Censor::none, 0.0};
  if (ctx.repeller(path).contains(cell0))
    return {ExtendedTime::plus_infinity(), Censor::none, 0.0};

  const auto in_n = [&](double t) {
    const Point y = sys.flow(t, path, x);
    return ctx.neighborhood(path.shifted(t)).contains(part.locate(y));
  };

  // tau is the *first* time in the window with the orbit inside N, so the
  // coarse scan walks the whole window left to right and brackets the
  // earliest false-to-true flip.  Scanning outward from zero instead would
  // latch onto whichever membership boundary is nearest, and two frames of
  // the same orbit could then disagree about tau by a whole excursion.
  const SearchWindow& w = ctx.search;
  if (in_n(w.t_lo)) return {ExtendedTime::finite_at(w.t_lo), Censor::low, 0.0};
  const long steps = std::lround(std::ceil((w.t_hi - w.t_lo) / w.dt - 1e-9));
  double a = w.t_lo;
  for (long k = 1; k <= steps; ++k) {
    const double t = std::min(w.t_lo + static_cast<double>(k) * w.dt, w.t_hi);
    if (in_n(t)) {
      double b = t;
      for (int i = 0; i < w.refine_iters; ++i) {
        const double mid = 0.5 * (a + b);
        if (in_n(mid))
          b = mid;
        else
          a = mid;
      }
      // Report the nominal bracket width: the measured b - a carries a few
      // ulps of midpoint rounding at finite magnitudes.
      return {ExtendedTime::finite_at(0.5 * (a + b)), Censor::none,
              w.precision()};
    }
    a = t;
  }
  return {ExtendedTime::finite_at(w.t_hi), Censor::high, 0.0};
}

double lyap_value(const ExtendedTime& tau) {
  switch (tau.tag) {
    case ExtendedTime::Tag::neg_inf:
      return 0.0;
    case ExtendedTime::Tag::pos_inf:
      return 1.0;
    case ExtendedTime::Tag::finite:
      break;
  }
  if (tau.value < 0.0) return 0.5 * std::exp(tau.value);
  return 0.5 * (1.0 + (2.0 / kPi) * std::atan(tau.value));
}

LyapEval pair_lyapunov(const PairContext& ctx, const CocycleSystem& sys,
                       const NoisePath& path, const Point& x) {
  const EntranceResult er = entrance_time(ctx, sys, path, x);
  return {lyap_value(er.tau), er.censor != Censor::none};
}

std::optional<double> tau_cocycle_residual(const PairContext& ctx,
                                           const CocycleSystem& sys,
                                           const NoisePath& path,
                                           const Point& x, double t) {
  const Point y = sys.flow(t, path, x);
  const NoisePath shifted = path.shifted(t);
  // A coarse scan step can straddle a short excursion through N that only
  // one of the two searches samples (their probe lattices are offset by t).
  // When the residual is out of tolerance, retry both searches on a halved
  // step until they agree on the same first entrance.
  PairContext refined = ctx;
  std::optional<double> best;
  for (int halving = 0; halving <= kMaxResidualHalvings; ++halving) {
    const EntranceResult here = entrance_time(refined, sys, path, x);
    if (!here.tau.is_finite() || here.censor != Censor::none)
      return std::nullopt;
    const EntranceResult there = entrance_time(refined, sys, shifted, y);
    if (!there.tau.is_finite() || there.censor != Censor::none)
      return std::nullopt;
    const double residual = std::abs(there.tau.value - (here.tau.value - t));
    if (!best || residual < *best) best = residual;
    if (residual <= 4.0 * refined.search.precision()) return residual;
    refined.search.dt *= 0.5;
  }
  return best;
}

LyapEval morse_lyapunov(const MorseContext& ctx, const CocycleSystem& sys,
                        const NoisePath& path, const Point& x) {
  ctx.validate();
  // l_0 == 1 contributes its full weight 2/3; infinite entrance times keep
  // their pair weight exact so plateau values survive to the last rounding.
  Rational exact{2, 3};
  double inexact = 0.0;
  bool censored = false;
  for (std::size_t i = 0; i < ctx.pairs.size(); ++i) {
    const EntranceResult er = entrance_time(ctx.pairs[i], sys, path, x);
    censored = censored || er.censor != Censor::none;
    const Rational weight{2, pow3(static_cast<int>(i) + 2)};
    switch (er.tau.tag) {
      case ExtendedTime::Tag::neg_inf:
        break;  // l_i = 0
      case ExtendedTime::Tag::pos_inf:
        exact = exact + weight;
        break;
      case ExtendedTime::Tag::finite:
        inexact += weight.to_double() * lyap_value(er.tau);
        break;
    }
  }
  return {exact.to_double() + inexact, censored};
}

std::vector<ProfilePoint> monotonicity_profile(const PairContext& ctx,
                                               const CocycleSystem& sys,
                                               const NoisePath& path,
                                               const Point& x0, double t_max,
                                               double dt) {
  if (!(dt > 0.0) || !(t_max >= 0.0))
    throw ConfigError("monotonicity_profile: need dt > 0 and t_max >= 0");
  std::vector<ProfilePoint> out;
  FlowOrbit orbit(sys, path, x0);
  const long steps = std::lround(t_max / dt);
  out.reserve(static_cast<std::size_t>(steps) + 1);
  for (long j = 0; j <= steps; ++j) {
    const double t = static_cast<double>(j) * dt;
    ProfilePoint p;
    p.t = t;
    p.x = orbit.advance_to(t);
    p.entrance = entrance_time(ctx, sys, path.shifted(t), p.x);
    p.L = lyap_value(p.entrance.tau);
    out.push_back(p);
  }
  return out;
}

std::vector<MorseProfilePoint> morse_monotonicity_profile(
    const MorseContext& ctx, const CocycleSystem& sys, const NoisePath& path,
    const Point& x0, double t_max, double dt) {
  if (!(dt > 0.0) || !(t_max >= 0.0))
    throw ConfigError("morse_monotonicity_profile: need dt > 0 and t_max >= 0");
  std::vector<MorseProfilePoint> out;
  FlowOrbit orbit(sys, path, x0);
  const long steps = std::lround(t_max / dt);
  out.reserve(static_cast<std::size_t>(steps) + 1);
  for (long j = 0; j <= steps; ++j) {
    const double t = static_cast<double>(j) * dt;
    MorseProfilePoint p;
    p.t = t;
    p.x = orbit.advance_to(t);
    p.L = morse_lyapunov(ctx, sys, path.shifted(t), p.x);
    out.push_back(p);
  }
  return out;
}

}  // namespace morseflow
