#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "morseflow/cellset.hpp"
#include "morseflow/cocycle.hpp"
#include "morseflow/errors.hpp"
#include "morseflow/noise.hpp"

namespace morseflow {

// Time on the extended line [-inf, +inf]: -inf on the attractor, +inf on the
// repeller, a finite entrance time in between.
struct ExtendedTime {
  enum class Tag { neg_inf, finite, pos_inf };
  Tag tag = Tag::finite;
  double value = 0.0;  // meaningful only when tag == finite

  static ExtendedTime minus_infinity() { return {Tag::neg_inf, 0.0}; }
  static ExtendedTime plus_infinity() { return {Tag::pos_inf, 0.0}; }
  static ExtendedTime finite_at(double t) { return {Tag::finite, t}; }

  bool is_finite() const { return tag == Tag::finite; }

  friend bool operator==(const ExtendedTime& a, const ExtendedTime& b) {
    if (a.tag != b.tag) return false;
    return a.tag != Tag::finite || a.value == b.value;
  }
  friend bool operator<(const ExtendedTime& a, const ExtendedTime& b) {
    if (a.tag == Tag::neg_inf) return b.tag != Tag::neg_inf;
    if (a.tag == Tag::pos_inf) return false;
    if (b.tag == Tag::neg_inf) return false;
    if (b.tag == Tag::pos_inf) return true;
    return a.value < b.value;
  }
};

// Whether the bisection search ran off an end of its window before the
// entrance was bracketed.
enum class Censor { none, low, high };

struct EntranceResult {
  ExtendedTime tau;
  Censor censor = Censor::none;
  // Nominal width of the final bisection bracket, dt / 2^refine_iters; the
  // reported finite tau is its midpoint, so the error is at most half this.
  // Zero for the infinite and censored cases.
  double precision = 0.0;
};

// Scan-and-bisect parameters for the entrance search. The coarse scan walks
// the window from t_lo to t_hi in steps of dt and bisection then shrinks the
// first bracketing step refine_iters times.
struct SearchWindow {
  double t_lo = -40.0;
  double t_hi = 40.0;
  double dt = 0.05;
  int refine_iters = 40;

  void validate() const;
  double precision() const { return std::ldexp(dt, -refine_iters); }
};

// One attractor-repeller pair with the neighborhood whose entrance defines
// the Lyapunov function.
struct PairContext {
  SetRule attractor;
  SetRule repeller;
  SetRule neighborhood;
  SearchWindow search;

  void validate() const;
};

// Entrance time tau(omega, x): -inf when x lies in an attractor cell, +inf in
// a repeller cell, otherwise the smallest t in the search window with
// phi(t, omega) x in N(theta_t omega), located by a left-to-right coarse scan
// plus bisection. Inside N at t_lo censors low, never inside by t_hi censors
// high. The scan assumes at most one false-to-true flip per dt step; an
// excursion shorter than dt can be missed, which tau_cocycle_residual
// detects and resolves by halving dt.
EntranceResult entrance_time(const PairContext& ctx, const CocycleSystem& sys,
                             const NoisePath& path, const Point& x);

// Monotone map from extended entrance time to [0, 1]:
//   L = exp(tau)/2 for tau < 0, (1 + (2/pi) atan tau)/2 for tau >= 0,
// with L(-inf) = 0 and L(+inf) = 1. Continuous and strictly increasing.
double lyap_value(const ExtendedTime& tau);

struct LyapEval {
  double value = 0.0;
  bool censored = false;
};

// Lyapunov value of the pair at x, i.e. lyap_value of its entrance time.
LyapEval pair_lyapunov(const PairContext& ctx, const CocycleSystem& sys,
                       const NoisePath& path, const Point& x);

// Residual of the entrance-time cocycle identity
//   tau(theta_t omega, phi(t, omega) x) = tau(omega, x) - t.
// Returns nullopt when either side is infinite or censored. Both sides see
// the same physical orbit, so a residual above 4x the bisection precision
// means one scan lattice missed a sub-dt excursion through N; the check then
// retries both searches with dt halved (to a fixed retry budget) and reports
// the best residual achieved.
std::optional<double> tau_cocycle_residual(const PairContext& ctx,
                                           const CocycleSystem& sys,
                                           const NoisePath& path,
                                           const Point& x, double t);

// Inner attractor-repeller pairs of a Morse filtration, coarsest attractor
// last: pairs[i] holds (A_{i+1}, R_{i+1}) for i = 0..n-2 when the
// decomposition has n Morse sets.
struct MorseContext {
  std::vector<PairContext> pairs;

  void validate() const;
};

// Weighted Lyapunov function separating the Morse sets:
//   L(x) = 2/3 + sum_i 2 l_i(x) / 3^(i+2),
// where l_i is the i-th pair Lyapunov value. On cells of the k-th Morse set
// every l_i is exactly 0 or 1, so the plateau value 1 - 3^(-k) is assembled
// in exact rational arithmetic and rounded once.
LyapEval morse_lyapunov(const MorseContext& ctx, const CocycleSystem& sys,
                        const NoisePath& path, const Point& x);

struct ProfilePoint {
  double t = 0.0;
  Point x{0.0, 0.0};
  EntranceResult entrance;
  double L = 0.0;
};

// Samples the pair Lyapunov function along the orbit of x0: at each
// t_j = j dt it evaluates the pair at (theta_{t_j} omega, phi(t_j, omega) x0).
// Along an orbit off both A and R, tau shifts by exactly -dt per step, so L
// must decrease strictly wherever the tau decrement clears the bisection
// noise floor.
std::vector<ProfilePoint> monotonicity_profile(const PairContext& ctx,
                                               const CocycleSystem& sys,
                                               const NoisePath& path,
                                               const Point& x0, double t_max,
                                               double dt);

struct MorseProfilePoint {
  double t = 0.0;
  Point x{0.0, 0.0};
  LyapEval L;
};

// Same orbit sampling for the weighted Morse Lyapunov function.
std::vector<MorseProfilePoint> morse_monotonicity_profile(
    const MorseContext& ctx, const CocycleSystem& sys, const NoisePath& path,
    const Point& x0, double t_max, double dt);

}  // namespace morseflow
