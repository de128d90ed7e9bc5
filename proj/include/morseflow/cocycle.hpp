#pragma once

#include <array>
#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "morseflow/errors.hpp"
#include "morseflow/noise.hpp"

namespace morseflow {

// State-space point; only the first `dim` coordinates of the owning box are
// meaningful (dim is 1 or 2).
using Point = std::array<double, 2>;

inline Point make_point(double x) { return {x, 0.0}; }
inline Point make_point(double x, double y) { return {x, y}; }

double distance(const Point& a, const Point& b, int dim);

// Compact axis-aligned box, the cocycle's state space.
struct StateBox {
  int dim = 1;
  Point lower{0.0, 0.0};
  Point upper{0.0, 0.0};

  StateBox() = default;
  StateBox(double lo, double hi);                        // 1-D
  StateBox(Point lo, Point hi, int dimension);

  bool contains(const Point& p, double tol = 1e-9) const;
  Point clamp(const Point& p, double* clamp_dist = nullptr) const;
  double extent(int axis) const { return upper[axis] - lower[axis]; }

  friend bool operator==(const StateBox& a, const StateBox& b);
};

// Polynomial vector field given as monomial lists per component.
struct Monomial {
  double coef = 0.0;
  int px = 0;
  int py = 0;
};

struct PolyField {
  int dim = 1;
  std::vector<std::vector<Monomial>> components;

  Point eval(const Point& p) const;

  // 1-D field from dense coefficients c[k] of x^k.
  static PolyField from_coeffs(const std::vector<double>& coeffs);
  static PolyField zero(int dim);
  // Named registry: "double-well" (x - x^3), "linear-decay" (-x),
  // "spiral-sink" 2-D ((-x - y, x - y)), "unit" (constant 1), "zero".
  static PolyField named(const std::string& name, int dim = 1);
};

// A cocycle over the Wiener shift on a compact box. Three kinds:
//  - exact double-well: closed-form solution of
//    dX = (X - X^3) dt + (X - X^3) o dW on [-1, 1];
//  - Stratonovich SDE integrated with the Heun predictor-corrector scheme;
//  - deterministic flow (drift only, ignores the path values).
// Negative times evaluate phi(t, omega) = phi(-t, theta_t omega)^{-1}; the
// exact kind uses its formula directly, integrator kinds invert the forward
// map numerically (monotone bisection in 1-D, damped Newton in 2-D).
class CocycleSystem {
 public:
  enum class Kind { exact_double_well, stratonovich_sde, deterministic_flow };

  static CocycleSystem exact_double_well();
  static CocycleSystem stratonovich_sde(PolyField drift, PolyField diffusion,
                                        StateBox box, double step);
  static CocycleSystem deterministic_flow(PolyField drift, StateBox box,
                                          double step);

  // phi(t, omega) x for any real t. Throws DomainError if x is outside the
  // box, OutOfHorizonError if the path cannot cover [0, t].
  Point flow(double t, const NoisePath& path, const Point& x) const;

  // phi(t, omega)^{-1} y == phi(-t, theta_t omega) y.
  Point inverse_flow(double t, const NoisePath& path, const Point& y) const;

  // dist(phi(t+s, omega) x, phi(t, theta_s omega) phi(s, omega) x).
  double cocycle_residual(double t, double s, const NoisePath& path,
                          const Point& x) const;

  Kind kind() const { return kind_; }
  const StateBox& box() const { return box_; }
  int dim() const { return box_.dim; }
  double step() const { return step_; }

  // Largest distance by which an integrator result has been clamped back
  // into the box so far (diagnostic; callers warn above 1e-6).
  double max_clamp() const;

  // 1-D conveniences.
  double flow1(double t, const NoisePath& path, double x) const {
    return flow(t, path, make_point(x))[0];
  }
  double inverse_flow1(double t, const NoisePath& path, double y) const {
    return inverse_flow(t, path, make_point(y))[0];
  }

 private:
  CocycleSystem() = default;

  Point integrate_forward(double t, const NoisePath& path, Point x) const;
  Point invert_forward(double s, const NoisePath& path, const Point& x) const;
  Point heun_step(const Point& y, double t0, double h,
                  const NoisePath& path) const;
  void record_clamp(double d) const;

  friend class FlowOrbit;

  Kind kind_ = Kind::exact_double_well;
  StateBox box_;
  PolyField drift_;
  PolyField diffusion_;
  double step_ = 0.0;
  std::shared_ptr<std::atomic<double>> max_clamp_ =
      std::make_shared<std::atomic<double>>(0.0);
};

// Marches a single start point through increasing times on a fixed path.
// For integrator kinds this reuses the already-integrated prefix, so probing
// an orbit at many times costs one pass instead of one integration per probe.
class FlowOrbit {
 public:
  FlowOrbit(const CocycleSystem& sys, const NoisePath& path, const Point& x0);

  // Position at time t >= the previously requested time (t >= 0).
  const Point& advance_to(double t);
  const Point& position() const { return pos_; }
  double time() const { return t_; }

 private:
  const CocycleSystem* sys_;
  const NoisePath* path_;
  Point start_;
  Point pos_;
  double t_ = 0.0;
};

}  // namespace morseflow
