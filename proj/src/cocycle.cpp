#include "morseflow/cocycle.hpp"

#include <cmath>
#include <sstream>

namespace morseflow {

double distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

StateBox::StateBox(double lo, double hi)
    : dim(1), lower{lo, 0.0}, upper{hi, 0.0} {
  if (!(lo < hi)) throw ConfigError("StateBox: need lower < upper");
}

StateBox::StateBox(Point lo, Point hi, int dimension)
    : dim(dimension), lower(lo), upper(hi) {
  if (dim < 1 || dim > 2) throw ConfigError("StateBox: dim must be 1 or 2");
  for (int i = 0; i < dim; ++i)
    if (!(lower[i] < upper[i]))
      throw ConfigError("StateBox: need lower < upper on every axis");
}

bool StateBox::contains(const Point& p, double tol) const {
  for (int i = 0; i < dim; ++i)
    if (p[i] < lower[i] - tol || p[i] > upper[i] + tol) return false;
  return true;
}

Point StateBox::clamp(const Point& p, double* clamp_dist) const {
  Point q = p;
  double d2 = 0.0;
  for (int i = 0; i < dim; ++i) {
    if (q[i] < lower[i]) q[i] = lower[i];
    if (q[i] > upper[i]) q[i] = upper[i];
    d2 += (q[i] - p[i]) * (q[i] - p[i]);
  }
  if (clamp_dist) *clamp_dist = std::sqrt(d2);
  return q;
}

bool operator==(const StateBox& a, const StateBox& b) {
  if (a.dim != b.dim) return false;
  for (int i = 0; i < a.dim; ++i)
    if (a.lower[i] != b.lower[i] || a.upper[i] != b.upper[i]) return false;
  return true;
}

Point PolyField::eval(const Point& p) const {
  Point out{0.0, 0.0};
  for (int c = 0; c < dim; ++c) {
    double acc = 0.0;
    for (const Monomial& m : components[c]) {
      double term = m.coef;
      for (int k = 0; k < m.px; ++k) term *= p[0];
      for (int k = 0; k < m.py; ++k) term *= p[1];
      acc += term;
    }
    out[c] = acc;
  }
  return out;
}

PolyField PolyField::from_coeffs(const std::vector<double>& coeffs) {
  PolyField f;
  f.dim = 1;
  f.components.resize(1);
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    if (coeffs[k] != 0.0)
      f.components[0].push_back({coeffs[k], static_cast<int>(k), 0});
  return f;
}

PolyField PolyField::zero(int dim) {
  PolyField f;
  f.dim = dim;
  f.components.resize(dim);
  return f;
}

PolyField PolyField::named(const std::string& name, int dim) {
  if (name == "double-well") return from_coeffs({0.0, 1.0, 0.0, -1.0});
  if (name == "linear-decay") return from_coeffs({0.0, -1.0});
  if (name == "unit") return from_coeffs({1.0});
  if (name == "zero") return zero(dim);
  if (name == "spiral-sink") {
    PolyField f;
    f.dim = 2;
    f.components.resize(2);
    f.components[0] = {{-1.0, 1, 0}, {-1.0, 0, 1}};  // -x - y
    f.components[1] = {{1.0, 1, 0}, {-1.0, 0, 1}};   //  x - y
    return f;
  }
  throw ConfigError("unknown vector field name: " + name);
}

CocycleSystem CocycleSystem::exact_double_well() {
  CocycleSystem sys;
  sys.kind_ = Kind::exact_double_well;
  sys.box_ = StateBox(-1.0, 1.0);
  return sys;
}

CocycleSystem CocycleSystem::stratonovich_sde(PolyField drift,
                                              PolyField diffusion,
                                              StateBox box, double step) {
  if (!(step > 0.0)) throw ConfigError("CocycleSystem: step must be positive");
  if (drift.dim != box.dim || diffusion.dim != box.dim)
    throw ConfigError("CocycleSystem: field dimension does not match the box");
  CocycleSystem sys;
  sys.kind_ = Kind::stratonovich_sde;
  sys.box_ = box;
  sys.drift_ = std::move(drift);
  sys.diffusion_ = std::move(diffusion);
  sys.step_ = step;
  return sys;
}

CocycleSystem CocycleSystem::deterministic_flow(PolyField drift, StateBox box,
                                                double step) {
  CocycleSystem sys =
      stratonovich_sde(std::move(drift), PolyField::zero(box.dim), box, step);
  sys.kind_ = Kind::deterministic_flow;
  return sys;
}

void CocycleSystem::record_clamp(double d) const {
  double cur = max_clamp_->load(std::memory_order_relaxed);
  while (d > cur &&
         !max_clamp_->compare_exchange_weak(cur, d, std::memory_order_relaxed))
    ;
}

double CocycleSystem::max_clamp() const {
  return max_clamp_->load(std::memory_order_relaxed);
}

namespace {

// Closed-form solution of the double-well Stratonovich SDE: with
// u = t + W_t(omega),
//   phi(t, omega) x = x e^u / sqrt(1 - x^2 + x^2 e^{2u}).
// Two algebraically identical arrangements keep the evaluation finite for
// any u: divide through by e^u when u >= 0 so the exponential never
// overflows, and use the plain form when u < 0 so it never does either.
double exact_double_well_map(double u, double x) {
  if (x == 0.0 || x == 1.0 || x == -1.0) return x;  // fixed points
  if (u >= 0.0) {
    const double e = std::exp(-2.0 * u);
    return x / std::sqrt((1.0 - x * x) * e + x * x);
  }
  const double e = std::exp(u);
  return x * e / std::sqrt(1.0 - x * x + x * x * e * e);
}

}  // namespace

Point CocycleSystem::heun_step(const Point& y, double t0, double h,
                               const NoisePath& path) const {
  const Point a0 = drift_.eval(y);
  double dw = 0.0;
  Point b0{0.0, 0.0};
  const bool noisy = kind_ == Kind::stratonovich_sde;
  if (noisy) {
    dw = path.value(t0 + h) - path.value(t0);
    b0 = diffusion_.eval(y);
  }
  Point pred{0.0, 0.0};
  for (int i = 0; i < box_.dim; ++i)
    pred[i] = y[i] + a0[i] * h + (noisy ? b0[i] * dw : 0.0);
  const Point a1 = drift_.eval(pred);
  Point b1{0.0, 0.0};
  if (noisy) b1 = diffusion_.eval(pred);
  Point next{0.0, 0.0};
  for (int i = 0; i < box_.dim; ++i)
    next[i] = y[i] + 0.5 * h * (a0[i] + a1[i]) +
              (noisy ? 0.5 * dw * (b0[i] + b1[i]) : 0.0);
  double clamp_dist = 0.0;
  next = box_.clamp(next, &clamp_dist);
  if (clamp_dist > 0.0) record_clamp(clamp_dist);
  return next;
}

Point CocycleSystem::integrate_forward(double t, const NoisePath& path,
                                       Point x) const {
  if (t <= 0.0) return x;
  const long n = std::max(1L, std::lround(t / step_));
  const double h = t / static_cast<double>(n);
  for (long k = 0; k < n; ++k)
    x = heun_step(x, static_cast<double>(k) * h, h, path);
  return x;
}

Point CocycleSystem::invert_forward(double s, const NoisePath& path,
                                    const Point& x) const {
  // Solve phi(s, theta_{-s} omega) y = x for y; `path` here is already the
  // shifted path theta_{-s} omega.
  if (box_.dim == 1) {
    // 1-D cocycle maps are monotone increasing homeomorphisms: bisect.
    double lo = box_.lower[0], hi = box_.upper[0];
    double flo = integrate_forward(s, path, make_point(lo))[0] - x[0];
    double fhi = integrate_forward(s, path, make_point(hi))[0] - x[0];
    if (flo > 0.0 || fhi < 0.0) {
      // Target escapes the forward image of the box (can only happen within
      // clamping slack); return the nearer endpoint.
      return flo > 0.0 ? make_point(lo) : make_point(hi);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * box_.extent(0); ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = integrate_forward(s, path, make_point(mid))[0] - x[0];
      if (fm < 0.0)
        lo = mid;
      else
        hi = mid;
    }
    return make_point(0.5 * (lo + hi));
  }

  // 2-D: damped Newton with finite-difference Jacobian.
  Point y = x;
  const double scale =
      std::max(box_.extent(0), box_.extent(1));
  for (int it = 0; it < 80; ++it) {
    const Point f = integrate_forward(s, path, y);
    const double r0 = f[0] - x[0], r1 = f[1] - x[1];
    const double res = std::sqrt(r0 * r0 + r1 * r1);
    if (res < 1e-12 * scale) return y;
    const double eps = 1e-7 * scale;
    Point yx = y, yy = y;
    yx[0] += eps;
    yy[1] += eps;
    const Point fx = integrate_forward(s, path, box_.clamp(yx));
    const Point fy = integrate_forward(s, path, box_.clamp(yy));
    const double j00 = (fx[0] - f[0]) / eps, j01 = (fy[0] - f[0]) / eps;
    const double j10 = (fx[1] - f[1]) / eps, j11 = (fy[1] - f[1]) / eps;
    const double det = j00 * j11 - j01 * j10;
    if (std::abs(det) < 1e-14) break;
    double dx = (-r0 * j11 + r1 * j01) / det;
    double dy = (-j00 * r1 + j10 * r0) / det;
    double damp = 1.0;
    for (int half = 0; half < 30; ++half) {
      Point trial = box_.clamp({y[0] + damp * dx, y[1] + damp * dy});
      const Point ft = integrate_forward(s, path, trial);
      const double t0 = ft[0] - x[0], t1 = ft[1] - x[1];
      if (std::sqrt(t0 * t0 + t1 * t1) < res) {
        y = trial;
        break;
      }
      damp *= 0.5;
      if (half == 29) {
        std::ostringstream err;
        err << "inverse flow Newton stalled at residual " << res;
        throw NumericsError(err.str());
      }
    }
  }
  const Point f = integrate_forward(s, path, y);
  if (distance(f, x, 2) > 1e-8 * scale)
    throw NumericsError("inverse flow Newton did not converge");
  return y;
}

Point CocycleSystem::flow(double t, const NoisePath& path,
                          const Point& x) const {
  if (!box_.contains(x)) {
    std::ostringstream err;
    err << "flow: start point (" << x[0];
    if (box_.dim == 2) err << ", " << x[1];
    err << ") lies outside the state box";
    throw DomainError(err.str());
  }
  if (kind_ == Kind::exact_double_well) {
    const double w = path.value(t);
    return make_point(exact_double_well_map(t + w, x[0]));
  }
  if (t >= 0.0) return integrate_forward(t, path, x);
  // phi(t, omega) = phi(-t, theta_t omega)^{-1} for t < 0.
  return invert_forward(-t, path.shifted(t), x);
}

Point CocycleSystem::inverse_flow(double t, const NoisePath& path,
                                  const Point& y) const {
  return flow(-t, path.shifted(t), y);
}

double CocycleSystem::cocycle_residual(double t, double s,
                                       const NoisePath& path,
                                       const Point& x) const {
  const Point direct = flow(t + s, path, x);
  const Point staged = flow(t, path.shifted(s), flow(s, path, x));
  return distance(direct, staged, box_.dim);
}

FlowOrbit::FlowOrbit(const CocycleSystem& sys, const NoisePath& path,
                     const Point& x0)
    : sys_(&sys), path_(&path), start_(x0), pos_(x0) {
  if (!sys.box().contains(x0))
    throw DomainError("FlowOrbit: start point outside the state box");
}

const Point& FlowOrbit::advance_to(double t) {
  if (t < t_ - 1e-12)
    throw MisuseError("FlowOrbit: times must be nondecreasing");
  if (sys_->kind_ == CocycleSystem::Kind::exact_double_well) {
    pos_ = sys_->flow(t, *path_, start_);
    t_ = t;
    return pos_;
  }
  // Integrator kinds: continue from the current position with whole steps.
  const double remaining = t - t_;
  if (remaining > 0.0) {
    const long n = std::max(1L, std::lround(remaining / sys_->step_));
    const double h = remaining / static_cast<double>(n);
    for (long k = 0; k < n; ++k)
      pos_ = sys_->heun_step(pos_, t_ + static_cast<double>(k) * h, h, *path_);
    t_ = t;
  }
  return pos_;
}

}  // namespace morseflow
