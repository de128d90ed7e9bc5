#include "morseflow/noise.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace morseflow {

namespace {

// Checks that x is a whole multiple of dt within a relative tolerance and
// returns the multiple.
bool whole_multiple(double x, double dt, long long* out) {
  const double q = x / dt;
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q))) return false;
  *out = static_cast<long long>(r);
  return true;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Standard-normal draw via Box-Muller on mt19937_64. Hand-rolled because
// std::normal_distribution's algorithm is implementation-defined and the
// sampled paths must be identical everywhere.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0,1], u2 in [0,1).
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  double uniform01() {
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  }

  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace

TimeGrid::TimeGrid(double tmin, double tmax, double step)
    : t_min(tmin), t_max(tmax), dt(step) {
  std::ostringstream err;
  if (!(dt > 0.0)) {
    err << "TimeGrid: dt must be positive, got " << dt;
    throw ConfigError(err.str());
  }
  if (!(t_min <= 0.0) || !(t_max >= 0.0) || !(t_min < t_max)) {
    err << "TimeGrid: need t_min <= 0 <= t_max and t_min < t_max, got ["
        << t_min << ", " << t_max << "]";
    throw ConfigError(err.str());
  }
  long long k_neg = 0, k_pos = 0;
  if (!whole_multiple(-t_min, dt, &k_neg) || !whole_multiple(t_max, dt, &k_pos)) {
    err << "TimeGrid: t_min and t_max must be whole multiples of dt so that "
           "t = 0 is a node; got [" << t_min << ", " << t_max << "] with dt "
        << dt;
    throw ConfigError(err.str());
  }
  n_neg_ = static_cast<std::size_t>(k_neg);
  n_pos_ = static_cast<std::size_t>(k_pos);
}

double NoisePath::base_value(double t) const {
  const TimeGrid& g = data_->grid;
  if (t < g.t_min - 1e-9 * g.dt || t > g.t_max + 1e-9 * g.dt) {
    std::ostringstream err;
    err << "noise path evaluated at t = " << t << " outside stored horizon ["
        << g.t_min << ", " << g.t_max << "]";
    throw OutOfHorizonError(err.str());
  }
  if (data_->zero) return 0.0;
  const double pos = (t - g.t_min) / g.dt;
  const auto n = data_->values.size();
  std::size_t i = static_cast<std::size_t>(std::floor(pos));
  if (i >= n - 1) i = n - 2;
  const double frac = pos - static_cast<double>(i);
  const double lo = data_->values[i];
  const double hi = data_->values[i + 1];
  if (frac <= 0.0) return lo;
  if (frac >= 1.0) return hi;
  return lo + frac * (hi - lo);
}

double NoisePath::value(double t) const {
  if (offset_ == 0.0) return base_value(t);
  return base_value(t + offset_) - base_value(offset_);
}

NoisePath NoisePath::shifted(double s) const {
  NoisePath out = *this;
  out.offset_ = offset_ + s;
  // Fail fast if the new origin already falls off the horizon.
  out.base_value(out.offset_);
  return out;
}

const TimeGrid& NoisePath::grid() const { return data_->grid; }

std::uint64_t NoisePath::seed() const { return data_->seed; }

bool NoisePath::is_zero() const { return data_->zero; }

NoisePath sample_wiener(const TimeGrid& grid, std::uint64_t seed) {
  auto data = std::make_shared<NoisePath::Data>();
  data->grid = grid;
  data->seed = seed;
  data->values.assign(grid.node_count(), 0.0);
  const std::size_t zi = grid.zero_index();
  const double step_sd = std::sqrt(grid.dt);

  // Independent increment streams for the two sides of t = 0.
  GaussianStream fwd(splitmix64(seed ^ 0x77f6a7c15ULL));
  GaussianStream bwd(splitmix64(splitmix64(seed) ^ 0x2545f4914f6cdd1dULL));

  double w = 0.0;
  for (std::size_t i = zi + 1; i < data->values.size(); ++i) {
    w += step_sd * fwd.next();
    data->values[i] = w;
  }
  w = 0.0;
  for (std::size_t k = zi; k-- > 0;) {
    w += step_sd * bwd.next();
    data->values[k] = w;
  }

  NoisePath path;
  path.data_ = std::move(data);
  return path;
}

NoisePath zero_path(const TimeGrid& grid) {
  auto data = std::make_shared<NoisePath::Data>();
  data->grid = grid;
  data->zero = true;
  NoisePath path;
  path.data_ = std::move(data);
  return path;
}

}  // namespace morseflow
