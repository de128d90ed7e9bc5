#pragma once

#include <cstdint>
#include <memory>
#include <tuple>
#include <vector>

#include "morseflow/errors.hpp"

namespace morseflow {

// Uniform time grid [t_min, t_max] with step dt. t_min <= 0 <= t_max, and
// both endpoints must be whole multiples of dt so that t = 0 is a node
// (the sampled path is pinned to 0 there).
struct TimeGrid {
  double t_min = 0.0;
  double t_max = 0.0;
  double dt = 0.0;

  TimeGrid() = default;
  TimeGrid(double tmin, double tmax, double step);

  // Number of nodes, and index of the node at t = 0.
  std::size_t node_count() const { return n_neg_ + n_pos_ + 1; }
  std::size_t zero_index() const { return n_neg_; }
  double node_time(std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(n_neg_)) * dt;
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.t_min == b.t_min && a.t_max == b.t_max && a.dt == b.dt;
  }

 private:
  std::size_t n_neg_ = 0;  // steps below 0
  std::size_t n_pos_ = 0;  // steps above 0
};

// A realized two-sided Brownian path plus an accumulated shift offset.
// Shifting is O(1): shifted copies share the immutable node data and evaluate
// as value(u) = base(u + offset) - base(offset), which makes the shift-flow
// property theta_{t+s} = theta_t . theta_s exact up to the offset sum.
class NoisePath {
 public:
  // Path value W_t by linear interpolation between stored nodes.
  double value(double t) const;

  // View of this path shifted by s: value'(u) = value(u + s) - value(s).
  NoisePath shifted(double s) const;

  const TimeGrid& grid() const;
  double shift_offset() const { return offset_; }
  std::uint64_t seed() const;
  bool is_zero() const;

  // Stable identity of the underlying realization, for memo keys. Content
  // based (seed, kind, grid) rather than address based: sampling is
  // deterministic, so equal keys mean equal node data even across separately
  // constructed paths, and a reused allocation can never alias a stale entry.
  using RealizationKey =
      std::tuple<std::uint64_t, int, double, double, double>;
  RealizationKey realization_id() const {
    return {data_->seed, data_->zero ? 1 : 0, data_->grid.t_min,
            data_->grid.t_max, data_->grid.dt};
  }

  friend NoisePath sample_wiener(const TimeGrid& grid, std::uint64_t seed);
  friend NoisePath zero_path(const TimeGrid& grid);

 private:
  struct Data {
    TimeGrid grid;
    std::vector<double> values;  // node values, values[zero_index] == 0
    std::uint64_t seed = 0;
    bool zero = false;
  };

  double base_value(double t) const;

  std::shared_ptr<const Data> data_;
  double offset_ = 0.0;
};

// Samples a Brownian path on the grid: independent N(0, dt) increments on
// each side of 0 (two decorrelated streams derived from one seed), pinned to
// W_0 = 0. Bit-identical for identical (grid, seed).
NoisePath sample_wiener(const TimeGrid& grid, std::uint64_t seed);

// Deterministic debugging path that is identically zero.
NoisePath zero_path(const TimeGrid& grid);

}  // namespace morseflow
