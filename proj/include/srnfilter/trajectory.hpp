#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "srnfilter/model.hpp"

namespace srnfilter {

/// Piecewise-constant sample path: states[i] holds on [times[i], times[i+1]).
/// fired[0] is -1 (initial state); fired[i] is the reaction that produced
/// states[i].
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<long> fired;
  double horizon = 0.0;

  std::size_t jump_count() const { return times.empty() ? 0 : times.size() - 1; }
  const State& state_at(double t) const;
};

/// Exact observation of Y on [0, T]: initial value and the jump times/values.
struct ObservedPath {
  std::vector<int> t0_value;
  std::vector<double> jump_times;
  std::vector<std::vector<int>> values;
  double horizon = 0.0;

  std::size_t jump_count() const { return jump_times.size(); }
  std::size_t segment_count() const { return jump_times.size() + 1; }
  /// Observed value on segment k, i.e. y on [t_k, t_{k+1}).
  std::span<const int> value_in_segment(std::size_t k) const {
    return k == 0 ? std::span<const int>(t0_value) : std::span<const int>(values[k - 1]);
  }
  /// y(t_k) - y(t_k^-) for jump k (1-based, k in 1..N).
  std::vector<int> jump_delta(std::size_t k) const;

  /// Throws InconsistentObservation on unsorted times, repeated values or
  /// jumps outside (0, T).
  void check() const;
};

/// Uniform sub-grid of one inter-jump interval. Table nodes sit on every
/// half step so that all RK4 stage times of the ODE grid are nodes.
struct GridSegment {
  double start = 0.0;
  double end = 0.0;
  std::size_t steps = 1;

  double step() const { return (end - start) / static_cast<double>(steps); }
  std::size_t node_count() const { return 2 * steps + 1; }
  double node_time(std::size_t i) const {
    return i + 1 == node_count() ? end
                                 : start + 0.5 * step() * static_cast<double>(i);
  }
  /// Fractional node coordinate of time t, clamped to [0, 2*steps].
  double node_coordinate(double t) const;
};

class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<GridSegment> segments)
      : segments_(std::move(segments)) {}

  /// One segment per inter-jump interval of the path; each subdivided into
  /// ceil(length/dt) equal steps.
  static TimeGrid for_path(const ObservedPath& path, double dt);
  /// Single segment [0, T].
  static TimeGrid uniform(double horizon, double dt);

  const std::vector<GridSegment>& segments() const { return segments_; }
  const GridSegment& segment(std::size_t k) const { return segments_[k]; }
  std::size_t size() const { return segments_.size(); }
  double horizon() const { return segments_.empty() ? 0.0 : segments_.back().end; }
  std::size_t total_nodes() const;

 private:
  std::vector<GridSegment> segments_;
};

}  // namespace srnfilter
