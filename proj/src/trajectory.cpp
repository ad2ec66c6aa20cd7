#include "srnfilter/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "srnfilter/errors.hpp"

namespace srnfilter {

const State& Trajectory::state_at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto i = it == times.begin() ? 0 : (it - times.begin()) - 1;
  return states[static_cast<std::size_t>(i)];
}

std::vector<int> ObservedPath::jump_delta(std::size_t k) const {
  const auto after = value_in_segment(k);
  const auto before = value_in_segment(k - 1);
  std::vector<int> d(after.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = after[i] - before[i];
  return d;
}

void ObservedPath::check() const {
  auto fail = [](const std::string& m) {
    throw Error(ErrorKind::InconsistentObservation, m);
  };
  if (!(horizon > 0.0)) fail("observation horizon must be positive");
  if (values.size() != jump_times.size()) fail("jump times/values size mismatch");
  double prev = 0.0;
  for (std::size_t k = 0; k < jump_times.size(); ++k) {
    if (!(jump_times[k] > prev)) fail("jump times must be strictly increasing and positive");
    if (!(jump_times[k] < horizon)) fail("jump time at or after the horizon");
    prev = jump_times[k];
    if (values[k].size() != t0_value.size()) fail("observed value has wrong length");
    const auto before = value_in_segment(k);
    if (std::equal(before.begin(), before.end(), values[k].begin()))
      fail("consecutive observed values must differ");
    if (std::any_of(values[k].begin(), values[k].end(), [](int v) { return v < 0; }))
      fail("negative observed copy number");
  }
}

double GridSegment::node_coordinate(double t) const {
  const double half = 0.5 * step();
  const double s = half > 0.0 ? (t - start) / half : 0.0;
  return std::clamp(s, 0.0, static_cast<double>(2 * steps));
}

TimeGrid TimeGrid::for_path(const ObservedPath& path, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::BadParam, "dt must be positive");
  std::vector<GridSegment> segs;
  double start = 0.0;
  for (std::size_t k = 0; k <= path.jump_times.size(); ++k) {
    const double end = k < path.jump_times.size() ? path.jump_times[k] : path.horizon;
    const double len = end - start;
    // Guard against ceil(3.0000000001) = 4 from round-off.
    auto steps = static_cast<std::size_t>(std::ceil(len / dt - 1e-9));
    segs.push_back({start, end, std::max<std::size_t>(1, steps)});
    start = end;
  }
  return TimeGrid(std::move(segs));
}

TimeGrid TimeGrid::uniform(double horizon, double dt) {
  ObservedPath p;
  p.horizon = horizon;
  return for_path(p, dt);
}

std::size_t TimeGrid::total_nodes() const {
  std::size_t n = 0;
  for (const auto& s : segments_) n += s.node_count();
  return n;
}

}  // namespace srnfilter
