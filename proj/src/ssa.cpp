#include "srnfilter/ssa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "srnfilter/errors.hpp"

namespace srnfilter {
namespace {

void apply(const ReactionSystem& system, std::size_t j, State& z) {
  const auto nu = system.net_change(j);
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] += nu[i];
    if (z[i] < 0)
      throw Error(ErrorKind::InvalidModel,
                  "reaction " + std::to_string(j) + " drove a copy number negative");
  }
}

void guard(std::size_t jumps, const SsaOptions& options) {
  if (jumps > options.max_jumps)
    throw Error(ErrorKind::ExplosionGuard,
                "simulation exceeded " + std::to_string(options.max_jumps) + " jumps");
}

std::size_t pick(std::span<const double> props, double total, Engine& rng) {
  const double target = uniform_open(rng) * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < props.size(); ++j) {
    if (props[j] <= 0.0) continue;
    acc += props[j];
    last = j;
    if (target < acc) return j;
  }
  return last;  // round-off at the top of the cumulative sum
}

// Direct-method core; `record` is called after every fired reaction.
template <class Record>
std::size_t direct_method(const ReactionSystem& system, State& z, double t,
                          double t_end, Engine& rng, const SsaOptions& options,
                          Record&& record) {
  if (system.time_dependent())
    throw Error(ErrorKind::BadParam,
                "direct-method SSA requires time-homogeneous propensities; use mnrm_simulate");
  const std::size_t J = system.reaction_count();
  std::vector<double> props(J);
  std::size_t jumps = 0;
  while (true) {
    double total = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      props[j] = system.propensity(j, z, {0, t});
      total += props[j];
    }
    if (!(total > 0.0)) break;
    std::exponential_distribution<double> wait(total);
    t += wait(rng);
    if (t >= t_end) break;
    const std::size_t j = pick(props, total, rng);
    apply(system, j, z);
    guard(++jumps, options);
    record(t, j);
  }
  return jumps;
}

}  // namespace

Trajectory ssa_simulate(const ReactionSystem& system, const State& z0,
                        double horizon, std::uint64_t seed,
                        const SsaOptions& options) {
  if (!(horizon > 0.0)) throw Error(ErrorKind::BadParam, "horizon must be positive");
  Engine rng(stream_seed(seed, 0));
  Trajectory traj;
  traj.horizon = horizon;
  traj.times.push_back(0.0);
  traj.states.push_back(z0);
  traj.fired.push_back(-1);
  State z = z0;
  direct_method(system, z, 0.0, horizon, rng, options,
                [&](double t, std::size_t j) {
                  traj.times.push_back(t);
                  traj.states.push_back(z);
                  traj.fired.push_back(static_cast<long>(j));
                });
  return traj;
}

std::size_t ssa_advance(const ReactionSystem& system, State& z, double t_from,
                        double t_to, Engine& rng, const SsaOptions& options) {
  return direct_method(system, z, t_from, t_to, rng, options,
                       [](double, std::size_t) {});
}

Trajectory mnrm_simulate(const ReactionSystem& system, const State& z0,
                         const GridSegment& segment, std::size_t segment_index,
                         std::uint64_t seed, const SsaOptions& options) {
  Engine rng(stream_seed(seed, 0));
  const std::size_t J = system.reaction_count();
  const std::size_t cells = segment.node_count() - 1;
  Trajectory traj;
  traj.horizon = segment.end;
  traj.times.push_back(segment.start);
  traj.states.push_back(z0);
  traj.fired.push_back(-1);

  State z = z0;
  std::vector<double> internal(J, 0.0);  // T_k
  std::vector<double> next(J);           // P_k
  std::exponential_distribution<double> unit(1.0);
  for (auto& p : next) p = unit(rng);

  double t = segment.start;
  std::size_t cell = 0;
  // Propensities on each cell for the current state, filled lazily.
  std::vector<std::vector<double>> rate(cells);
  auto cell_rates = [&](std::size_t c) -> const std::vector<double>& {
    auto& r = rate[c];
    if (r.empty()) {
      r.resize(J);
      const TimePoint at{segment_index, segment.node_time(c)};
      for (std::size_t j = 0; j < J; ++j) r[j] = system.propensity(j, z, at);
    }
    return r;
  };
  auto cell_end = [&](std::size_t c) { return segment.node_time(c + 1); };

  std::size_t jumps = 0;
  while (t < segment.end) {
    // Earliest reaction to exhaust its remaining internal time P_k - T_k.
    double best_time = std::numeric_limits<double>::infinity();
    std::size_t best = J;
    for (std::size_t j = 0; j < J; ++j) {
      double remaining = next[j] - internal[j];
      double s = t;
      for (std::size_t c = cell; c < cells; ++c) {
        const double a = cell_rates(c)[j];
        const double len = cell_end(c) - s;
        if (a > 0.0 && a * len >= remaining) {
          s += remaining / a;
          if (s < best_time) {
            best_time = s;
            best = j;
          }
          break;
        }
        remaining -= a * len;
        s = cell_end(c);
        if (s >= best_time) break;
      }
    }
    const double t_next = std::min(best_time, segment.end);
    // Accumulate internal time up to t_next.
    {
      double s = t;
      std::size_t c = cell;
      while (s < t_next && c < cells) {
        const double e = std::min(cell_end(c), t_next);
        const auto& r = cell_rates(c);
        for (std::size_t j = 0; j < J; ++j) internal[j] += r[j] * (e - s);
        s = e;
        if (e >= cell_end(c)) ++c;
      }
      cell = std::min(c, cells - 1);
      while (cell + 1 < cells && cell_end(cell) <= t_next) ++cell;
    }
    t = t_next;
    if (best == J || best_time >= segment.end) break;
    internal[best] = next[best];
    next[best] += unit(rng);
    apply(system, best, z);
    guard(++jumps, options);
    for (auto& r : rate) r.clear();
    traj.times.push_back(t);
    traj.states.push_back(z);
    traj.fired.push_back(static_cast<long>(best));
  }
  return traj;
}

ObservedPath extract_observation(const Trajectory& trajectory,
                                 const StatePartition& partition) {
  ObservedPath path;
  path.horizon = trajectory.horizon;
  path.t0_value = slice(trajectory.states.front(), partition.observed);
  std::vector<int> current = path.t0_value;
  for (std::size_t i = 1; i < trajectory.states.size(); ++i) {
    auto y = slice(trajectory.states[i], partition.observed);
    if (y != current) {
      path.jump_times.push_back(trajectory.times[i]);
      path.values.push_back(y);
      current = std::move(y);
    }
  }
  return path;
}

State sample_initial(const InitialDistribution& mu, Engine& rng) {
  State z(mu.marginals.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const auto& m = mu.marginals[i];
    if (m.is_deterministic()) {
      z[i] = m.support.front();
      continue;
    }
    std::discrete_distribution<std::size_t> pick(m.probs.begin(), m.probs.end());
    z[i] = m.support[pick(rng)];
  }
  return z;
}

State sample_initial(const InitialDistribution& mu, std::uint64_t seed) {
  Engine rng(stream_seed(seed, 1));
  return sample_initial(mu, rng);
}

}  // namespace srnfilter
