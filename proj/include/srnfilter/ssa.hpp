#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "srnfilter/model.hpp"
#include "srnfilter/rng.hpp"
#include "srnfilter/trajectory.hpp"

namespace srnfilter {

struct SsaOptions {
  std::size_t max_jumps = 10'000'000;
};

/// Gillespie direct method for a time-homogeneous system on [0, T].
Trajectory ssa_simulate(const ReactionSystem& system, const State& z0,
                        double horizon, std::uint64_t seed,
                        const SsaOptions& options = {});

/// Advances z in place from t_from to t_to with the direct method, drawing
/// from `rng`. Returns the number of reactions fired.
std::size_t ssa_advance(const ReactionSystem& system, State& z, double t_from,
                        double t_to, Engine& rng, const SsaOptions& options = {});

/// Modified next reaction method for a system whose propensities are
/// piecewise constant in time on the node cells of `segment` (the value on a
/// cell is the propensity at its left node). Internal-time integrals are
/// accumulated exactly cell by cell.
Trajectory mnrm_simulate(const ReactionSystem& system, const State& z0,
                         const GridSegment& segment, std::size_t segment_index,
                         std::uint64_t seed, const SsaOptions& options = {});

/// Keeps the jumps of `trajectory` that change the observed slice.
ObservedPath extract_observation(const Trajectory& trajectory,
                                 const StatePartition& partition);

State sample_initial(const InitialDistribution& mu, Engine& rng);
State sample_initial(const InitialDistribution& mu, std::uint64_t seed);

}  // namespace srnfilter
