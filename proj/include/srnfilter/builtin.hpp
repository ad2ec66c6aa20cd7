#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srnfilter/model.hpp"
#include "srnfilter/trajectory.hpp"

namespace srnfilter {

/// A network together with everything needed to filter it: partition,
/// initial law and defaults for the horizon, step and hidden box.
struct ModelSpec {
  std::string name;
  SrnModel model;
  StatePartition partition;
  InitialDistribution initial;
  std::vector<int> species_lower;  // default truncation per species
  std::vector<int> species_upper;
  double horizon = 5.0;
  double dt = 0.01;
  std::uint64_t path_seed = 1;  // seed of the default generated observation
};

/// bistable-gene | linear-cascade (needs d >= 2) | birth-death | toy-chain |
/// toy-three. Throws UnknownModel or BadParam.
ModelSpec builtin_model(const std::string& name, int d = 5);
std::vector<std::string> builtin_names();

/// Samples Z(0) from the initial law, simulates the full network on
/// [0, horizon] and keeps the observed part. The hidden trajectory is
/// returned through `truth` when non-null.
ObservedPath generate_path(const ModelSpec& spec, std::uint64_t seed,
                           Trajectory* truth = nullptr);

/// Default box over the hidden vector [X'; X''] of the current partition.
void hidden_box(const ModelSpec& spec, std::vector<int>& lower, std::vector<int>& upper);

/// Replaces the partition; the remaining species become nuisance.
void repartition(ModelSpec& spec, const std::vector<std::string>& interest,
                 const std::vector<std::string>& observed);

}  // namespace srnfilter
