#include "srnfilter/builtin.hpp"

#include <algorithm>
#include <map>

#include "srnfilter/errors.hpp"
#include "srnfilter/ssa.hpp"

namespace srnfilter {
namespace {

using Counts = std::map<std::string, int>;

class NetworkBuilder {
 public:
  explicit NetworkBuilder(std::vector<std::string> species) : species_(std::move(species)) {}

  NetworkBuilder& add(const Counts& consumed, const Counts& produced, double rate) {
    reactions_.push_back(make_reaction(dense(consumed), dense(produced), rate));
    return *this;
  }

  SrnModel build() const { return SrnModel::checked(species_, reactions_); }

 private:
  std::vector<int> dense(const Counts& counts) const {
    std::vector<int> v(species_.size(), 0);
    for (const auto& [name, n] : counts) {
      const auto it = std::find(species_.begin(), species_.end(), name);
      v[static_cast<std::size_t>(it - species_.begin())] = n;
    }
    return v;
  }

  std::vector<std::string> species_;
  std::vector<Reaction> reactions_;
};

void set_partition(ModelSpec& spec, const std::vector<std::string>& interest,
                   const std::vector<std::string>& observed) {
  spec.partition = StatePartition::from_names(spec.model, interest, observed);
}

ModelSpec linear_cascade(int d) {
  if (d < 2)
    throw Error(ErrorKind::BadParam, "linear-cascade needs d >= 2 (got " + std::to_string(d) + ")");
  std::vector<std::string> names;
  for (int i = 1; i <= d; ++i) names.push_back("S" + std::to_string(i));
  NetworkBuilder b(names);
  b.add({}, {{names[0], 1}}, 10.0);
  for (int i = 1; i < d; ++i) b.add({{names[i - 1], 1}}, {{names[i], 1}}, 5.0);
  for (int i = 0; i < d; ++i) b.add({{names[i], 1}}, {}, 1.0);
  ModelSpec spec;
  spec.name = "linear-cascade";
  spec.model = b.build();
  set_partition(spec, {names.front()}, {names.back()});
  spec.initial = InitialDistribution::deterministic(State(d, 0));
  spec.species_lower.assign(d, 0);
  spec.species_upper.assign(d, 10);
  spec.horizon = 5.0;
  // The box corner has total rate 10 + 60 (d - 1) + y; RK4 needs rate * dt < 2.78.
  spec.dt = d <= 5 ? 0.01 : 0.005;
  spec.path_seed = 2024;
  return spec;
}

ModelSpec bistable_gene() {
  const std::vector<std::string> names = {"G1",    "G1a",   "G2",       "G2a",
                                          "mRNA1", "mRNA2", "protein1", "protein2"};
  NetworkBuilder b(names);
  auto gene = [](int i) { return "G" + std::to_string(i); };
  auto active = [](int i) { return "G" + std::to_string(i) + "a"; };
  auto mrna = [](int i) { return "mRNA" + std::to_string(i); };
  auto protein = [](int i) { return "protein" + std::to_string(i); };
  for (int i = 1; i <= 2; ++i) b.add({{mrna(i), 1}}, {}, 0.1);
  for (int i = 1; i <= 2; ++i) b.add({}, {{mrna(i), 1}}, 0.05);
  for (int i = 1; i <= 2; ++i) b.add({{mrna(i), 1}}, {{mrna(i), 1}, {protein(i), 1}}, 5.0);
  for (int i = 1; i <= 2; ++i) b.add({{protein(i), 1}}, {}, 0.2);
  for (int i = 1; i <= 2; ++i) {
    const int j = 3 - i;
    b.add({{active(j), 1}, {protein(i), 1}}, {{gene(j), 1}, {protein(i), 1}}, 0.1);
  }
  for (int i = 1; i <= 2; ++i) b.add({{active(i), 1}}, {{active(i), 1}, {mrna(i), 1}}, 1.0);
  for (int i = 1; i <= 2; ++i) b.add({{active(i), 1}}, {{gene(i), 1}}, 0.03);
  for (int i = 1; i <= 2; ++i) b.add({{gene(i), 1}}, {{active(i), 1}}, 1e-6);
  ModelSpec spec;
  spec.name = "bistable-gene";
  spec.model = b.build();
  set_partition(spec, {"mRNA2"}, {"protein1", "protein2"});
  spec.initial = InitialDistribution::deterministic({0, 1, 0, 1, 0, 0, 0, 0});
  spec.species_lower.assign(names.size(), 0);
  spec.species_upper = {1, 1, 1, 1, 30, 30, 1000, 1000};
  spec.horizon = 5.0;
  spec.dt = 0.005;
  spec.path_seed = 11;
  return spec;
}

ModelSpec birth_death() {
  NetworkBuilder b({"S"});
  b.add({}, {{"S", 1}}, 10.0).add({{"S", 1}}, {}, 1.0);
  ModelSpec spec;
  spec.name = "birth-death";
  spec.model = b.build();
  set_partition(spec, {"S"}, {});
  spec.initial = InitialDistribution::deterministic({0});
  spec.species_lower = {0};
  spec.species_upper = {60};
  spec.horizon = 1.0;
  spec.dt = 0.01;
  return spec;
}

ModelSpec toy_chain() {
  NetworkBuilder b({"A", "B"});
  b.add({}, {{"A", 1}}, 2.0).add({{"A", 1}}, {{"B", 1}}, 1.0).add({{"B", 1}}, {}, 0.5);
  ModelSpec spec;
  spec.name = "toy-chain";
  spec.model = b.build();
  set_partition(spec, {"A"}, {"B"});
  spec.initial = InitialDistribution::deterministic({0, 0});
  spec.species_lower = {0, 0};
  spec.species_upper = {25, 25};
  spec.horizon = 2.0;
  spec.dt = 0.01;
  spec.path_seed = 5;
  return spec;
}

ModelSpec toy_three() {
  NetworkBuilder b({"A", "B", "C"});
  b.add({}, {{"B", 1}}, 3.0)
      .add({{"B", 1}}, {}, 1.0)
      .add({{"B", 1}}, {{"B", 1}, {"A", 1}}, 1.0)
      .add({{"A", 1}}, {}, 1.0)
      .add({{"A", 1}}, {{"A", 1}, {"C", 1}}, 0.5)
      .add({{"B", 1}}, {{"B", 1}, {"C", 1}}, 0.5)
      .add({{"C", 1}}, {}, 1.0);
  ModelSpec spec;
  spec.name = "toy-three";
  spec.model = b.build();
  set_partition(spec, {"A"}, {"C"});
  spec.initial.marginals = {SpeciesMarginal::deterministic(0),
                            SpeciesMarginal{{1, 2, 3}, {0.3, 0.4, 0.3}},
                            SpeciesMarginal::deterministic(0)};
  spec.species_lower = {0, 0, 0};
  spec.species_upper = {25, 25, 40};
  spec.horizon = 3.0;
  spec.dt = 0.01;
  spec.path_seed = 3;
  return spec;
}

}  // namespace

ModelSpec builtin_model(const std::string& name, int d) {
  if (name == "linear-cascade") return linear_cascade(d);
  if (name == "bistable-gene") return bistable_gene();
  if (name == "birth-death") return birth_death();
  if (name == "toy-chain") return toy_chain();
  if (name == "toy-three") return toy_three();
  throw Error(ErrorKind::UnknownModel, "unknown builtin model '" + name + "'");
}

std::vector<std::string> builtin_names() {
  return {"bistable-gene", "linear-cascade", "birth-death", "toy-chain", "toy-three"};
}

ObservedPath generate_path(const ModelSpec& spec, std::uint64_t seed, Trajectory* truth) {
  const State z0 = sample_initial(spec.initial, seed);
  Trajectory traj = ssa_simulate(spec.model, z0, spec.horizon, seed);
  ObservedPath path = extract_observation(traj, spec.partition);
  if (truth) *truth = std::move(traj);
  return path;
}

void hidden_box(const ModelSpec& spec, std::vector<int>& lower, std::vector<int>& upper) {
  lower.clear();
  upper.clear();
  for (std::size_t i : spec.partition.hidden()) {
    lower.push_back(spec.species_lower[i]);
    upper.push_back(spec.species_upper[i]);
  }
}

void repartition(ModelSpec& spec, const std::vector<std::string>& interest,
                 const std::vector<std::string>& observed) {
  set_partition(spec, interest, observed);
}

}  // namespace srnfilter
