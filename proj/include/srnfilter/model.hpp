#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace srnfilter {

/// Copy numbers, one entry per species of the owning space.
using State = std::vector<int>;

/// Time together with the inter-jump segment it belongs to. At an observed
/// jump time t_k the pre-jump value lives in segment k-1 and the post-jump
/// value in segment k, so time alone is ambiguous for conditional quantities.
struct TimePoint {
  std::size_t segment = 0;
  double time = 0.0;
};

/// Anything the solvers can integrate or simulate: a fixed set of reactions
/// with net-change vectors and a (possibly time-dependent) propensity.
class ReactionSystem {
 public:
  virtual ~ReactionSystem() = default;

  virtual std::size_t species_count() const = 0;
  virtual std::size_t reaction_count() const = 0;
  virtual const std::vector<std::string>& species_names() const = 0;
  virtual std::span<const int> net_change(std::size_t j) const = 0;
  virtual bool time_dependent() const = 0;
  virtual double propensity(std::size_t j, std::span<const int> z,
                            TimePoint at) const = 0;
};

struct Reaction {
  std::vector<int> consumed;  // nu^-
  std::vector<int> produced;  // nu^+
  std::vector<int> net;       // nu = nu^+ - nu^-
  double rate = 0.0;          // theta_j
};

Reaction make_reaction(std::vector<int> consumed, std::vector<int> produced,
                       double rate);

/// theta * prod_i z_i (z_i - 1) ... (z_i - consumed_i + 1); zero when any
/// z_i < consumed_i.
double mass_action(double rate, std::span<const int> consumed,
                   std::span<const int> z);

/// Mass-action reaction network. The constructor stores its inputs verbatim so
/// that `validate_model` can report every violation; use `SrnModel::checked`
/// to build-and-validate in one go.
class SrnModel final : public ReactionSystem {
 public:
  SrnModel() = default;
  SrnModel(std::vector<std::string> species, std::vector<Reaction> reactions);

  static SrnModel checked(std::vector<std::string> species,
                          std::vector<Reaction> reactions);

  std::size_t species_count() const override { return species_.size(); }
  std::size_t reaction_count() const override { return reactions_.size(); }
  const std::vector<std::string>& species_names() const override {
    return species_;
  }
  std::span<const int> net_change(std::size_t j) const override {
    return reactions_[j].net;
  }
  bool time_dependent() const override { return false; }
  double propensity(std::size_t j, std::span<const int> z,
                    TimePoint at = {}) const override;

  const std::vector<Reaction>& reactions() const { return reactions_; }
  const Reaction& reaction(std::size_t j) const { return reactions_[j]; }
  std::size_t species_index(const std::string& name) const;

 private:
  std::vector<std::string> species_;
  std::vector<Reaction> reactions_;
};

/// Free-function form of the mass-action propensity of reaction j.
double propensity(const SrnModel& model, std::size_t j, std::span<const int> z);

/// Every invariant violation of the model, empty when well formed.
std::vector<std::string> validate_model(const SrnModel& model);

/// Split of the species into hidden-of-interest X', hidden nuisance X'' and
/// observed Y. Hidden vectors are always laid out as [X'; X''].
struct StatePartition {
  std::vector<std::size_t> interest;
  std::vector<std::size_t> nuisance;
  std::vector<std::size_t> observed;

  std::vector<std::size_t> hidden() const;
  std::size_t hidden_count() const { return interest.size() + nuisance.size(); }

  /// Partition with the given interest/observed species; all remaining
  /// species become nuisance, in model order.
  static StatePartition from_names(const ReactionSystem& system,
                                   const std::vector<std::string>& interest,
                                   const std::vector<std::string>& observed);
};

/// Throws BadParam unless the three index lists partition {0..d-1}.
void check_partition(std::size_t species_count, const StatePartition& partition);

struct ReactionClasses {
  std::vector<std::size_t> observable;    // O
  std::vector<std::size_t> unobservable;  // U
};

ReactionClasses classify_reactions(const ReactionSystem& system,
                                   const StatePartition& partition);

/// Reactions in O whose observed slice equals delta_y. Throws EmptyMatch when
/// no reaction explains the jump.
std::vector<std::size_t> matching_reactions(const ReactionSystem& system,
                                            const StatePartition& partition,
                                            std::span<const int> delta_y);

/// Net change of reaction j restricted to the given coordinates.
std::vector<int> slice(std::span<const int> values,
                       std::span<const std::size_t> idx);

struct ProjectedStoichiometry {
  std::size_t reaction = 0;  // index in the original model
  std::vector<int> net;      // over [X'; Y]
};

/// Projection of every reaction onto X' and Y; reactions whose projected net
/// change vanishes are dropped. Survivors keep the original order.
std::vector<ProjectedStoichiometry> project_stoichiometry(
    const ReactionSystem& system, const StatePartition& partition);

/// One species' initial law: a point mass or a finite categorical.
struct SpeciesMarginal {
  std::vector<int> support;
  std::vector<double> probs;

  static SpeciesMarginal deterministic(int value);
  bool is_deterministic() const { return support.size() == 1; }
  double probability_of(int value) const;
};

/// Product of independent per-species marginals.
struct InitialDistribution {
  std::vector<SpeciesMarginal> marginals;

  static InitialDistribution deterministic(const State& z0);
  std::vector<std::string> violations() const;
};

/// Combines a hidden vector and an observed vector into a full state.
void assemble_state(const StatePartition& partition, std::span<const int> hidden,
                    std::span<const int> observed, std::span<int> out);

}  // namespace srnfilter
