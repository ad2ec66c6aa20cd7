#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "srnfilter/model.hpp"
#include "srnfilter/particle_filter.hpp"
#include "srnfilter/space.hpp"
#include "srnfilter/trajectory.hpp"

namespace srnfilter {

enum class Interpolation { Constant, Linear };

/// Values of one table on the X' box at one time node.
struct TableSlice {
  std::vector<double> value;
  std::vector<char> reliable;
  std::vector<double> support;  // sample count or weight share
  bool filled = false;
  bool carried = false;  // no reliable cell; copied from the previous slice
};

/// Estimated projected propensity of one original reaction on
/// (X' box) x (table nodes of every grid segment). Lookups ignore the observed
/// coordinates: each segment's slices belong to that segment's observed value.
class PropensityTable {
 public:
  PropensityTable(std::size_t reaction, TruncatedSpace box, TimeGrid grid,
                  Interpolation interpolation = Interpolation::Constant);

  std::size_t reaction() const { return reaction_; }
  const TruncatedSpace& box() const { return box_; }
  const TimeGrid& grid() const { return grid_; }
  Interpolation interpolation() const { return interpolation_; }

  TableSlice& slice(std::size_t segment, std::size_t node) { return slices_[segment][node]; }
  const TableSlice& slice(std::size_t segment, std::size_t node) const {
    return slices_[segment][node];
  }

  /// Value at the X' part of the projected state (its first box().dims()
  /// entries). Throws TableGap outside the box or on an unfilled slice.
  double lookup(std::span<const int> zprime, TimePoint at) const;

  /// Share of reliable cells over all filled slices.
  double reliable_fraction() const;
  std::size_t carried_slices() const;

 private:
  std::size_t reaction_;
  TruncatedSpace box_;
  TimeGrid grid_;
  Interpolation interpolation_;
  std::vector<std::vector<TableSlice>> slices_;
};

using TablePtr = std::shared_ptr<PropensityTable>;

/// A reaction needs no estimation when every species it consumes lies in
/// X' or Y: its mass-action propensity is then a function of Z' alone.
bool detect_analytic(const SrnModel& model, const StatePartition& partition,
                     std::size_t j);

/// Original indices of the projected reactions that need a table.
std::vector<std::size_t> table_reactions(const SrnModel& model,
                                         const StatePartition& partition);

/// Affine least-squares model value = c0 + sum_k c_k key_k. Coordinates that
/// are constant over the data are dropped; rank-deficient data falls back to
/// the mean value.
struct AffineFit {
  double intercept = 0.0;
  std::vector<double> slope;  // zero for dropped coordinates

  static AffineFit fit(const std::vector<std::vector<double>>& keys,
                       const std::vector<double>& values);
  double operator()(std::span<const double> key) const;
};

/// Reliable cells keep their raw value; every other cell of the slice gets
/// the affine fit over the reliable cells, clamped at 0. Throws AllUnreliable
/// when the slice has no reliable cell.
void extrapolate_slice(const TruncatedSpace& box, TableSlice& slice);
/// extrapolate_slice over every filled slice.
void extrapolate(PropensityTable& table);

/// Per-cell accumulation for the conditional-mean estimators, keyed by X'
/// (optionally followed by Y).
struct CellStats {
  double weight = 0.0;
  double count = 0.0;
  std::vector<double> sums;  // one per table reaction
};
using CellMap = std::map<State, CellStats>;

struct ReliabilityRule {
  enum class Kind { Count, WeightShare } kind = Kind::Count;
  double threshold = 10.0;
};

/// Turns accumulated cells into the slice of table `r`. When `y` is non-empty
/// the keys are (x', y): the slice is read off at y and the fit runs over
/// the full key. Returns false when no cell is reliable (slice untouched).
bool fill_slice(const CellMap& cells, std::size_t r, const TruncatedSpace& box,
                std::span<const int> y, const ReliabilityRule& rule,
                TableSlice& slice);

struct EstimateOptions {
  std::size_t workers = 1;
  std::size_t min_support = 10;  // UMP reliability
  double weight_share = 1e-3;    // CMP reliability
  Interpolation interpolation = Interpolation::Constant;
  SsaOptions ssa;
};

/// Unconditional projected propensities from M full SSA runs started from mu,
/// keyed by z' = (x', y), on every node of `grid`.
std::vector<TablePtr> ump_estimate(const SrnModel& model,
                                   const StatePartition& partition,
                                   const InitialDistribution& mu,
                                   const ObservedPath& path, const TimeGrid& grid,
                                   const TruncatedSpace& box, std::size_t M,
                                   std::uint64_t seed,
                                   const EstimateOptions& options = {});

/// Fills node `node` of segment `segment` of every table from a weighted
/// ensemble whose particles hold the full hidden state, keyed by x'.
void cmp_estimate(const Ensemble& ens, const SrnModel& model,
                  const StatePartition& partition, std::span<const int> y,
                  std::size_t segment, std::size_t node,
                  const std::vector<TablePtr>& tables,
                  const EstimateOptions& options = {});

/// Fills (segment, node) of every table with exact conditional means of the
/// joint weights over the full hidden box (any positive-mass cell is
/// reliable).
void exact_slice(const SrnModel& model, const StatePartition& partition,
                 const TruncatedSpace& hidden_box, std::span<const double> joint,
                 std::span<const int> y, std::size_t segment, std::size_t node,
                 const std::vector<TablePtr>& tables);

/// Builds an empty table for every reaction that needs one.
std::vector<TablePtr> make_tables(const SrnModel& model,
                                  const StatePartition& partition,
                                  const TruncatedSpace& box, const TimeGrid& grid,
                                  Interpolation interpolation = Interpolation::Constant);

/// Reduced network on [X'; Y]. Analytic reactions keep their mass-action
/// form; the others read their table, and vanish whenever the X'/Y part of
/// their consumption is not available.
class ProjectedModel final : public ReactionSystem {
 public:
  struct Entry {
    std::size_t original = 0;
    std::vector<int> net;
    std::vector<int> consumed;
    double rate = 0.0;
    TablePtr table;  // null for analytic reactions
  };

  ProjectedModel(std::vector<std::string> species, std::vector<Entry> entries);

  std::size_t species_count() const override { return species_.size(); }
  std::size_t reaction_count() const override { return entries_.size(); }
  const std::vector<std::string>& species_names() const override { return species_; }
  std::span<const int> net_change(std::size_t k) const override {
    return entries_[k].net;
  }
  bool time_dependent() const override { return time_dependent_; }
  double propensity(std::size_t k, std::span<const int> z,
                    TimePoint at) const override;

  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<std::string> species_;
  std::vector<Entry> entries_;
  bool time_dependent_ = false;
};

/// Throws MissingTable when a reaction that needs a table has none.
ProjectedModel build_projected_model(const SrnModel& model,
                                     const StatePartition& partition,
                                     const std::vector<TablePtr>& tables);

/// Partition of the projected species [X'; Y]: interest = X', observed = Y.
StatePartition projected_partition(const StatePartition& partition);

}  // namespace srnfilter
