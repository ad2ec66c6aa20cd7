#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "srnfilter/ffsp.hpp"
#include "srnfilter/model.hpp"
#include "srnfilter/particle_filter.hpp"
#include "srnfilter/projection.hpp"
#include "srnfilter/space.hpp"
#include "srnfilter/trajectory.hpp"

namespace srnfilter {

enum class Method { FullFfsp, ParticleFilter, Ump, Cmp };

/// Accepts ffsp | pf | ump | cmp.
Method parse_method(const std::string& name);
const char* to_string(Method method) noexcept;

struct FilterConfig {
  Method method = Method::Cmp;
  std::size_t M = 1000;
  double dt = 0.01;
  /// Bounds over the hidden vector [X'; X'']; the projection methods use the
  /// X' part only.
  std::vector<int> box_lower;
  std::vector<int> box_upper;
  std::uint64_t seed = 1;
  Resampling resampling = Resampling::Multinomial;
  Interpolation interpolation = Interpolation::Constant;
  /// Extra resampling between jumps when ESS < ess_threshold * M (0 = off).
  double ess_threshold = 0.0;
  double weight_share = 1e-3;
  std::size_t min_support = 10;
  std::size_t workers = 1;
  std::size_t size_cap = kDefaultSizeCap;

  /// Throws BadParam on M = 0, dt <= 0 or an empty/misshapen box.
  void check(std::size_t hidden_dims) const;
  TruncatedSpace hidden_box() const;
  TruncatedSpace interest_box(std::size_t interest_dims) const;
};

struct FilterDiagnostics {
  double leak = 0.0;                  // mass lost through the box, relative
  double reliable_fraction = 1.0;     // table cells with a raw estimate
  double extrapolated_fraction = 0.0;
  std::size_t carried_slices = 0;
  bool table_gap = false;             // extrapolation filled > 50% of cells
  double min_ess = 0.0;
  double wall_seconds = 0.0;
  std::size_t state_count = 0;        // ODE size
  std::size_t table_count = 0;
};

/// Conditional PMF series over the X' box. Emitted at t = 0, after every
/// grid step and after every jump (so jump times appear twice).
struct FilterResult {
  Method method = Method::Cmp;
  TruncatedSpace space;
  std::vector<std::string> coordinate_names;
  std::vector<double> times;
  std::vector<std::size_t> segments;
  std::vector<std::vector<double>> pmfs;
  std::vector<std::vector<double>> mean;  // [time][coordinate]
  std::vector<std::vector<double>> var;
  std::vector<double> ess;   // NaN where no ensemble is involved
  std::vector<double> leak;  // cumulative
  FilterDiagnostics diagnostics;
  std::vector<TablePtr> tables;
  /// CMP only: raw particle estimate of the final marginal from the same
  /// particles that produced the tables.
  std::optional<Pmf> particle_final;

  const std::vector<double>& final_pmf() const { return pmfs.back(); }
};

FilterResult run_ump(const SrnModel& model, const StatePartition& partition,
                     const InitialDistribution& mu, const ObservedPath& path,
                     const FilterConfig& cfg);
FilterResult run_cmp(const SrnModel& model, const StatePartition& partition,
                     const InitialDistribution& mu, const ObservedPath& path,
                     const FilterConfig& cfg);
/// Projected filter driven by externally supplied (e.g. exact) tables.
FilterResult run_projected(const SrnModel& model, const StatePartition& partition,
                           const InitialDistribution& mu, const ObservedPath& path,
                           const FilterConfig& cfg, std::vector<TablePtr> tables);
/// Full FFSP on the hidden box, or the plain particle filter, marginalized
/// to X'.
FilterResult run_reference(const SrnModel& model, const StatePartition& partition,
                           const InitialDistribution& mu, const ObservedPath& path,
                           const FilterConfig& cfg);
/// Dispatch on cfg.method.
FilterResult run_filter(const SrnModel& model, const StatePartition& partition,
                        const InitialDistribution& mu, const ObservedPath& path,
                        const FilterConfig& cfg);

/// Sums weights over the X'' coordinates of a hidden box laid out as
/// [X'; X''] (unnormalized).
std::vector<double> marginalize(std::span<const double> weights,
                                const TruncatedSpace& hidden_box,
                                std::size_t interest_dims);
/// Normalized marginal of a Pmf over the hidden box.
Pmf marginalize(const Pmf& pmf, const TruncatedSpace& hidden_box,
                std::size_t interest_dims);

/// Exact conditional projected propensities on the table grid of `path`
/// (every half step), from a full FFSP run with two RK4 steps per grid step.
std::vector<TablePtr> exact_filter_tables(const SrnModel& model,
                                          const StatePartition& partition,
                                          const InitialDistribution& mu,
                                          const ObservedPath& path,
                                          const FilterConfig& cfg);

/// Product law of the projected species [X'; Y].
InitialDistribution projected_initial(const InitialDistribution& mu,
                                      const StatePartition& partition);

/// P(X'_coord >= threshold) under a Pmf over `space`.
double tail_probability(std::span<const double> pmf, const TruncatedSpace& space,
                        std::size_t coord, int threshold);

}  // namespace srnfilter
