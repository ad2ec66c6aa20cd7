#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "srnfilter/model.hpp"
#include "srnfilter/space.hpp"
#include "srnfilter/trajectory.hpp"

namespace srnfilter {

/// Weights proportional to a PMF over a TruncatedSpace. The represented
/// values are weights[x] * exp(log_norm).
struct UnnormalizedPmf {
  std::vector<double> weights;
  double log_norm = 0.0;
  double time = 0.0;

  /// log of the total represented mass.
  double log_mass() const;
};

struct Pmf {
  std::vector<double> probs;
  double time = 0.0;
};

/// pi = rho / sum(rho); round-off negatives are clamped to zero first.
/// Throws ZeroMass when nothing positive remains.
Pmf normalize(const UnnormalizedPmf& rho);

/// Conditional initial law P(X(0) = x | Y(0) = y0) over the hidden box for a
/// product-form initial distribution. Throws InconsistentObservation when y0
/// has zero probability.
UnnormalizedPmf initial_filter_pmf(const InitialDistribution& mu,
                                   const StatePartition& partition,
                                   const TruncatedSpace& space,
                                   std::span<const int> y0);

/// Per-reaction propensities over the box at a fixed observed value.
struct GeneratorRates {
  std::vector<std::vector<double>> per_reaction;  // [j][x]
  std::vector<double> total;                      // sum_j a_j(x, y)
  std::vector<double> leak;                       // U-outflow leaving the box
};

/// Truncated right-hand side of the unnormalized filtering equation,
///   d rho(x)/dt = sum_{j in U} a_j(x - nu_j, y) rho(x - nu_j) - sum_j a_j(x, y) rho(x),
/// plus the jump map. With no observed species U is every reaction and this is
/// the truncated CME.
class FilterGenerator {
 public:
  FilterGenerator(const ReactionSystem& system, StatePartition partition,
                  TruncatedSpace space, std::size_t workers = 1);

  const ReactionSystem& system() const { return *system_; }
  const StatePartition& partition() const { return partition_; }
  const TruncatedSpace& space() const { return space_; }
  const ReactionClasses& classes() const { return classes_; }

  void evaluate(std::span<const int> y, TimePoint at, GeneratorRates& out) const;
  void rhs(const GeneratorRates& rates, std::span<const double> rho,
           std::span<double> out) const;
  double leak_rate(const GeneratorRates& rates, std::span<const double> rho) const;

  /// rho(x, t_k) = 1/|O_k| sum_{j in O_k} a_j(x - nu_j, y_prev) rho(x - nu_j, t_k^-)
  std::vector<double> jump(std::span<const std::size_t> matching,
                           std::span<const int> y_prev, TimePoint at,
                           std::span<const double> rho) const;

 private:
  const ReactionSystem* system_;
  StatePartition partition_;
  TruncatedSpace space_;
  ReactionClasses classes_;
  std::vector<std::vector<std::size_t>> source_;  // [j][x] index of x - nu_j
  std::vector<std::vector<char>> exits_;          // [j][x] x + nu_j outside box
  std::size_t workers_;
};

struct FfspOptions {
  std::size_t substeps = 1;         // RK4 steps per grid step
  double negative_tolerance = 1e-8;  // relative to the total mass
  std::size_t workers = 1;
};

/// Stepwise FFSP integrator over a TimeGrid: advance within a segment, then
/// apply the jump at its end. Weights are rebased into log_norm whenever the
/// max weight leaves [1e-100, 1e100] and at every jump.
class FfspSolver {
 public:
  using StepCallback = std::function<void(std::size_t segment, const UnnormalizedPmf&)>;

  FfspSolver(const FilterGenerator& generator, const TimeGrid& grid,
             const ObservedPath& path, UnnormalizedPmf initial,
             FfspOptions options = {});

  /// Integrates segment k from its start to its end (RK4, fixed step),
  /// invoking `on_step` after every step.
  void advance_segment(std::size_t k, const StepCallback& on_step = {});
  /// Jump update at the end of segment k (observed jump k+1).
  void apply_jump(std::size_t k);

  const UnnormalizedPmf& current() const { return rho_; }
  double leak() const { return leak_; }

 private:
  void rebase_if_needed();

  const FilterGenerator* gen_;
  const TimeGrid* grid_;
  const ObservedPath* path_;
  UnnormalizedPmf rho_;
  FfspOptions options_;
  double leak_ = 0.0;
};

/// Solves the inter-jump ODE on one segment; returns the snapshot after each
/// step (the last one is rho at the segment end, before any jump).
std::vector<UnnormalizedPmf> filter_interjump(const FilterGenerator& generator,
                                              const UnnormalizedPmf& rho,
                                              std::span<const int> y,
                                              const GridSegment& segment,
                                              std::size_t segment_index,
                                              const FfspOptions& options = {});

/// Jump update with the normalization rebase applied; throws ZeroMass when
/// the box excludes every state consistent with the jump.
UnnormalizedPmf filter_jump(const FilterGenerator& generator,
                            const UnnormalizedPmf& rho_minus,
                            std::span<const std::size_t> matching,
                            std::span<const int> y_prev, TimePoint at);

struct FfspSnapshot {
  std::size_t segment = 0;
  UnnormalizedPmf rho;
  double leak = 0.0;
};

/// Full FFSP over an observed path. Snapshots: t = 0, after every step, and
/// after every jump (so each t_k appears twice: segment k-1 then segment k).
/// The sink form avoids storing large state spaces.
void ffsp_filter(const FilterGenerator& generator, const ObservedPath& path,
                 const TimeGrid& grid, const UnnormalizedPmf& pi0,
                 const std::function<void(const FfspSnapshot&)>& sink,
                 const FfspOptions& options = {});
std::vector<FfspSnapshot> ffsp_filter(const FilterGenerator& generator,
                                      const ObservedPath& path,
                                      const TimeGrid& grid,
                                      const UnnormalizedPmf& pi0,
                                      const FfspOptions& options = {});

struct CmeSolution {
  std::vector<double> times;
  std::vector<std::vector<double>> p;  // unnormalized: 1 - sum is the leak

  double leaked(std::size_t i) const;
};

/// Truncated CME over a box covering every species of `system`, RK4 with
/// step dt/substeps; records t = 0 and every step. Throws StepUnstable.
CmeSolution solve_cme(const ReactionSystem& system, const TruncatedSpace& space,
                      std::span<const double> p0, double horizon, double dt,
                      std::size_t substeps = 1);

}  // namespace srnfilter
