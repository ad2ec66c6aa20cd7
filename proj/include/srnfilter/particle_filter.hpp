#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "srnfilter/ffsp.hpp"
#include "srnfilter/model.hpp"
#include "srnfilter/rng.hpp"
#include "srnfilter/space.hpp"
#include "srnfilter/ssa.hpp"

namespace srnfilter {

/// v is laid out over the hidden species [X'; X''] of the partition in use.
struct Particle {
  State v;
  double log_w = 0.0;
};

/// Weighted ensemble. Slot i owns engines[i]; resampling copies states into
/// slots but never moves engines, so results do not depend on how slots are
/// split across workers.
struct Ensemble {
  std::vector<Particle> particles;
  double time = 0.0;
  std::uint64_t seed = 0;
  std::vector<Engine> engines;
  Engine master;

  std::size_t size() const { return particles.size(); }
};

enum class Resampling { Multinomial, Systematic };

struct PfOptions {
  std::size_t workers = 1;
  SsaOptions ssa;
};

/// i.i.d. draws of the hidden state from a product initial law (independence
/// makes conditioning on Y(0) a no-op for the hidden marginals).
Ensemble pf_init(const InitialDistribution& mu, const StatePartition& partition,
                 std::size_t M, std::uint64_t seed);
/// i.i.d. draws from a Pmf over `space`.
Ensemble pf_init(const Pmf& pi0, const TruncatedSpace& space, std::size_t M,
                 std::uint64_t seed);

/// Moves every live particle from ens.time to t_end with the unobservable
/// reactions only (y frozen) and subtracts the integrated observable
/// propensity from its log-weight.
void pf_propagate(Ensemble& ens, const ReactionSystem& system,
                  const StatePartition& partition, std::span<const int> y,
                  std::size_t segment, double t_end, const PfOptions& options = {});

/// Jump update: a uniformly drawn l in `matching` per particle multiplies its
/// weight by a_l(v, y_minus) and shifts v by the hidden part of nu_l. Throws
/// Degenerate when no particle survives.
void pf_jump(Ensemble& ens, const ReactionSystem& system,
             const StatePartition& partition, std::span<const std::size_t> matching,
             std::span<const int> y_minus, TimePoint at);

/// Resamples proportionally to the weights and resets every log-weight to 0.
void pf_resample(Ensemble& ens, Resampling scheme = Resampling::Multinomial);

/// (sum w)^2 / sum w^2.
double pf_ess(const Ensemble& ens);

/// Sparse weighted histogram. Represented mass of state x is
/// weights[x] * exp(log_scale) / M.
struct ParticleEstimate {
  std::map<State, double> weights;
  double log_scale = 0.0;
  std::size_t M = 0;
};

ParticleEstimate pf_estimate(const Ensemble& ens);

/// Histogram of the coordinates `coords` of v, normalized over `space`; the
/// normalized mass of particles that land outside it is returned in
/// `outside` when non-null.
Pmf pf_marginal(const Ensemble& ens, std::span<const std::size_t> coords,
                const TruncatedSpace& space, double* outside = nullptr);

/// sum w f(v) / sum w.
double weighted_mean(const Ensemble& ens,
                     const std::function<double(std::span<const int>)>& f);

/// Weights exp(log_w - max log_w); returns max log_w.
double relative_weights(const Ensemble& ens, std::vector<double>& out);

}  // namespace srnfilter
