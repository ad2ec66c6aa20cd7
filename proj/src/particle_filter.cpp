#include "srnfilter/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "srnfilter/errors.hpp"
#include "srnfilter/parallel.hpp"

namespace srnfilter {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kParticleStream = 0x5046;  // substream tag for slots
constexpr std::size_t kMinParallel = 256;

Ensemble empty_ensemble(std::size_t M, std::uint64_t seed) {
  if (M == 0) throw Error(ErrorKind::BadParam, "particle count M must be >= 1");
  Ensemble ens;
  ens.seed = seed;
  ens.particles.resize(M);
  ens.engines.reserve(M);
  for (std::size_t i = 0; i < M; ++i)
    ens.engines.push_back(make_engine(seed, i, kParticleStream));
  ens.master = make_engine(seed, std::numeric_limits<std::uint64_t>::max(),
                           kParticleStream);
  return ens;
}

std::size_t workers_for(std::size_t M, std::size_t workers) {
  return M < kMinParallel ? 1 : workers;
}

}  // namespace

Ensemble pf_init(const InitialDistribution& mu, const StatePartition& partition,
                 std::size_t M, std::uint64_t seed) {
  Ensemble ens = empty_ensemble(M, seed);
  const auto hidden = partition.hidden();
  for (std::size_t i = 0; i < M; ++i) {
    Engine& rng = ens.engines[i];
    State& v = ens.particles[i].v;
    v.resize(hidden.size());
    for (std::size_t h = 0; h < hidden.size(); ++h) {
      const SpeciesMarginal& m = mu.marginals[hidden[h]];
      if (m.is_deterministic()) {
        v[h] = m.support[0];
        continue;
      }
      double u = uniform_open(rng);
      std::size_t k = 0;
      while (k + 1 < m.probs.size() && u > m.probs[k]) u -= m.probs[k++];
      v[h] = m.support[k];
    }
  }
  return ens;
}

Ensemble pf_init(const Pmf& pi0, const TruncatedSpace& space, std::size_t M,
                 std::uint64_t seed) {
  if (pi0.probs.size() != space.size())
    throw Error(ErrorKind::BadParam, "initial PMF does not match the box");
  Ensemble ens = empty_ensemble(M, seed);
  ens.time = pi0.time;
  std::vector<double> cdf(pi0.probs.size());
  std::partial_sum(pi0.probs.begin(), pi0.probs.end(), cdf.begin());
  const double total = cdf.empty() ? 0.0 : cdf.back();
  if (!(total > 0.0)) throw Error(ErrorKind::ZeroMass, "initial PMF has no mass");
  for (std::size_t i = 0; i < M; ++i) {
    const double u = uniform_open(ens.engines[i]) * total;
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    ens.particles[i].v = space.state(static_cast<std::size_t>(it - cdf.begin()));
  }
  return ens;
}

void pf_propagate(Ensemble& ens, const ReactionSystem& system,
                  const StatePartition& partition, std::span<const int> y,
                  std::size_t segment, double t_end, const PfOptions& options) {
  if (system.time_dependent())
    throw Error(ErrorKind::BadParam, "particle propagation needs a time-homogeneous system");
  if (t_end < ens.time)
    throw Error(ErrorKind::BadParam, "cannot propagate an ensemble backwards in time");
  const ReactionClasses classes = classify_reactions(system, partition);
  const auto hidden = partition.hidden();
  std::vector<std::vector<int>> hidden_net(system.reaction_count());
  for (std::size_t j = 0; j < system.reaction_count(); ++j)
    hidden_net[j] = slice(system.net_change(j), hidden);
  const double t0 = ens.time;

  parallel_for(ens.size(), workers_for(ens.size(), options.workers),
               [&](std::size_t lo, std::size_t hi) {
    State z(system.species_count());
    std::vector<double> a_u(classes.unobservable.size());
    for (std::size_t i = lo; i < hi; ++i) {
      Particle& p = ens.particles[i];
      if (p.log_w == kNegInf) continue;
      Engine& rng = ens.engines[i];
      assemble_state(partition, p.v, y, z);
      double t = t0;
      std::size_t fired = 0;
      while (true) {
        double total_u = 0.0, total_o = 0.0;
        for (std::size_t k = 0; k < a_u.size(); ++k) {
          a_u[k] = system.propensity(classes.unobservable[k], z, {segment, t});
          total_u += a_u[k];
        }
        for (std::size_t j : classes.observable)
          total_o += system.propensity(j, z, {segment, t});
        const double tau =
            total_u > 0.0 ? -std::log(uniform_open(rng)) / total_u
                          : std::numeric_limits<double>::infinity();
        if (t + tau >= t_end) {
          p.log_w -= total_o * (t_end - t);
          break;
        }
        p.log_w -= total_o * tau;
        t += tau;
        double u = uniform_open(rng) * total_u;
        std::size_t k = 0;
        while (k + 1 < a_u.size() && (u > a_u[k] || a_u[k] == 0.0)) u -= a_u[k++];
        const std::size_t j = classes.unobservable[k];
        const auto nu = system.net_change(j);
        for (std::size_t s = 0; s < z.size(); ++s) z[s] += nu[s];
        const auto& nh = hidden_net[j];
        for (std::size_t h = 0; h < nh.size(); ++h) p.v[h] += nh[h];
        if (++fired > options.ssa.max_jumps)
          throw Error(ErrorKind::ExplosionGuard,
                      "particle exceeded the jump cap during propagation");
      }
    }
  });
  ens.time = t_end;
}

void pf_jump(Ensemble& ens, const ReactionSystem& system,
             const StatePartition& partition, std::span<const std::size_t> matching,
             std::span<const int> y_minus, TimePoint at) {
  if (matching.empty())
    throw Error(ErrorKind::EmptyMatch, "jump update needs at least one matching reaction");
  const auto hidden = partition.hidden();
  State z(system.species_count());
  bool any = false;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    Particle& p = ens.particles[i];
    if (p.log_w == kNegInf) continue;
    std::size_t pick = 0;
    if (matching.size() > 1) {
      pick = static_cast<std::size_t>(uniform_open(ens.engines[i]) *
                                      static_cast<double>(matching.size()));
      pick = std::min(pick, matching.size() - 1);
    }
    const std::size_t j = matching[pick];
    assemble_state(partition, p.v, y_minus, z);
    const double a = system.propensity(j, z, at);
    if (!(a > 0.0)) {
      p.log_w = kNegInf;
      continue;
    }
    p.log_w += std::log(a);
    const auto nu = system.net_change(j);
    for (std::size_t h = 0; h < hidden.size(); ++h) p.v[h] += nu[hidden[h]];
    any = true;
  }
  ens.time = at.time;
  if (!any)
    throw Error(ErrorKind::Degenerate,
                "every particle was killed by the jump at t = " + std::to_string(at.time));
}

double relative_weights(const Ensemble& ens, std::vector<double>& out) {
  double top = kNegInf;
  for (const auto& p : ens.particles) top = std::max(top, p.log_w);
  out.resize(ens.size());
  if (top == kNegInf) {
    std::fill(out.begin(), out.end(), 0.0);
    return top;
  }
  for (std::size_t i = 0; i < ens.size(); ++i)
    out[i] = std::exp(ens.particles[i].log_w - top);
  return top;
}

void pf_resample(Ensemble& ens, Resampling scheme) {
  std::vector<double> w;
  if (relative_weights(ens, w) == kNegInf)
    throw Error(ErrorKind::Degenerate, "cannot resample an ensemble with no live particle");
  const std::size_t M = ens.size();
  std::vector<double> cdf(M);
  std::partial_sum(w.begin(), w.end(), cdf.begin());
  const double total = cdf.back();
  std::vector<std::size_t> parent(M);
  if (scheme == Resampling::Systematic) {
    const double u0 = uniform_open(ens.master);
    std::size_t k = 0;
    for (std::size_t i = 0; i < M; ++i) {
      const double u = (u0 + static_cast<double>(i)) / static_cast<double>(M) * total;
      while (k + 1 < M && cdf[k] < u) ++k;
      parent[i] = k;
    }
  } else {
    for (std::size_t i = 0; i < M; ++i) {
      const double u = uniform_open(ens.master) * total;
      auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
      if (it == cdf.end()) --it;
      std::size_t k = static_cast<std::size_t>(it - cdf.begin());
      while (w[k] == 0.0 && k + 1 < M) ++k;  // never land on a dead slot
      parent[i] = k;
    }
  }
  std::vector<Particle> next(M);
  for (std::size_t i = 0; i < M; ++i) {
    next[i].v = ens.particles[parent[i]].v;
    next[i].log_w = 0.0;
  }
  ens.particles = std::move(next);
}

double pf_ess(const Ensemble& ens) {
  std::vector<double> w;
  if (relative_weights(ens, w) == kNegInf) return 0.0;
  double s = 0.0, s2 = 0.0;
  for (double v : w) {
    s += v;
    s2 += v * v;
  }
  return s * s / s2;
}

ParticleEstimate pf_estimate(const Ensemble& ens) {
  ParticleEstimate est;
  est.M = ens.size();
  std::vector<double> w;
  const double top = relative_weights(ens, w);
  if (top == kNegInf) return est;
  est.log_scale = top;
  for (std::size_t i = 0; i < ens.size(); ++i)
    if (w[i] > 0.0) est.weights[ens.particles[i].v] += w[i];
  return est;
}

Pmf pf_marginal(const Ensemble& ens, std::span<const std::size_t> coords,
                const TruncatedSpace& space, double* outside) {
  std::vector<double> w;
  relative_weights(ens, w);
  Pmf pmf;
  pmf.time = ens.time;
  pmf.probs.assign(space.size(), 0.0);
  State key(coords.size());
  double total = 0.0, out = 0.0;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    if (w[i] == 0.0) continue;
    total += w[i];
    for (std::size_t c = 0; c < coords.size(); ++c)
      key[c] = ens.particles[i].v[coords[c]];
    const std::size_t idx = space.index_of(key);
    if (idx == TruncatedSpace::npos) out += w[i];
    else pmf.probs[idx] += w[i];
  }
  const double inside = total - out;
  if (!(inside > 0.0))
    throw Error(ErrorKind::ZeroMass, "no weighted particle lies inside the box");
  for (double& p : pmf.probs) p /= inside;
  if (outside) *outside = out / total;
  return pmf;
}

double weighted_mean(const Ensemble& ens,
                     const std::function<double(std::span<const int>)>& f) {
  std::vector<double> w;
  if (relative_weights(ens, w) == kNegInf)
    throw Error(ErrorKind::Degenerate, "weighted mean of an ensemble with no live particle");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    if (w[i] == 0.0) continue;
    num += w[i] * f(ens.particles[i].v);
    den += w[i];
  }
  return num / den;
}

}  // namespace srnfilter
