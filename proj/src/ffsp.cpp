#include "srnfilter/ffsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "srnfilter/errors.hpp"
#include "srnfilter/parallel.hpp"

namespace srnfilter {
namespace {

constexpr double kRebaseLow = 1e-100;
constexpr double kRebaseHigh = 1e100;
constexpr std::size_t kParallelThreshold = 1 << 15;

double max_weight(std::span<const double> w) {
  double m = 0.0;
  for (double v : w) m = std::max(m, v);
  return m;
}

}  // namespace

double UnnormalizedPmf::log_mass() const {
  const double s = std::accumulate(weights.begin(), weights.end(), 0.0);
  return std::log(s) + log_norm;
}

Pmf normalize(const UnnormalizedPmf& rho) {
  Pmf out;
  out.time = rho.time;
  out.probs.resize(rho.weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < rho.weights.size(); ++i) {
    out.probs[i] = std::max(0.0, rho.weights[i]);
    sum += out.probs[i];
  }
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw Error(ErrorKind::ZeroMass, "cannot normalize a PMF without positive mass");
  for (double& p : out.probs) p /= sum;
  return out;
}

UnnormalizedPmf initial_filter_pmf(const InitialDistribution& mu,
                                   const StatePartition& partition,
                                   const TruncatedSpace& space,
                                   std::span<const int> y0) {
  if (mu.marginals.size() != partition.hidden_count() + partition.observed.size())
    throw Error(ErrorKind::BadParam, "initial distribution has wrong dimension");
  double py = 1.0;
  for (std::size_t k = 0; k < partition.observed.size(); ++k)
    py *= mu.marginals[partition.observed[k]].probability_of(y0[k]);
  if (!(py > 0.0))
    throw Error(ErrorKind::InconsistentObservation,
                "observed initial value has zero probability under the initial distribution");

  const auto hidden = partition.hidden();
  UnnormalizedPmf rho;
  rho.weights.assign(space.size(), 0.0);
  State x(space.dims());
  for (std::size_t idx = 0; idx < space.size(); ++idx) {
    space.state(idx, x);
    double p = 1.0;
    for (std::size_t h = 0; h < hidden.size() && p > 0.0; ++h)
      p *= mu.marginals[hidden[h]].probability_of(x[h]);
    rho.weights[idx] = p;
  }
  const double sum = std::accumulate(rho.weights.begin(), rho.weights.end(), 0.0);
  if (!(sum > 0.0))
    throw Error(ErrorKind::ZeroMass, "initial distribution puts no mass inside the box");
  for (double& w : rho.weights) w /= sum;
  return rho;
}

FilterGenerator::FilterGenerator(const ReactionSystem& system,
                                 StatePartition partition, TruncatedSpace space,
                                 std::size_t workers)
    : system_(&system),
      partition_(std::move(partition)),
      space_(std::move(space)),
      workers_(workers) {
  check_partition(system.species_count(), partition_);
  if (space_.dims() != partition_.hidden_count())
    throw Error(ErrorKind::BadParam, "box dimension differs from the hidden dimension");
  classes_ = classify_reactions(system, partition_);
  const auto hidden = partition_.hidden();
  const std::size_t J = system.reaction_count();
  const std::size_t N = space_.size();
  source_.assign(J, std::vector<std::size_t>(N, TruncatedSpace::npos));
  exits_.assign(J, std::vector<char>(N, 0));
  State x(space_.dims()), shifted(space_.dims());
  for (std::size_t j = 0; j < J; ++j) {
    const auto nu = slice(system.net_change(j), hidden);
    for (std::size_t idx = 0; idx < N; ++idx) {
      space_.state(idx, x);
      for (std::size_t h = 0; h < x.size(); ++h) shifted[h] = x[h] - nu[h];
      source_[j][idx] = space_.index_of(shifted);
      for (std::size_t h = 0; h < x.size(); ++h) shifted[h] = x[h] + nu[h];
      exits_[j][idx] = space_.contains(shifted) ? 0 : 1;
    }
  }
}

void FilterGenerator::evaluate(std::span<const int> y, TimePoint at,
                               GeneratorRates& out) const {
  const std::size_t J = system_->reaction_count();
  const std::size_t N = space_.size();
  out.per_reaction.resize(J);
  for (auto& r : out.per_reaction) r.resize(N);
  out.total.assign(N, 0.0);
  out.leak.assign(N, 0.0);
  std::vector<char> is_u(J, 0);
  for (std::size_t j : classes_.unobservable) is_u[j] = 1;
  const std::size_t workers = N >= kParallelThreshold ? workers_ : 1;
  parallel_for(N, workers, [&](std::size_t lo, std::size_t hi) {
    State x(space_.dims());
    State z(system_->species_count());
    for (std::size_t idx = lo; idx < hi; ++idx) {
      space_.state(idx, x);
      assemble_state(partition_, x, y, z);
      double total = 0.0, leak = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        const double a = system_->propensity(j, z, at);
        out.per_reaction[j][idx] = a;
        total += a;
        if (is_u[j] && exits_[j][idx]) leak += a;
      }
      out.total[idx] = total;
      out.leak[idx] = leak;
    }
  });
}

void FilterGenerator::rhs(const GeneratorRates& rates, std::span<const double> rho,
                          std::span<double> out) const {
  const std::size_t N = space_.size();
  const std::size_t workers = N >= kParallelThreshold ? workers_ : 1;
  parallel_for(N, workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t x = lo; x < hi; ++x) out[x] = -rates.total[x] * rho[x];
    for (std::size_t j : classes_.unobservable) {
      const auto& src = source_[j];
      const auto& a = rates.per_reaction[j];
      for (std::size_t x = lo; x < hi; ++x) {
        const std::size_t s = src[x];
        if (s != TruncatedSpace::npos) out[x] += a[s] * rho[s];
      }
    }
  });
}

double FilterGenerator::leak_rate(const GeneratorRates& rates,
                                  std::span<const double> rho) const {
  double r = 0.0;
  for (std::size_t x = 0; x < rho.size(); ++x) r += rates.leak[x] * rho[x];
  return r;
}

std::vector<double> FilterGenerator::jump(std::span<const std::size_t> matching,
                                          std::span<const int> y_prev, TimePoint at,
                                          std::span<const double> rho) const {
  const std::size_t N = space_.size();
  std::vector<double> out(N, 0.0);
  State x(space_.dims()), z(system_->species_count());
  const double inv = 1.0 / static_cast<double>(matching.size());
  // a_j(x - nu_j, y_prev) evaluated at the source state.
  for (std::size_t j : matching) {
    const auto& src = source_[j];
    for (std::size_t idx = 0; idx < N; ++idx) {
      const std::size_t s = src[idx];
      if (s == TruncatedSpace::npos || rho[s] == 0.0) continue;
      space_.state(s, x);
      assemble_state(partition_, x, y_prev, z);
      out[idx] += inv * system_->propensity(j, z, at) * rho[s];
    }
  }
  return out;
}

FfspSolver::FfspSolver(const FilterGenerator& generator, const TimeGrid& grid,
                       const ObservedPath& path, UnnormalizedPmf initial,
                       FfspOptions options)
    : gen_(&generator),
      grid_(&grid),
      path_(&path),
      rho_(std::move(initial)),
      options_(options) {
  if (rho_.weights.size() != generator.space().size())
    throw Error(ErrorKind::BadParam, "initial PMF does not match the box");
  if (options_.substeps == 0) options_.substeps = 1;
}

void FfspSolver::rebase_if_needed() {
  const double m = max_weight(rho_.weights);
  if (m > 0.0 && (m < kRebaseLow || m > kRebaseHigh)) {
    for (double& w : rho_.weights) w /= m;
    rho_.log_norm += std::log(m);
  }
}

void FfspSolver::advance_segment(std::size_t k, const StepCallback& on_step) {
  const GridSegment& seg = grid_->segment(k);
  const auto y = path_->value_in_segment(k);
  const std::size_t n = seg.steps * options_.substeps;
  const double h = (seg.end - seg.start) / static_cast<double>(n);
  const std::size_t N = rho_.weights.size();
  const bool timed = gen_->system().time_dependent();

  GeneratorRates r0, rmid, r1;
  if (!timed) gen_->evaluate(y, {k, seg.start}, r0);
  else gen_->evaluate(y, {k, seg.start}, r1);

  std::vector<double> k1(N), k2(N), k3(N), k4(N), tmp(N);
  auto& rho = rho_.weights;
  double t = seg.start;
  for (std::size_t i = 0; i < n; ++i) {
    const double t_end = i + 1 == n ? seg.end : seg.start + h * static_cast<double>(i + 1);
    const double dt = t_end - t;
    const GeneratorRates* a0 = &r0;
    const GeneratorRates* am = &r0;
    const GeneratorRates* a1 = &r0;
    if (timed) {
      std::swap(r0, r1);  // rates at t were computed as the previous t_end
      gen_->evaluate(y, {k, t + 0.5 * dt}, rmid);
      gen_->evaluate(y, {k, t_end}, r1);
      a0 = &r0;
      am = &rmid;
      a1 = &r1;
    }
    const double mass0 = std::accumulate(rho.begin(), rho.end(), 0.0);

    gen_->rhs(*a0, rho, k1);
    for (std::size_t x = 0; x < N; ++x) tmp[x] = rho[x] + 0.5 * dt * k1[x];
    const double l2 = gen_->leak_rate(*am, tmp);
    gen_->rhs(*am, tmp, k2);
    for (std::size_t x = 0; x < N; ++x) tmp[x] = rho[x] + 0.5 * dt * k2[x];
    const double l3 = gen_->leak_rate(*am, tmp);
    gen_->rhs(*am, tmp, k3);
    for (std::size_t x = 0; x < N; ++x) tmp[x] = rho[x] + dt * k3[x];
    const double l4 = gen_->leak_rate(*a1, tmp);
    gen_->rhs(*a1, tmp, k4);
    const double l1 = gen_->leak_rate(*a0, rho);

    double lowest = 0.0;
    for (std::size_t x = 0; x < N; ++x) {
      rho[x] += dt / 6.0 * (k1[x] + 2.0 * k2[x] + 2.0 * k3[x] + k4[x]);
      lowest = std::min(lowest, rho[x]);
    }
    if (mass0 > 0.0) leak_ += dt / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4) / mass0;
    const double mass = std::accumulate(rho.begin(), rho.end(), 0.0);
    if (!std::isfinite(mass) || lowest < -options_.negative_tolerance * mass)
      throw Error(ErrorKind::StepUnstable,
                  "RK4 step produced negative weights at t = " + std::to_string(t_end) +
                      "; reduce dt");
    if (lowest < 0.0)
      for (double& w : rho) w = std::max(w, 0.0);
    t = t_end;
    rho_.time = t;
    rebase_if_needed();
    if (on_step) on_step(k, rho_);
  }
}

void FfspSolver::apply_jump(std::size_t k) {
  const std::size_t jump = k + 1;
  const auto delta = path_->jump_delta(jump);
  const auto matching = matching_reactions(gen_->system(), gen_->partition(), delta);
  const double t = path_->jump_times[k];
  rho_ = filter_jump(*gen_, rho_, matching, path_->value_in_segment(k), {k, t});
}

std::vector<UnnormalizedPmf> filter_interjump(const FilterGenerator& generator,
                                              const UnnormalizedPmf& rho,
                                              std::span<const int> y,
                                              const GridSegment& segment,
                                              std::size_t segment_index,
                                              const FfspOptions& options) {
  // A one-segment grid/path pair carrying y on the requested segment index.
  std::vector<GridSegment> segs(segment_index + 1, segment);
  TimeGrid grid(std::move(segs));
  ObservedPath path;
  path.horizon = segment.end;
  path.t0_value.assign(y.begin(), y.end());
  for (std::size_t i = 0; i < segment_index; ++i) {
    path.jump_times.push_back(segment.start);
    path.values.push_back(path.t0_value);
  }
  std::vector<UnnormalizedPmf> out;
  FfspSolver solver(generator, grid, path, rho, options);
  solver.advance_segment(segment_index,
                         [&](std::size_t, const UnnormalizedPmf& r) { out.push_back(r); });
  return out;
}

UnnormalizedPmf filter_jump(const FilterGenerator& generator,
                            const UnnormalizedPmf& rho_minus,
                            std::span<const std::size_t> matching,
                            std::span<const int> y_prev, TimePoint at) {
  if (matching.empty())
    throw Error(ErrorKind::EmptyMatch, "jump update needs at least one matching reaction");
  UnnormalizedPmf out;
  out.time = at.time;
  out.weights = generator.jump(matching, y_prev, at, rho_minus.weights);
  const double sum = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
  if (!(sum > 0.0))
    throw Error(ErrorKind::ZeroMass,
                "jump update at t = " + std::to_string(at.time) +
                    " removed all mass; the box excludes every state consistent with the jump");
  for (double& w : out.weights) w /= sum;
  out.log_norm = rho_minus.log_norm + std::log(sum);
  return out;
}

void ffsp_filter(const FilterGenerator& generator, const ObservedPath& path,
                 const TimeGrid& grid, const UnnormalizedPmf& pi0,
                 const std::function<void(const FfspSnapshot&)>& sink,
                 const FfspOptions& options) {
  if (grid.size() != path.segment_count())
    throw Error(ErrorKind::BadParam, "time grid does not match the observed path");
  FfspSolver solver(generator, grid, path, pi0, options);
  sink({0, solver.current(), 0.0});
  for (std::size_t k = 0; k < grid.size(); ++k) {
    solver.advance_segment(k, [&](std::size_t seg, const UnnormalizedPmf& r) {
      sink({seg, r, solver.leak()});
    });
    if (k + 1 < grid.size()) {
      solver.apply_jump(k);
      sink({k + 1, solver.current(), solver.leak()});
    }
  }
}

std::vector<FfspSnapshot> ffsp_filter(const FilterGenerator& generator,
                                      const ObservedPath& path,
                                      const TimeGrid& grid,
                                      const UnnormalizedPmf& pi0,
                                      const FfspOptions& options) {
  std::vector<FfspSnapshot> out;
  ffsp_filter(generator, path, grid, pi0,
              [&](const FfspSnapshot& s) { out.push_back(s); }, options);
  return out;
}

double CmeSolution::leaked(std::size_t i) const {
  return 1.0 - std::accumulate(p[i].begin(), p[i].end(), 0.0);
}

CmeSolution solve_cme(const ReactionSystem& system, const TruncatedSpace& space,
                      std::span<const double> p0, double horizon, double dt,
                      std::size_t substeps) {
  StatePartition all;
  for (std::size_t i = 0; i < system.species_count(); ++i) all.interest.push_back(i);
  FilterGenerator gen(system, all, space);
  const TimeGrid grid = TimeGrid::uniform(horizon, dt);
  ObservedPath path;
  path.horizon = horizon;
  UnnormalizedPmf init;
  init.weights.assign(p0.begin(), p0.end());
  FfspOptions opts;
  opts.substeps = substeps;
  FfspSolver solver(gen, grid, path, init, opts);
  CmeSolution sol;
  sol.times.push_back(0.0);
  sol.p.push_back(init.weights);
  solver.advance_segment(0, [&](std::size_t, const UnnormalizedPmf& r) {
    sol.times.push_back(r.time);
    std::vector<double> p = r.weights;
    const double scale = std::exp(r.log_norm);
    if (scale != 1.0)
      for (double& v : p) v *= scale;
    sol.p.push_back(std::move(p));
  });
  return sol;
}

}  // namespace srnfilter
