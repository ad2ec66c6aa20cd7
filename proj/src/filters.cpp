#include "srnfilter/filters.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "srnfilter/errors.hpp"

namespace srnfilter {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

FilterResult make_result(Method method, const SrnModel& model,
                         const StatePartition& partition, TruncatedSpace space) {
  FilterResult r;
  r.method = method;
  r.space = std::move(space);
  for (std::size_t i : partition.interest)
    r.coordinate_names.push_back(model.species_names()[i]);
  return r;
}

// Appends a normalized PMF over result.space with its moments.
void emit(FilterResult& r, double t, std::size_t segment, std::vector<double> w,
          double ess, double leak) {
  double sum = 0.0;
  for (double& v : w) {
    v = std::max(0.0, v);
    sum += v;
  }
  if (!(sum > 0.0))
    throw Error(ErrorKind::ZeroMass, "filter lost all mass at t = " + std::to_string(t));
  for (double& v : w) v /= sum;
  const std::size_t D = r.space.dims();
  std::vector<double> m(D, 0.0), m2(D, 0.0);
  State x(D);
  for (std::size_t idx = 0; idx < w.size(); ++idx) {
    if (w[idx] == 0.0) continue;
    r.space.state(idx, x);
    for (std::size_t c = 0; c < D; ++c) {
      m[c] += w[idx] * x[c];
      m2[c] += w[idx] * static_cast<double>(x[c]) * x[c];
    }
  }
  std::vector<double> var(D);
  for (std::size_t c = 0; c < D; ++c) var[c] = std::max(0.0, m2[c] - m[c] * m[c]);
  r.times.push_back(t);
  r.segments.push_back(segment);
  r.pmfs.push_back(std::move(w));
  r.mean.push_back(std::move(m));
  r.var.push_back(std::move(var));
  r.ess.push_back(ess);
  r.leak.push_back(leak);
}

void summarize_tables(FilterResult& r) {
  r.diagnostics.table_count = r.tables.size();
  if (r.tables.empty()) return;
  double rel = 0.0;
  std::size_t carried = 0;
  for (const auto& t : r.tables) {
    rel += t->reliable_fraction();
    carried += t->carried_slices();
  }
  rel /= static_cast<double>(r.tables.size());
  r.diagnostics.reliable_fraction = rel;
  r.diagnostics.extrapolated_fraction = 1.0 - rel;
  r.diagnostics.carried_slices = carried;
  r.diagnostics.table_gap = 1.0 - rel > 0.5;
}

void maybe_resample(Ensemble& ens, const FilterConfig& cfg) {
  if (cfg.ess_threshold > 0.0 &&
      pf_ess(ens) < cfg.ess_threshold * static_cast<double>(ens.size()))
    pf_resample(ens, cfg.resampling);
}

// Projected FFSP, optionally interleaved with a full-model particle filter
// that estimates the tables segment by segment.
FilterResult projected_pipeline(Method method, const SrnModel& model,
                                const StatePartition& partition,
                                const InitialDistribution& mu, const ObservedPath& path,
                                const FilterConfig& cfg, std::vector<TablePtr> tables,
                                bool estimate_cmp) {
  const auto start = Clock::now();
  path.check();
  cfg.check(partition.hidden_count());
  const TruncatedSpace box = cfg.interest_box(partition.interest.size());
  const TimeGrid grid = TimeGrid::for_path(path, cfg.dt);
  if (estimate_cmp)
    tables = make_tables(model, partition, box, grid, cfg.interpolation);

  const ProjectedModel projected = build_projected_model(model, partition, tables);
  const StatePartition ppart = projected_partition(partition);
  const FilterGenerator gen(projected, ppart, box, cfg.workers);
  const InitialDistribution pmu = projected_initial(mu, partition);
  FfspSolver solver(gen, grid, path, initial_filter_pmf(pmu, ppart, box, path.t0_value),
                    {1, 1e-8, cfg.workers});

  FilterResult r = make_result(method, model, partition, box);
  r.diagnostics.state_count = box.size();
  std::optional<Ensemble> ens;
  if (estimate_cmp && !tables.empty()) ens = pf_init(mu, partition, cfg.M, cfg.seed);
  const PfOptions pf_opts{cfg.workers, {}};
  EstimateOptions est;
  est.weight_share = cfg.weight_share;
  double min_ess = ens ? static_cast<double>(cfg.M) : kNaN;
  std::vector<double> step_ess;

  emit(r, 0.0, 0, solver.current().weights, ens ? pf_ess(*ens) : kNaN, 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const GridSegment& seg = grid.segment(k);
    const auto y = path.value_in_segment(k);
    step_ess.assign(seg.steps, kNaN);
    if (ens) {
      for (std::size_t node = 0; node < seg.node_count(); ++node) {
        if (node > 0) pf_propagate(*ens, model, partition, y, k, seg.node_time(node), pf_opts);
        cmp_estimate(*ens, model, partition, y, k, node, tables, est);
        if (node > 0 && node % 2 == 0) {
          step_ess[node / 2 - 1] = pf_ess(*ens);
          min_ess = std::min(min_ess, step_ess[node / 2 - 1]);
          if (node + 1 < seg.node_count()) maybe_resample(*ens, cfg);
        }
      }
    }
    std::size_t step = 0;
    solver.advance_segment(k, [&](std::size_t s, const UnnormalizedPmf& rho) {
      emit(r, rho.time, s, rho.weights, step_ess[step++], solver.leak());
    });
    if (k + 1 < grid.size()) {
      const double t_jump = path.jump_times[k];
      double ess = kNaN;
      if (ens) {
        const auto matching = matching_reactions(model, partition, path.jump_delta(k + 1));
        pf_jump(*ens, model, partition, matching, y, {k, t_jump});
        ess = pf_ess(*ens);
        min_ess = std::min(min_ess, ess);
        pf_resample(*ens, cfg.resampling);
      }
      solver.apply_jump(k);
      emit(r, t_jump, k + 1, solver.current().weights, ess, solver.leak());
    }
  }
  if (ens) {
    std::vector<std::size_t> coords(partition.interest.size());
    std::iota(coords.begin(), coords.end(), 0);
    r.particle_final = pf_marginal(*ens, coords, box);
  }
  r.tables = std::move(tables);
  summarize_tables(r);
  r.diagnostics.leak = solver.leak();
  r.diagnostics.min_ess = min_ess;
  r.diagnostics.wall_seconds = seconds_since(start);
  return r;
}

FilterResult full_ffsp(const SrnModel& model, const StatePartition& partition,
                       const InitialDistribution& mu, const ObservedPath& path,
                       const FilterConfig& cfg) {
  const auto start = Clock::now();
  path.check();
  cfg.check(partition.hidden_count());
  const TruncatedSpace hidden = cfg.hidden_box();
  const std::size_t dx = partition.interest.size();
  const TimeGrid grid = TimeGrid::for_path(path, cfg.dt);
  const FilterGenerator gen(model, partition, hidden, cfg.workers);
  FilterResult r = make_result(Method::FullFfsp, model, partition, cfg.interest_box(dx));
  r.diagnostics.state_count = hidden.size();
  double leak = 0.0;
  ffsp_filter(gen, path, grid, initial_filter_pmf(mu, partition, hidden, path.t0_value),
              [&](const FfspSnapshot& s) {
                emit(r, s.rho.time, s.segment, marginalize(s.rho.weights, hidden, dx), kNaN,
                     s.leak);
                leak = s.leak;
              },
              {1, 1e-8, cfg.workers});
  r.diagnostics.leak = leak;
  r.diagnostics.wall_seconds = seconds_since(start);
  return r;
}

FilterResult particle_reference(const SrnModel& model, const StatePartition& partition,
                                const InitialDistribution& mu, const ObservedPath& path,
                                const FilterConfig& cfg) {
  const auto start = Clock::now();
  path.check();
  cfg.check(partition.hidden_count());
  const std::size_t dx = partition.interest.size();
  const TimeGrid grid = TimeGrid::for_path(path, cfg.dt);
  FilterResult r =
      make_result(Method::ParticleFilter, model, partition, cfg.interest_box(dx));
  std::vector<std::size_t> coords(dx);
  std::iota(coords.begin(), coords.end(), 0);
  Ensemble ens = pf_init(mu, partition, cfg.M, cfg.seed);
  const PfOptions opts{cfg.workers, {}};
  double outside = 0.0, min_ess = static_cast<double>(cfg.M);
  auto record = [&](std::size_t segment, double ess) {
    emit(r, ens.time, segment, pf_marginal(ens, coords, r.space, &outside).probs, ess,
         outside);
    min_ess = std::min(min_ess, ess);
  };
  record(0, pf_ess(ens));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const GridSegment& seg = grid.segment(k);
    const auto y = path.value_in_segment(k);
    for (std::size_t s = 1; s <= seg.steps; ++s) {
      pf_propagate(ens, model, partition, y, k, seg.node_time(2 * s), opts);
      record(k, pf_ess(ens));
      if (s < seg.steps) maybe_resample(ens, cfg);
    }
    if (k + 1 < grid.size()) {
      const auto matching = matching_reactions(model, partition, path.jump_delta(k + 1));
      pf_jump(ens, model, partition, matching, y, {k, path.jump_times[k]});
      const double ess = pf_ess(ens);
      pf_resample(ens, cfg.resampling);
      record(k + 1, ess);
    }
  }
  r.diagnostics.state_count = cfg.M;
  r.diagnostics.min_ess = min_ess;
  r.diagnostics.leak = outside;
  r.diagnostics.wall_seconds = seconds_since(start);
  return r;
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "ffsp") return Method::FullFfsp;
  if (name == "pf") return Method::ParticleFilter;
  if (name == "ump") return Method::Ump;
  if (name == "cmp") return Method::Cmp;
  throw Error(ErrorKind::BadParam, "unknown method '" + name + "' (ffsp|pf|ump|cmp)");
}

const char* to_string(Method method) noexcept {
  switch (method) {
    case Method::FullFfsp: return "ffsp";
    case Method::ParticleFilter: return "pf";
    case Method::Ump: return "ump";
    case Method::Cmp: return "cmp";
  }
  return "?";
}

void FilterConfig::check(std::size_t hidden_dims) const {
  if (M == 0) throw Error(ErrorKind::BadParam, "M must be >= 1");
  if (!(dt > 0.0)) throw Error(ErrorKind::BadParam, "dt must be positive");
  if (box_lower.size() != hidden_dims || box_upper.size() != hidden_dims)
    throw Error(ErrorKind::BadParam,
                "box needs one [lower, upper] pair per hidden species (" +
                    std::to_string(hidden_dims) + ")");
  for (std::size_t i = 0; i < hidden_dims; ++i)
    if (box_upper[i] < box_lower[i])
      throw Error(ErrorKind::BadParam, "box upper bound below lower bound in coordinate " +
                                           std::to_string(i));
}

TruncatedSpace FilterConfig::hidden_box() const {
  return TruncatedSpace(box_lower, box_upper, size_cap);
}

TruncatedSpace FilterConfig::interest_box(std::size_t interest_dims) const {
  if (box_lower.size() < interest_dims || box_upper.size() < interest_dims)
    throw Error(ErrorKind::BadParam, "box is shorter than the interest dimension");
  return TruncatedSpace(
      std::vector<int>(box_lower.begin(), box_lower.begin() + static_cast<std::ptrdiff_t>(interest_dims)),
      std::vector<int>(box_upper.begin(), box_upper.begin() + static_cast<std::ptrdiff_t>(interest_dims)),
      size_cap);
}

FilterResult run_ump(const SrnModel& model, const StatePartition& partition,
                     const InitialDistribution& mu, const ObservedPath& path,
                     const FilterConfig& cfg) {
  const auto start = Clock::now();
  cfg.check(partition.hidden_count());
  EstimateOptions est;
  est.workers = cfg.workers;
  est.min_support = cfg.min_support;
  est.interpolation = cfg.interpolation;
  auto tables = ump_estimate(model, partition, mu, path, TimeGrid::for_path(path, cfg.dt),
                             cfg.interest_box(partition.interest.size()), cfg.M, cfg.seed,
                             est);
  FilterResult r = projected_pipeline(Method::Ump, model, partition, mu, path, cfg,
                                      std::move(tables), false);
  r.diagnostics.wall_seconds = seconds_since(start);
  return r;
}

FilterResult run_cmp(const SrnModel& model, const StatePartition& partition,
                     const InitialDistribution& mu, const ObservedPath& path,
                     const FilterConfig& cfg) {
  return projected_pipeline(Method::Cmp, model, partition, mu, path, cfg, {}, true);
}

FilterResult run_projected(const SrnModel& model, const StatePartition& partition,
                           const InitialDistribution& mu, const ObservedPath& path,
                           const FilterConfig& cfg, std::vector<TablePtr> tables) {
  return projected_pipeline(Method::Cmp, model, partition, mu, path, cfg,
                            std::move(tables), false);
}

FilterResult run_reference(const SrnModel& model, const StatePartition& partition,
                           const InitialDistribution& mu, const ObservedPath& path,
                           const FilterConfig& cfg) {
  if (cfg.method == Method::ParticleFilter)
    return particle_reference(model, partition, mu, path, cfg);
  return full_ffsp(model, partition, mu, path, cfg);
}

FilterResult run_filter(const SrnModel& model, const StatePartition& partition,
                        const InitialDistribution& mu, const ObservedPath& path,
                        const FilterConfig& cfg) {
  switch (cfg.method) {
    case Method::Ump: return run_ump(model, partition, mu, path, cfg);
    case Method::Cmp: return run_cmp(model, partition, mu, path, cfg);
    default: return run_reference(model, partition, mu, path, cfg);
  }
}

std::vector<double> marginalize(std::span<const double> weights,
                                const TruncatedSpace& hidden_box,
                                std::size_t interest_dims) {
  // Row-major layout with X' first: each X' state owns a contiguous block.
  std::size_t outer = 1;
  for (std::size_t d = 0; d < interest_dims; ++d)
    outer *= static_cast<std::size_t>(hidden_box.upper()[d] - hidden_box.lower()[d] + 1);
  const std::size_t block = hidden_box.size() / outer;
  std::vector<double> out(outer, 0.0);
  for (std::size_t i = 0; i < outer; ++i)
    out[i] = std::accumulate(weights.begin() + static_cast<std::ptrdiff_t>(i * block),
                             weights.begin() + static_cast<std::ptrdiff_t>((i + 1) * block), 0.0);
  return out;
}

Pmf marginalize(const Pmf& pmf, const TruncatedSpace& hidden_box,
                std::size_t interest_dims) {
  Pmf out;
  out.time = pmf.time;
  out.probs = marginalize(pmf.probs, hidden_box, interest_dims);
  const double s = std::accumulate(out.probs.begin(), out.probs.end(), 0.0);
  if (!(s > 0.0)) throw Error(ErrorKind::ZeroMass, "cannot marginalize a PMF without mass");
  for (double& p : out.probs) p /= s;
  return out;
}

std::vector<TablePtr> exact_filter_tables(const SrnModel& model,
                                          const StatePartition& partition,
                                          const InitialDistribution& mu,
                                          const ObservedPath& path,
                                          const FilterConfig& cfg) {
  cfg.check(partition.hidden_count());
  const TruncatedSpace hidden = cfg.hidden_box();
  const TimeGrid grid = TimeGrid::for_path(path, cfg.dt);
  auto tables = make_tables(model, partition, cfg.interest_box(partition.interest.size()),
                            grid, cfg.interpolation);
  const FilterGenerator gen(model, partition, hidden, cfg.workers);
  std::size_t segment = 0, node = 0;
  ffsp_filter(gen, path, grid, initial_filter_pmf(mu, partition, hidden, path.t0_value),
              [&](const FfspSnapshot& s) {
                if (s.segment != segment) {
                  segment = s.segment;
                  node = 0;
                }
                exact_slice(model, partition, hidden, s.rho.weights,
                            path.value_in_segment(segment), segment, node++, tables);
              },
              {2, 1e-8, cfg.workers});
  return tables;
}

InitialDistribution projected_initial(const InitialDistribution& mu,
                                      const StatePartition& partition) {
  InitialDistribution out;
  for (std::size_t i : partition.interest) out.marginals.push_back(mu.marginals[i]);
  for (std::size_t i : partition.observed) out.marginals.push_back(mu.marginals[i]);
  return out;
}

double tail_probability(std::span<const double> pmf, const TruncatedSpace& space,
                        std::size_t coord, int threshold) {
  double q = 0.0;
  State x(space.dims());
  for (std::size_t idx = 0; idx < space.size(); ++idx) {
    space.state(idx, x);
    if (x[coord] >= threshold) q += pmf[idx];
  }
  return q;
}

}  // namespace srnfilter
