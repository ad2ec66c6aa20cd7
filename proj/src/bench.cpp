#include "srnfilter/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <ostream>
#include <regex>
#include <thread>

#include "srnfilter/errors.hpp"
#include "srnfilter/io.hpp"
#include "srnfilter/parallel.hpp"
#include "srnfilter/rng.hpp"
#include "srnfilter/ssa.hpp"

namespace srnfilter {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs job(i) for i in [0, n) on a shared queue; larger jobs first is up to
// the caller's ordering.
template <class Job>
void run_queue(std::size_t n, std::size_t workers, Job&& job) {
  if (workers == 0) workers = default_workers();
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto loop = [&](std::size_t w) {
    try {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    } catch (...) {
      errors[w] = std::current_exception();
      next = n;
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(loop, w);
  loop(0);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Summary {
  double mean = 0.0;
  double half_width = 0.0;
};

Summary summarize(const std::vector<double>& v) {
  Summary s;
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.half_width = 1.96 * std::sqrt(ss / (n - 1.0) / n);
  }
  return s;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double tv = 0.0;
  for (std::size_t i = 0; i < std::max(p.size(), q.size()); ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    tv += std::abs(a - b);
  }
  return 0.5 * tv;
}

FilterConfig default_config(const ModelSpec& spec, Method method) {
  FilterConfig cfg;
  cfg.method = method;
  cfg.dt = spec.dt;
  hidden_box(spec, cfg.box_lower, cfg.box_upper);
  return cfg;
}

CheckResult check_ssa_birth_death() {
  const auto start = Clock::now();
  const ModelSpec spec = builtin_model("birth-death");
  constexpr std::size_t runs = 100000;
  std::vector<double> hist(61, 0.0);
  std::vector<std::vector<double>> partial(16, std::vector<double>(61, 0.0));
  parallel_for(partial.size(), 0, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t b = lo; b < hi; ++b)
      for (std::size_t r = b; r < runs; r += partial.size()) {
        State z{0};
        Engine rng = make_engine(17, r);
        ssa_advance(spec.model, z, 0.0, 1.0, rng);
        partial[b][std::min<std::size_t>(static_cast<std::size_t>(z[0]), 60)] += 1.0 / runs;
      }
  });
  for (const auto& p : partial)
    for (std::size_t i = 0; i < hist.size(); ++i) hist[i] += p[i];
  const double lambda = 10.0 * (1.0 - std::exp(-1.0));
  std::vector<double> poisson(61);
  for (int k = 0; k <= 60; ++k)
    poisson[k] = std::exp(k * std::log(lambda) - lambda - std::lgamma(k + 1.0));
  CheckResult c{"ssa-birth-death", false, total_variation(hist, poisson), 0.02,
                "TV(SSA histogram of Z(1), Poisson(10(1-e^-1))), 1e5 runs", 0.0};
  c.passed = c.value <= c.tolerance;
  c.seconds = seconds_since(start);
  return c;
}

CheckResult check_cme_vs_ssa() {
  const auto start = Clock::now();
  const ModelSpec spec = builtin_model("toy-chain");
  const TruncatedSpace space({0, 0}, {25, 25});
  std::vector<double> p0(space.size(), 0.0);
  p0[space.index_of(State{0, 0})] = 1.0;
  const CmeSolution sol = solve_cme(spec.model, space, p0, 2.0, 0.01);
  constexpr std::size_t runs = 100000;
  std::vector<std::vector<double>> partial(16, std::vector<double>(space.size(), 0.0));
  parallel_for(partial.size(), 0, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t b = lo; b < hi; ++b)
      for (std::size_t r = b; r < runs; r += partial.size()) {
        State z{0, 0};
        Engine rng = make_engine(29, r);
        ssa_advance(spec.model, z, 0.0, 2.0, rng);
        const std::size_t idx = space.index_of(z);
        if (idx != TruncatedSpace::npos) partial[b][idx] += 1.0 / runs;
      }
  });
  std::vector<double> hist(space.size(), 0.0);
  for (const auto& p : partial)
    for (std::size_t i = 0; i < hist.size(); ++i) hist[i] += p[i];
  CheckResult c{"cme-vs-ssa", false, total_variation(hist, sol.p.back()), 0.02,
                "TV(truncated CME at T=2, 1e5 SSA runs) on the A->B->0 chain", 0.0};
  c.passed = c.value <= c.tolerance;
  c.seconds = seconds_since(start);
  return c;
}

// Projected filter with exact tables against the marginalized full filter.
CheckResult check_projection(const std::string& name, ModelSpec spec,
                             const std::vector<std::string>& interest,
                             const std::vector<std::string>& observed, std::size_t workers) {
  const auto start = Clock::now();
  repartition(spec, interest, observed);
  spec.species_upper.assign(spec.species_upper.size(), 20);
  const ObservedPath path = generate_path(spec, spec.path_seed);
  FilterConfig cfg = default_config(spec, Method::FullFfsp);
  cfg.workers = workers;
  const FilterResult full = run_reference(spec.model, spec.partition, spec.initial, path, cfg);
  const auto tables = exact_filter_tables(spec.model, spec.partition, spec.initial, path, cfg);
  const FilterResult proj =
      run_projected(spec.model, spec.partition, spec.initial, path, cfg, tables);
  double worst = 0.0;
  for (std::size_t t = 0; t < full.times.size(); ++t) {
    double l1 = 0.0;
    for (std::size_t i = 0; i < full.pmfs[t].size(); ++i)
      l1 += std::abs(full.pmfs[t][i] - proj.pmfs[t][i]);
    worst = std::max(worst, l1);
  }
  CheckResult c{name, false, worst, 1e-5,
                "max over grid times of the L1 distance to the marginalized full solution (" +
                    std::to_string(path.jump_count()) + " observed jumps)",
                0.0};
  c.passed = c.value <= c.tolerance;
  c.seconds = seconds_since(start);
  return c;
}

CheckResult check_identity_projection(std::size_t workers) {
  const auto start = Clock::now();
  const ModelSpec spec = builtin_model("toy-chain");
  const ObservedPath path = generate_path(spec, spec.path_seed);
  FilterConfig cfg = default_config(spec, Method::FullFfsp);
  cfg.M = 200;
  cfg.workers = workers;
  const FilterResult full = run_reference(spec.model, spec.partition, spec.initial, path, cfg);
  double worst = 0.0;
  for (Method m : {Method::Ump, Method::Cmp}) {
    cfg.method = m;
    const FilterResult r = run_filter(spec.model, spec.partition, spec.initial, path, cfg);
    for (std::size_t t = 0; t < full.times.size(); ++t)
      for (std::size_t i = 0; i < full.pmfs[t].size(); ++i)
        worst = std::max(worst, std::abs(full.pmfs[t][i] - r.pmfs[t][i]));
  }
  CheckResult c{"identity-projection", false, worst, 1e-8,
                "max per-state difference of UMP/CMP to full FFSP when X'' is empty", 0.0};
  c.passed = c.value <= c.tolerance;
  c.seconds = seconds_since(start);
  return c;
}

}  // namespace

TailQoi parse_qoi(const std::string& text, const ModelSpec& spec) {
  static const std::regex pattern(R"(tail:([A-Za-z_][A-Za-z0-9_]*)>=(-?[0-9]+))");
  std::smatch m;
  if (!std::regex_match(text, m, pattern))
    throw Error(ErrorKind::BadParam, "QOI must look like tail:<species>>=<k>, got '" + text + "'");
  const std::string who = m[1];
  const auto& names = spec.model.species_names();
  std::size_t species = names.size();
  const auto it = std::find(names.begin(), names.end(), who);
  if (it != names.end()) {
    species = static_cast<std::size_t>(it - names.begin());
  } else if (who.size() > 1 && who[0] == 'Z' &&
             std::all_of(who.begin() + 1, who.end(), ::isdigit)) {
    const std::size_t i = std::stoul(who.substr(1));
    if (i >= 1 && i <= names.size()) species = i - 1;
  }
  if (species == names.size())
    throw Error(ErrorKind::BadParam, "QOI names unknown species '" + who + "'");
  const auto& interest = spec.partition.interest;
  const auto pos = std::find(interest.begin(), interest.end(), species);
  if (pos == interest.end())
    throw Error(ErrorKind::BadParam, "QOI species '" + who + "' is not of interest");
  return {static_cast<std::size_t>(pos - interest.begin()), std::stoi(m[2]), text};
}

const ConvergenceRow& ConvergenceReport::row(const std::string& method, std::size_t M) const {
  for (const auto& r : rows)
    if (r.method == method && r.M == M) return r;
  throw Error(ErrorKind::BadParam, "no convergence row for " + method + " at M = " + std::to_string(M));
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

ConvergenceReport run_convergence(const ModelSpec& spec, const ObservedPath& path,
                                  const TailQoi& qoi, const ConvergenceConfig& cfg) {
  ConvergenceReport report;
  FilterConfig ref = cfg.base;
  ref.method = Method::FullFfsp;
  ref.workers = cfg.workers == 0 ? default_workers() : cfg.workers;
  const FilterResult reference = run_reference(spec.model, spec.partition, spec.initial, path, ref);
  report.q_ref = qoi(reference.final_pmf(), reference.space);
  report.reference_seconds = reference.diagnostics.wall_seconds;
  if (!(report.q_ref > 0.0))
    throw Error(ErrorKind::Degenerate, "reference tail probability is zero; relative error undefined");

  const std::size_t nM = cfg.Ms.size();
  const std::size_t jobs = nM * cfg.reps;
  std::vector<double> err_cmp(jobs), err_pf(jobs), err_ump(jobs, 0.0), secs(jobs);
  std::vector<char> fail_cmp(jobs, 0), fail_ump(jobs, 0);
  auto rel = [&](double q) { return std::abs(q - report.q_ref) / report.q_ref; };
  // Largest M first keeps the queue balanced.
  run_queue(jobs, cfg.workers, [&](std::size_t job) {
    const std::size_t mi = nM - 1 - job / cfg.reps;
    const std::size_t rep = job % cfg.reps;
    const std::size_t slot = mi * cfg.reps + rep;
    FilterConfig c = cfg.base;
    c.workers = 1;
    c.M = cfg.Ms[mi];
    c.seed = stream_seed(cfg.seed, cfg.Ms[mi], rep);
    const auto t0 = Clock::now();
    c.method = Method::Cmp;
    // A run that breaks down counts as a total miss.
    try {
      const FilterResult cmp = run_cmp(spec.model, spec.partition, spec.initial, path, c);
      err_cmp[slot] = rel(qoi(cmp.final_pmf(), cmp.space));
      err_pf[slot] = rel(qoi(cmp.particle_final->probs, cmp.space));
    } catch (const Error&) {
      err_cmp[slot] = err_pf[slot] = 1.0;
      fail_cmp[slot] = 1;
    }
    secs[slot] = seconds_since(t0);
    if (cfg.include_ump) {
      c.method = Method::Ump;
      c.seed = stream_seed(cfg.seed, cfg.Ms[mi], rep + 0x100000);
      try {
        const FilterResult ump = run_ump(spec.model, spec.partition, spec.initial, path, c);
        err_ump[slot] = rel(qoi(ump.final_pmf(), ump.space));
      } catch (const Error&) {
        err_ump[slot] = 1.0;
        fail_ump[slot] = 1;
      }
    }
  });

  std::vector<double> xs, mc, mp, mu;
  for (std::size_t mi = 0; mi < nM; ++mi) {
    auto slice_of = [&](const std::vector<double>& v) {
      return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(mi * cfg.reps),
                                 v.begin() + static_cast<std::ptrdiff_t>((mi + 1) * cfg.reps));
    };
    const double mean_secs = summarize(slice_of(secs)).mean;
    auto add = [&](const std::string& method, const std::vector<double>& v,
                   const std::vector<char>& failed) {
      const Summary s = summarize(slice_of(v));
      const auto first = failed.begin() + static_cast<std::ptrdiff_t>(mi * cfg.reps);
      const auto failures =
          static_cast<std::size_t>(std::count(first, first + static_cast<std::ptrdiff_t>(cfg.reps), 1));
      report.rows.push_back({method, cfg.Ms[mi], s.mean, s.mean - s.half_width,
                             s.mean + s.half_width, mean_secs, failures});
      return s.mean;
    };
    xs.push_back(static_cast<double>(cfg.Ms[mi]));
    mc.push_back(add("cmp", err_cmp, fail_cmp));
    mp.push_back(add("pf", err_pf, fail_cmp));
    if (cfg.include_ump) mu.push_back(add("ump", err_ump, fail_ump));
  }
  if (nM >= 2) {
    report.slope_cmp = loglog_slope(xs, mc);
    report.slope_pf = loglog_slope(xs, mp);
    if (cfg.include_ump) report.slope_ump = loglog_slope(xs, mu);
  }
  return report;
}

void write_convergence_csv(std::ostream& os, const ConvergenceReport& report) {
  os << "method,M,mean_rel_error,ci_low,ci_high,mean_seconds,failures\n";
  for (const auto& r : report.rows)
    os << r.method << ',' << r.M << ',' << format_double(r.mean_error) << ','
       << format_double(r.ci_low) << ',' << format_double(r.ci_high) << ','
       << format_double(r.mean_seconds) << ',' << r.failures << '\n';
}

std::vector<CheckResult> run_validation(std::size_t workers) {
  std::vector<CheckResult> out;
  out.push_back(check_ssa_birth_death());
  out.push_back(check_cme_vs_ssa());
  const ModelSpec toy = builtin_model("toy-three");
  out.push_back(check_projection("mp-exact-tables", toy, {"A", "C"}, {}, workers));
  out.push_back(check_projection("fmp-exact-tables", toy, {"A"}, {"C"}, workers));
  out.push_back(check_identity_projection(workers));
  return out;
}

}  // namespace srnfilter
