#pragma once

// Reference computations for the test suite. Nothing here calls the solver
// code under test: propensities, generators and time stepping are rebuilt
// from the raw reaction data, and time evolution uses uniformization, which
// is exact up to the truncated Poisson tail.

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "srnfilter/model.hpp"
#include "srnfilter/trajectory.hpp"

namespace oracle {

using srnfilter::State;

double falling_propensity(const srnfilter::Reaction& r, const State& z);

double poisson_pmf(double lambda, int k);

/// Row-major box over some subset of species.
struct Box {
  std::vector<int> lo, hi;
  std::size_t size() const;
  std::size_t index(const State& x) const;  // npos when outside
  State state(std::size_t i) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// d rho/dt = sum_{j in allowed} a_j(x - nu_j) rho(x - nu_j) - sum_{all j} a_j(x) rho(x)
/// on the hidden box at frozen observed value y.
struct SubGenerator {
  std::vector<std::vector<std::pair<std::size_t, double>>> inflow;  // [dest] -> (src, rate)
  std::vector<double> outflow;
};

SubGenerator build_generator(const srnfilter::SrnModel& model,
                             const std::vector<std::size_t>& hidden,
                             const std::vector<std::size_t>& observed,
                             const std::vector<int>& y, const Box& box);

/// exp(t A) p by uniformization.
std::vector<double> evolve(const SubGenerator& g, std::vector<double> p, double t);

/// Hidden-state pmf series of the exact filter (or the truncated CME when
/// `observed` is empty), normalized, at the requested (segment, time)
/// points, which must be sorted. p0 is over `box`.
std::vector<std::vector<double>> filter_series(
    const srnfilter::SrnModel& model, const std::vector<std::size_t>& hidden,
    const std::vector<std::size_t>& observed, const srnfilter::ObservedPath& path,
    const Box& box, const std::vector<double>& p0,
    const std::vector<std::pair<std::size_t, double>>& queries, bool normalize = true);

/// Sum over every box coordinate except the listed ones.
std::vector<double> marginal(const std::vector<double>& p, const Box& box,
                             const std::vector<std::size_t>& keep);

/// Product initial law restricted to the hidden species, over the box.
std::vector<double> product_initial(const srnfilter::InitialDistribution& mu,
                                    const std::vector<std::size_t>& hidden,
                                    const Box& box);

double l1(const std::vector<double>& a, const std::vector<double>& b);

double total_variation(const std::map<State, double>& p, const std::map<State, double>& q);

}  // namespace oracle
