#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "oracle/oracle.hpp"
#include "srnfilter/builtin.hpp"
#include "srnfilter/errors.hpp"
#include "srnfilter/ssa.hpp"
#include "stats.hpp"

using namespace srnfilter;

namespace {

SrnModel single(double rate, std::vector<int> consumed, std::vector<int> produced) {
  return SrnModel::checked({"S"}, {make_reaction(std::move(consumed), std::move(produced), rate)});
}

/// Time-dependent wrapper that evaluates the wrapped model at the cell's
/// left node; used to drive the modified next reaction method.
class Timed final : public ReactionSystem {
 public:
  Timed(const SrnModel& m, std::function<double(std::size_t, double)> scale)
      : m_(m), scale_(std::move(scale)) {}
  std::size_t species_count() const override { return m_.species_count(); }
  std::size_t reaction_count() const override { return m_.reaction_count(); }
  const std::vector<std::string>& species_names() const override { return m_.species_names(); }
  std::span<const int> net_change(std::size_t j) const override { return m_.net_change(j); }
  bool time_dependent() const override { return true; }
  double propensity(std::size_t j, std::span<const int> z, TimePoint at) const override {
    return scale_(j, at.time) * m_.propensity(j, z);
  }

 private:
  const SrnModel& m_;
  std::function<double(std::size_t, double)> scale_;
};

}  // namespace

TEST(Ssa, ZeroRatesNeverJump) {
  const SrnModel m = single(0.0, {1}, {0});
  const Trajectory t = ssa_simulate(m, {5}, 10.0, 3);
  EXPECT_EQ(t.jump_count(), 0u);
  EXPECT_EQ(t.state_at(9.0), (State{5}));
}

TEST(Ssa, TrajectoryInvariants) {
  const ModelSpec spec = builtin_model("toy-three");
  const Trajectory t = ssa_simulate(spec.model, {0, 2, 0}, 3.0, 42);
  ASSERT_GT(t.jump_count(), 0u);
  for (std::size_t i = 1; i < t.times.size(); ++i) {
    ASSERT_GT(t.times[i], t.times[i - 1]);
    ASSERT_LE(t.times[i], 3.0);
    const auto& nu = spec.model.reaction(static_cast<std::size_t>(t.fired[i])).net;
    for (std::size_t s = 0; s < 3; ++s) {
      ASSERT_EQ(t.states[i][s], t.states[i - 1][s] + nu[s]);
      ASSERT_GE(t.states[i][s], 0);
    }
  }
}

TEST(Ssa, SameSeedSameTrajectory) {
  const ModelSpec spec = builtin_model("toy-chain");
  const Trajectory a = ssa_simulate(spec.model, {0, 0}, 2.0, 9);
  const Trajectory b = ssa_simulate(spec.model, {0, 0}, 2.0, 9);
  EXPECT_EQ(a.times, b.times);
  EXPECT_EQ(a.states, b.states);
}

TEST(Ssa, PureDeathJumpTimeIsExponential) {
  const SrnModel m = single(1.0, {1}, {0});
  std::vector<double> times;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const Trajectory t = ssa_simulate(m, {1}, 1e6, seed);
    ASSERT_EQ(t.jump_count(), 1u);
    times.push_back(t.times[1]);
  }
  const double d = stats::ks_statistic(times, [](double x) { return 1.0 - std::exp(-x); });
  EXPECT_LT(d, stats::ks_critical_01(times.size()));
}

TEST(Ssa, BirthDeathMeanMatchesAnalytic) {
  const ModelSpec spec = builtin_model("birth-death");
  std::vector<double> z1;
  for (std::uint64_t seed = 0; seed < 10000; ++seed)
    z1.push_back(ssa_simulate(spec.model, {0}, 1.0, seed).state_at(1.0)[0]);
  const auto ms = stats::mean_se(z1);
  EXPECT_NEAR(ms.mean, 10.0 * (1.0 - std::exp(-1.0)), 3.0 * ms.se);
}

TEST(Ssa, ExplosionGuardTrips) {
  const SrnModel m = single(1.0, {1}, {2});
  SsaOptions opts;
  opts.max_jumps = 100;
  try {
    ssa_simulate(m, {5}, 100.0, 1, opts);
    FAIL() << "expected ExplosionGuard";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ExplosionGuard);
  }
}

TEST(Mnrm, ConstantScheduleMatchesDirectMethod) {
  const ModelSpec spec = builtin_model("toy-chain");
  const Timed timed(spec.model, [](std::size_t, double) { return 1.0; });
  const GridSegment seg{0.0, 2.0, 20};
  std::vector<double> a, b;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    a.push_back(static_cast<double>(mnrm_simulate(timed, {0, 0}, seg, 0, seed).jump_count()));
    b.push_back(static_cast<double>(ssa_simulate(spec.model, {0, 0}, 2.0, seed + 1'000'000).jump_count()));
  }
  // Jump counts are discrete, so the continuous critical value is conservative.
  EXPECT_LT(stats::ks_two_sample(a, b), stats::ks_two_sample_critical_01(a.size(), b.size()));
}

TEST(Mnrm, ZeroScheduleNeverJumps) {
  const ModelSpec spec = builtin_model("toy-chain");
  const Timed timed(spec.model, [](std::size_t, double) { return 0.0; });
  EXPECT_EQ(mnrm_simulate(timed, {3, 3}, {0.0, 1.0, 10}, 0, 5).jump_count(), 0u);
}

TEST(Mnrm, FirstJumpIsShiftedExponentialTruncatedAtEnd) {
  // Rate c on the whole segment [a, b]; the first jump is a + Exp(c) when it
  // lands before b.
  const SrnModel m = SrnModel::checked({"S"}, {make_reaction({0}, {1}, 1.0)});
  const double c = 1.5;
  const Timed timed(m, [c](std::size_t, double) { return c; });
  const GridSegment seg{2.0, 3.0, 7};
  std::vector<double> first;
  std::size_t none = 0;
  const std::size_t runs = 10000;
  for (std::uint64_t seed = 0; seed < runs; ++seed) {
    const Trajectory t = mnrm_simulate(timed, {0}, seg, 0, seed);
    if (t.jump_count() == 0) ++none;
    else first.push_back(t.times[1]);
  }
  const double p_none = std::exp(-c);
  EXPECT_NEAR(static_cast<double>(none) / runs, p_none,
              3.0 * std::sqrt(p_none * (1 - p_none) / runs));
  const double d = stats::ks_statistic(first, [&](double x) {
    return (1.0 - std::exp(-c * (x - 2.0))) / (1.0 - p_none);
  });
  EXPECT_LT(d, stats::ks_critical_01(first.size()));
}

TEST(Mnrm, PiecewiseRateGivesPoissonCount) {
  // Rate 1 on the first half of the cells and 3 on the second half: the jump
  // count is Poisson with mean 2 over [0, 1].
  const SrnModel m = SrnModel::checked({"S"}, {make_reaction({0}, {1}, 1.0)});
  const Timed timed(m, [](std::size_t, double t) { return t < 0.5 - 1e-9 ? 1.0 : 3.0; });
  const GridSegment seg{0.0, 1.0, 10};
  std::map<int, double> freq;
  const int runs = 20000;
  for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(runs); ++seed)
    freq[static_cast<int>(mnrm_simulate(timed, {0}, seg, 0, seed).jump_count())] += 1.0 / runs;
  double tv = 0.0;
  for (int k = 0; k < 30; ++k) tv += std::abs(freq[k] - oracle::poisson_pmf(2.0, k));
  EXPECT_LT(0.5 * tv, 0.015);
}

TEST(Observation, NoObservableReactionKeepsInitialValue) {
  const ModelSpec spec = builtin_model("toy-chain");
  StatePartition p = StatePartition::from_names(spec.model, {"A"}, {"B"});
  const SrnModel births = SrnModel::checked({"A", "B"}, {make_reaction({0, 0}, {1, 0}, 3.0)});
  const ObservedPath path = extract_observation(ssa_simulate(births, {0, 4}, 2.0, 1), p);
  EXPECT_EQ(path.jump_count(), 0u);
  EXPECT_EQ(path.t0_value, (std::vector<int>{4}));
  EXPECT_DOUBLE_EQ(path.horizon, 2.0);
}

TEST(Observation, EverythingObservedKeepsEveryJump) {
  const ModelSpec spec = builtin_model("toy-chain");
  StatePartition p = StatePartition::from_names(spec.model, {}, {"A", "B"});
  const Trajectory t = ssa_simulate(spec.model, {0, 0}, 2.0, 4);
  const ObservedPath path = extract_observation(t, p);
  EXPECT_EQ(path.jump_times, std::vector<double>(t.times.begin() + 1, t.times.end()));
}

TEST(Observation, CascadeKeepsExactlyTheObservedChanges) {
  const ModelSpec spec = builtin_model("linear-cascade", 5);
  Trajectory t;
  const ObservedPath path = generate_path(spec, 17, &t);
  std::vector<double> expected;
  for (std::size_t i = 1; i < t.times.size(); ++i)
    if (t.states[i][4] != t.states[i - 1][4]) expected.push_back(t.times[i]);
  EXPECT_EQ(path.jump_times, expected);
  EXPECT_NO_THROW(path.check());
}

TEST(Observation, CheckRejectsBadPaths) {
  ObservedPath p;
  p.t0_value = {0};
  p.jump_times = {0.5, 0.4};
  p.values = {{1}, {2}};
  p.horizon = 1.0;
  EXPECT_THROW(p.check(), Error);
  p.jump_times = {0.4, 0.5};
  p.values = {{1}, {1}};
  EXPECT_THROW(p.check(), Error);
}

TEST(SampleInitial, DeterministicIgnoresSeed) {
  const auto mu = InitialDistribution::deterministic({3, 0, 7});
  EXPECT_EQ(sample_initial(mu, 1), (State{3, 0, 7}));
  EXPECT_EQ(sample_initial(mu, 999), (State{3, 0, 7}));
}

TEST(SampleInitial, CategoricalFrequency) {
  InitialDistribution mu;
  mu.marginals = {SpeciesMarginal{{0, 1}, {0.5, 0.5}}, SpeciesMarginal::deterministic(4)};
  int ones = 0;
  const int n = 10000;
  for (int s = 0; s < n; ++s) {
    const State z = sample_initial(mu, static_cast<std::uint64_t>(s));
    ASSERT_EQ(z[1], 4);
    ones += z[0];
  }
  EXPECT_NEAR(static_cast<double>(ones) / n, 0.5, 3.0 * std::sqrt(0.25 / n));
}
