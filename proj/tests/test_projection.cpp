#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracle/oracle.hpp"
#include "srnfilter/builtin.hpp"
#include "srnfilter/errors.hpp"
#include "srnfilter/filters.hpp"
#include "srnfilter/projection.hpp"
#include "stats.hpp"

using namespace srnfilter;

namespace {

ObservedPath flat_path(std::vector<int> y0, double horizon) {
  ObservedPath p;
  p.t0_value = std::move(y0);
  p.horizon = horizon;
  return p;
}

/// Exact E[a_r | key] and Var[a_r | key] under a joint law over the full
/// species box, keyed by the listed species.
struct CondMoments {
  std::map<State, double> mass, mean, var;
};

CondMoments conditional_moments(const SrnModel& m, std::size_t r, const oracle::Box& box,
                                const std::vector<double>& p, const std::vector<std::size_t>& key_species) {
  CondMoments out;
  std::map<State, double> s1, s2;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    const State z = box.state(i);
    State key;
    for (std::size_t k : key_species) key.push_back(z[k]);
    const double a = oracle::falling_propensity(m.reaction(r), z);
    out.mass[key] += p[i];
    s1[key] += p[i] * a;
    s2[key] += p[i] * a * a;
  }
  for (const auto& [k, w] : out.mass) {
    out.mean[k] = s1[k] / w;
    out.var[k] = std::max(0.0, s2[k] / w - out.mean[k] * out.mean[k]);
  }
  return out;
}

}  // namespace

TEST(DetectAnalytic, CascadeClassification) {
  const ModelSpec spec = builtin_model("linear-cascade", 5);
  EXPECT_TRUE(detect_analytic(spec.model, spec.partition, 5));   // S1 -> 0
  EXPECT_TRUE(detect_analytic(spec.model, spec.partition, 1));   // S1 -> S2
  EXPECT_FALSE(detect_analytic(spec.model, spec.partition, 4));  // S4 -> S5
  EXPECT_EQ(table_reactions(spec.model, spec.partition), (std::vector<std::size_t>{4}));
}

TEST(DetectAnalytic, NoNuisanceNeedsNoTables) {
  const ModelSpec spec = builtin_model("toy-chain");
  EXPECT_TRUE(table_reactions(spec.model, spec.partition).empty());
}

TEST(AffineFit, RecoversAffineData) {
  const TruncatedSpace box = enumerate_space({0, 0}, {4, 3});
  TableSlice s;
  s.value.assign(box.size(), 0.0);
  s.reliable.assign(box.size(), 0);
  s.support.assign(box.size(), 0.0);
  s.filled = true;
  auto f = [](const State& x) { return 2.0 + 0.5 * x[0] + 1.5 * x[1]; };
  for (std::size_t i : {0u, 1u, 5u, 7u, 12u}) {
    s.value[i] = f(box.state(i));
    s.reliable[i] = 1;
  }
  extrapolate_slice(box, s);
  for (std::size_t i = 0; i < box.size(); ++i) EXPECT_NEAR(s.value[i], f(box.state(i)), 1e-12);
}

TEST(AffineFit, SingleReliableCellFillsConstant) {
  const TruncatedSpace box = enumerate_space({0}, {5});
  TableSlice s{std::vector<double>(6, 0.0), std::vector<char>(6, 0), std::vector<double>(6, 0.0), true, false};
  s.value[2] = 3.25;
  s.reliable[2] = 1;
  extrapolate_slice(box, s);
  for (double v : s.value) EXPECT_EQ(v, 3.25);
}

TEST(AffineFit, NegativePredictionsClampToZero) {
  const TruncatedSpace box = enumerate_space({0}, {6});
  TableSlice s{std::vector<double>(7, 0.0), std::vector<char>(7, 0), std::vector<double>(7, 0.0), true, false};
  s.value[0] = 3.0;
  s.value[1] = 2.0;
  s.reliable[0] = s.reliable[1] = 1;
  extrapolate_slice(box, s);
  EXPECT_NEAR(s.value[2], 1.0, 1e-12);
  EXPECT_EQ(s.value[3], 0.0);
  EXPECT_EQ(s.value[6], 0.0);
  EXPECT_EQ(s.value[0], 3.0);
}

TEST(AffineFit, CollinearKeysFallBackToMean) {
  // Both coordinates move together, so only one direction is identifiable.
  const AffineFit fit = AffineFit::fit({{0, 0}, {1, 1}, {2, 2}}, {1.0, 2.0, 3.0});
  for (const auto& key : {std::vector<double>{1.5, 1.5}, std::vector<double>{4.0, 0.0}})
    EXPECT_NEAR(fit(key), 2.0, 1e-12);
}

TEST(AffineFit, AllUnreliableThrows) {
  const TruncatedSpace box = enumerate_space({0}, {3});
  TableSlice s{std::vector<double>(4, 0.0), std::vector<char>(4, 0), std::vector<double>(4, 0.0), true, false};
  try {
    extrapolate_slice(box, s);
    FAIL() << "expected AllUnreliable";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AllUnreliable);
  }
}

TEST(FillSlice, ConstantPropensityGivesConstantCells) {
  const TruncatedSpace box = enumerate_space({0}, {4});
  CellMap cells;
  for (int x : {0, 1, 3}) {
    CellStats c;
    c.weight = c.count = 12.0 + x;
    c.sums = {0.7 * c.weight};
    cells[{x}] = c;
  }
  TableSlice s;
  ASSERT_TRUE(fill_slice(cells, 0, box, {}, {ReliabilityRule::Kind::Count, 10.0}, s));
  for (int x : {0, 1, 3}) {
    EXPECT_TRUE(s.reliable[static_cast<std::size_t>(x)]);
    EXPECT_DOUBLE_EQ(s.value[static_cast<std::size_t>(x)], 0.7);
  }
  EXPECT_FALSE(s.reliable[2]);
}

TEST(FillSlice, CountRuleMarksSparseCellsUnreliable) {
  const TruncatedSpace box = enumerate_space({0}, {2});
  CellMap cells;
  cells[{0}] = CellStats{9.0, 9.0, {9.0}};
  cells[{1}] = CellStats{10.0, 10.0, {20.0}};
  TableSlice s;
  ASSERT_TRUE(fill_slice(cells, 0, box, {}, {ReliabilityRule::Kind::Count, 10.0}, s));
  EXPECT_FALSE(s.reliable[0]);
  EXPECT_TRUE(s.reliable[1]);
  EXPECT_EQ(s.value[0], 2.0);  // constant fill from the single reliable cell
}

TEST(CmpEstimate, SingleProjectedStateTakesWeightedMean) {
  const ModelSpec spec = builtin_model("toy-three");
  const TruncatedSpace box = enumerate_space({0}, {5});
  const ObservedPath path = flat_path({0}, 1.0);
  const TimeGrid grid = TimeGrid::for_path(path, 0.5);
  auto tables = make_tables(spec.model, spec.partition, box, grid);
  Ensemble e = pf_init(InitialDistribution::deterministic({2, 0, 0}), spec.partition, 3, 1);
  e.particles[0].v = {2, 1};
  e.particles[1].v = {2, 3};
  e.particles[2].v = {2, 4};
  e.particles[0].log_w = std::log(2.0);
  e.particles[1].log_w = std::log(1.0);
  e.particles[2].log_w = std::log(1.0);
  cmp_estimate(e, spec.model, spec.partition, path.t0_value, 0, 0, tables);
  for (const auto& t : tables) {
    const double rate = spec.model.reaction(t->reaction()).rate;
    const TableSlice& s = t->slice(0, 0);
    EXPECT_TRUE(s.reliable[2]);
    EXPECT_NEAR(s.value[2], rate * (2 * 1 + 3 + 4) / 4.0, 1e-12);
    for (std::size_t x : {0u, 1u, 3u, 4u, 5u}) EXPECT_FALSE(s.reliable[x]);
  }
}

TEST(CmpEstimate, MatchesExactFilteredConditionalMean) {
  const ModelSpec spec = builtin_model("toy-three");
  const std::vector<int> y{1};
  const double t = 0.8;
  const std::size_t M = 10000;
  Ensemble e = pf_init(spec.initial, spec.partition, M, 12);
  pf_propagate(e, spec.model, spec.partition, y, 0, t);

  const ObservedPath path = flat_path(y, t);
  const TimeGrid grid({GridSegment{0.0, t, 1}});
  const TruncatedSpace box = enumerate_space({0}, {20});
  auto tables = make_tables(spec.model, spec.partition, box, grid);
  cmp_estimate(e, spec.model, spec.partition, y, 0, 2, tables);

  const oracle::Box hb{{0, 0}, {20, 20}};
  const auto pf = oracle::filter_series(spec.model, {0, 1}, {2}, path, hb,
                                        oracle::product_initial(spec.initial, {0, 1}, hb), {{0, t}})[0];
  std::vector<double> w;
  relative_weights(e, w);
  for (const auto& table : tables) {
    const auto& r = spec.model.reaction(table->reaction());
    std::size_t checked = 0;
    for (int a = 0; a <= 20; ++a) {
      const TableSlice& s = table->slice(0, 2);
      if (!s.reliable[static_cast<std::size_t>(a)]) continue;
      double num = 0.0, den = 0.0;
      for (int b = 0; b <= 20; ++b) {
        const double p = pf[hb.index({a, b})];
        num += p * oracle::falling_propensity(r, {a, b, y[0]});
        den += p;
      }
      const double exact = num / den;
      const double est = s.value[static_cast<std::size_t>(a)];
      // Delta-method standard error of the self-normalized cell estimate.
      double sw = 0.0, sv = 0.0;
      for (std::size_t i = 0; i < e.size(); ++i) {
        if (e.particles[i].v[0] != a) continue;
        const double ai = oracle::falling_propensity(r, {a, e.particles[i].v[1], y[0]});
        sw += w[i];
        sv += w[i] * w[i] * (ai - est) * (ai - est);
      }
      const double se = std::sqrt(sv) / sw;
      EXPECT_NEAR(est, exact, 3.0 * se + 1e-12) << "reaction " << table->reaction() << " A = " << a;
      ++checked;
    }
    EXPECT_GE(checked, 3u);
  }
}

TEST(UmpEstimate, MatchesExactConditionalMeanFromCme) {
  const ModelSpec spec = builtin_model("toy-three");
  const double T = 0.5;
  const ObservedPath path = flat_path({1}, T);
  const TimeGrid grid({GridSegment{0.0, T, 5}});
  const TruncatedSpace box = enumerate_space({0}, {20});
  const std::size_t M = 10000;
  auto tables = ump_estimate(spec.model, spec.partition, spec.initial, path, grid, box, M, 3);

  const oracle::Box full{{0, 0, 0}, {20, 20, 20}};
  const auto g = oracle::build_generator(spec.model, {0, 1, 2}, {}, {}, full);
  const auto pT = oracle::evolve(g, oracle::product_initial(spec.initial, {0, 1, 2}, full), T);
  for (const auto& table : tables) {
    const auto cm = conditional_moments(spec.model, table->reaction(), full, pT, {0, 2});
    const TableSlice& s = table->slice(0, grid.segment(0).node_count() - 1);
    std::size_t checked = 0;
    for (int a = 0; a <= 20; ++a) {
      if (!s.reliable[static_cast<std::size_t>(a)]) continue;
      const State key{a, 1};
      const double n = s.support[static_cast<std::size_t>(a)];
      const double se = std::sqrt(cm.var.at(key) / n);
      EXPECT_NEAR(s.value[static_cast<std::size_t>(a)], cm.mean.at(key), 3.0 * se + 1e-12)
          << "reaction " << table->reaction() << " A = " << a;
      ++checked;
    }
    EXPECT_GE(checked, 3u);
  }
}

TEST(UmpEstimate, ErrorShrinksAsInverseSqrtM) {
  const ModelSpec spec = builtin_model("toy-three");
  const double T = 0.5;
  const ObservedPath path = flat_path({1}, T);
  const TimeGrid grid({GridSegment{0.0, T, 2}});
  const TruncatedSpace box = enumerate_space({0}, {20});
  const oracle::Box full{{0, 0, 0}, {20, 20, 20}};
  const auto g = oracle::build_generator(spec.model, {0, 1, 2}, {}, {}, full);
  const auto pT = oracle::evolve(g, oracle::product_initial(spec.initial, {0, 1, 2}, full), T);
  const std::size_t r = table_reactions(spec.model, spec.partition).front();
  const double exact = conditional_moments(spec.model, r, full, pT, {0, 2}).mean.at({0, 1});

  std::vector<double> lx, ly;
  for (std::size_t M : {250u, 1000u, 4000u}) {
    double err = 0.0;
    const int reps = 40;
    for (int rep = 0; rep < reps; ++rep) {
      auto tables = ump_estimate(spec.model, spec.partition, spec.initial, path, grid, box, M,
                                 stream_seed(9, M, rep));
      err += std::abs(tables.front()->slice(0, 4).value[0] - exact) / reps;
    }
    lx.push_back(std::log(double(M)));
    ly.push_back(std::log(err));
  }
  EXPECT_NEAR((ly[2] - ly[0]) / (lx[2] - lx[0]), -0.5, 0.15);
}

TEST(ExactSlice, PointMassAndUniformJoint) {
  const ModelSpec spec = builtin_model("toy-three");
  const TruncatedSpace hidden = enumerate_space({0, 0}, {3, 3});
  const TruncatedSpace box = enumerate_space({0}, {3});
  const TimeGrid grid({GridSegment{0.0, 1.0, 1}});
  auto tables = make_tables(spec.model, spec.partition, box, grid);
  std::vector<double> joint(hidden.size(), 0.0);
  joint[hidden.index_of(std::vector<int>{1, 2})] = 1.0;
  const std::vector<int> y{0};
  exact_slice(spec.model, spec.partition, hidden, joint, y, 0, 0, tables);
  joint.assign(hidden.size(), 0.0);
  joint[hidden.index_of(std::vector<int>{1, 1})] = 0.5;
  joint[hidden.index_of(std::vector<int>{1, 3})] = 0.5;
  exact_slice(spec.model, spec.partition, hidden, joint, y, 0, 1, tables);
  for (const auto& t : tables) {
    const double rate = spec.model.reaction(t->reaction()).rate;
    EXPECT_DOUBLE_EQ(t->slice(0, 0).value[1], rate * 2.0);
    EXPECT_TRUE(t->slice(0, 0).reliable[1]);
    EXPECT_DOUBLE_EQ(t->slice(0, 1).value[1], rate * 2.0);
  }
}

TEST(PropensityTable, LookupAndInterpolation) {
  const TruncatedSpace box = enumerate_space({0}, {1});
  const TimeGrid grid({GridSegment{0.0, 1.0, 2}});
  for (auto mode : {Interpolation::Constant, Interpolation::Linear}) {
    PropensityTable t(0, box, grid, mode);
    for (std::size_t n = 0; n < 5; ++n) {
      TableSlice& s = t.slice(0, n);
      s.value = {double(n), 10.0 * n};
      s.reliable = {1, 1};
      s.support = {1.0, 1.0};
      s.filled = true;
    }
    const std::vector<int> z{1, 7};
    EXPECT_DOUBLE_EQ(t.lookup(z, {0, 0.5}), 20.0);
    EXPECT_DOUBLE_EQ(t.lookup(z, {0, 0.375}), mode == Interpolation::Constant ? 10.0 : 15.0);
    EXPECT_THROW(t.lookup(std::vector<int>{2, 0}, {0, 0.5}), Error);
    EXPECT_DOUBLE_EQ(t.reliable_fraction(), 1.0);
  }
  PropensityTable empty(0, box, grid);
  EXPECT_THROW(empty.lookup(std::vector<int>{0}, {0, 0.1}), Error);
}

TEST(ProjectedModel, CascadeHasFiveReactions) {
  const ModelSpec spec = builtin_model("linear-cascade", 5);
  const TruncatedSpace box = enumerate_space({0}, {10});
  const TimeGrid grid({GridSegment{0.0, 1.0, 1}});
  const auto tables = make_tables(spec.model, spec.partition, box, grid);
  const ProjectedModel pm = build_projected_model(spec.model, spec.partition, tables);
  ASSERT_EQ(pm.reaction_count(), 5u);
  EXPECT_TRUE(pm.time_dependent());
  std::size_t with_table = 0;
  for (const auto& e : pm.entries()) with_table += e.table ? 1 : 0;
  EXPECT_EQ(with_table, 1u);
  EXPECT_EQ(pm.species_names(), (std::vector<std::string>{"S1", "S5"}));
  // Analytic entries evaluate mass action on (S1, S5).
  EXPECT_DOUBLE_EQ(pm.propensity(0, std::vector<int>{3, 2}, {}), 10.0);
  EXPECT_DOUBLE_EQ(pm.propensity(1, std::vector<int>{3, 2}, {}), 15.0);
  EXPECT_DOUBLE_EQ(pm.propensity(4, std::vector<int>{3, 2}, {}), 2.0);
}

TEST(ProjectedModel, MissingTableThrows) {
  const ModelSpec spec = builtin_model("linear-cascade", 5);
  try {
    build_projected_model(spec.model, spec.partition, {});
    FAIL() << "expected MissingTable";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingTable);
  }
}

TEST(ProjectedModel, IdentityWithoutNuisance) {
  const ModelSpec spec = builtin_model("toy-chain");
  const ProjectedModel pm = build_projected_model(spec.model, spec.partition, {});
  ASSERT_EQ(pm.reaction_count(), spec.model.reaction_count());
  EXPECT_FALSE(pm.time_dependent());
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (std::size_t j = 0; j < pm.reaction_count(); ++j) {
        const std::vector<int> z{a, b};
        EXPECT_EQ(pm.propensity(j, z, {}), spec.model.propensity(j, z));
      }
  const StatePartition pp = projected_partition(spec.partition);
  EXPECT_EQ(pp.interest, (std::vector<std::size_t>{0}));
  EXPECT_EQ(pp.observed, (std::vector<std::size_t>{1}));
}
