#include "srnfilter/projection.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "srnfilter/errors.hpp"
#include "srnfilter/parallel.hpp"
#include "srnfilter/ssa.hpp"

namespace srnfilter {
namespace {

constexpr std::uint64_t kUmpStream = 0x554d50;

std::vector<double> to_key(std::span<const int> x, std::span<const int> y) {
  std::vector<double> k(x.size() + y.size());
  for (std::size_t i = 0; i < x.size(); ++i) k[i] = x[i];
  for (std::size_t i = 0; i < y.size(); ++i) k[x.size() + i] = y[i];
  return k;
}

// Copies the most recent filled slice before (segment, node) into it.
void carry_forward(PropensityTable& table, std::size_t segment, std::size_t node) {
  std::size_t k = segment, i = node;
  while (true) {
    if (i > 0) {
      --i;
    } else if (k > 0) {
      --k;
      i = table.grid().segment(k).node_count() - 1;
    } else {
      throw Error(ErrorKind::AllUnreliable,
                  "no reliable cell for reaction " + std::to_string(table.reaction()) +
                      " and no earlier slice to carry forward");
    }
    const TableSlice& prev = table.slice(k, i);
    if (prev.filled) {
      TableSlice& out = table.slice(segment, node);
      out = prev;
      std::fill(out.reliable.begin(), out.reliable.end(), 0);
      std::fill(out.support.begin(), out.support.end(), 0.0);
      out.carried = true;
      return;
    }
  }
}

void fill_or_carry(const CellMap& cells, std::size_t r, std::span<const int> y,
                   const ReliabilityRule& rule, PropensityTable& table,
                   std::size_t segment, std::size_t node) {
  if (!fill_slice(cells, r, table.box(), y, rule, table.slice(segment, node)))
    carry_forward(table, segment, node);
}

}  // namespace

PropensityTable::PropensityTable(std::size_t reaction, TruncatedSpace box,
                                 TimeGrid grid, Interpolation interpolation)
    : reaction_(reaction),
      box_(std::move(box)),
      grid_(std::move(grid)),
      interpolation_(interpolation) {
  slices_.resize(grid_.size());
  for (std::size_t k = 0; k < grid_.size(); ++k)
    slices_[k].resize(grid_.segment(k).node_count());
}

double PropensityTable::lookup(std::span<const int> zprime, TimePoint at) const {
  const std::size_t idx = box_.index_of(zprime.first(box_.dims()));
  if (idx == TruncatedSpace::npos || at.segment >= slices_.size())
    throw Error(ErrorKind::TableGap, "propensity table queried outside its box");
  const GridSegment& seg = grid_.segment(at.segment);
  const auto& row = slices_[at.segment];
  const double s = seg.node_coordinate(at.time);
  const std::size_t last = row.size() - 1;
  std::size_t i0 = std::min(static_cast<std::size_t>(std::floor(s + 1e-6)), last);
  auto value = [&](std::size_t i) {
    if (!row[i].filled)
      throw Error(ErrorKind::TableGap, "propensity table slice not estimated at t = " +
                                           std::to_string(at.time));
    return row[i].value[idx];
  };
  if (interpolation_ == Interpolation::Constant) return value(i0);
  i0 = std::min(static_cast<std::size_t>(std::floor(s)), last);
  const double frac = s - static_cast<double>(i0);
  if (i0 == last || frac < 1e-9) return value(i0);
  return (1.0 - frac) * value(i0) + frac * value(i0 + 1);
}

double PropensityTable::reliable_fraction() const {
  double hit = 0.0, total = 0.0;
  for (const auto& row : slices_)
    for (const auto& s : row) {
      if (!s.filled) continue;
      total += static_cast<double>(s.reliable.size());
      hit += static_cast<double>(std::count(s.reliable.begin(), s.reliable.end(), 1));
    }
  return total > 0.0 ? hit / total : 0.0;
}

std::size_t PropensityTable::carried_slices() const {
  std::size_t n = 0;
  for (const auto& row : slices_)
    for (const auto& s : row) n += s.carried ? 1 : 0;
  return n;
}

bool detect_analytic(const SrnModel& model, const StatePartition& partition,
                     std::size_t j) {
  const auto& consumed = model.reaction(j).consumed;
  for (std::size_t i : partition.nuisance)
    if (consumed[i] > 0) return false;
  return true;
}

std::vector<std::size_t> table_reactions(const SrnModel& model,
                                         const StatePartition& partition) {
  std::vector<std::size_t> out;
  for (const auto& p : project_stoichiometry(model, partition))
    if (!detect_analytic(model, partition, p.reaction)) out.push_back(p.reaction);
  return out;
}

AffineFit AffineFit::fit(const std::vector<std::vector<double>>& keys,
                         const std::vector<double>& values) {
  AffineFit f;
  const std::size_t n = values.size();
  const std::size_t D = keys.empty() ? 0 : keys.front().size();
  f.slope.assign(D, 0.0);
  if (n == 0) return f;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  f.intercept = mean;

  std::vector<std::size_t> dims;
  for (std::size_t d = 0; d < D; ++d) {
    const auto [lo, hi] = std::minmax_element(keys.begin(), keys.end(),
        [d](const auto& a, const auto& b) { return a[d] < b[d]; });
    if ((*hi)[d] > (*lo)[d]) dims.push_back(d);
  }
  if (dims.empty() || n < dims.size() + 1) return f;

  Eigen::MatrixXd A(n, dims.size() + 1);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    for (std::size_t c = 0; c < dims.size(); ++c) A(i, c + 1) = keys[i][dims[c]];
    b(i) = values[i];
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < A.cols()) return f;
  const Eigen::VectorXd c = qr.solve(b);
  f.intercept = c(0);
  for (std::size_t k = 0; k < dims.size(); ++k) f.slope[dims[k]] = c(k + 1);
  return f;
}

double AffineFit::operator()(std::span<const double> key) const {
  double v = intercept;
  for (std::size_t d = 0; d < slope.size(); ++d) v += slope[d] * key[d];
  return v;
}

void extrapolate_slice(const TruncatedSpace& box, TableSlice& slice) {
  std::vector<std::vector<double>> keys;
  std::vector<double> values;
  for (std::size_t idx = 0; idx < box.size(); ++idx) {
    if (!slice.reliable[idx]) continue;
    keys.push_back(to_key(box.state(idx), {}));
    values.push_back(slice.value[idx]);
  }
  if (values.empty())
    throw Error(ErrorKind::AllUnreliable, "table slice has no reliable cell");
  const AffineFit fit = AffineFit::fit(keys, values);
  for (std::size_t idx = 0; idx < box.size(); ++idx)
    if (!slice.reliable[idx])
      slice.value[idx] = std::max(0.0, fit(to_key(box.state(idx), {})));
  slice.filled = true;
}

void extrapolate(PropensityTable& table) {
  for (std::size_t k = 0; k < table.grid().size(); ++k)
    for (std::size_t i = 0; i < table.grid().segment(k).node_count(); ++i)
      if (table.slice(k, i).filled) extrapolate_slice(table.box(), table.slice(k, i));
}

bool fill_slice(const CellMap& cells, std::size_t r, const TruncatedSpace& box,
                std::span<const int> y, const ReliabilityRule& rule,
                TableSlice& slice) {
  double total = 0.0;
  for (const auto& [key, c] : cells) total += c.weight;
  auto metric = [&](const CellStats& c) {
    return rule.kind == ReliabilityRule::Kind::Count ? c.count
                                                     : (total > 0.0 ? c.weight / total : 0.0);
  };
  auto is_reliable = [&](const CellStats& c) {
    return c.weight > 0.0 && metric(c) >= rule.threshold;
  };

  std::vector<std::vector<double>> keys;
  std::vector<double> values;
  for (const auto& [key, c] : cells) {
    if (!is_reliable(c)) continue;
    keys.emplace_back(key.begin(), key.end());
    values.push_back(c.sums[r] / c.weight);
  }
  if (values.empty()) return false;
  const AffineFit fit = AffineFit::fit(keys, values);

  const std::size_t N = box.size();
  slice.value.assign(N, 0.0);
  slice.reliable.assign(N, 0);
  slice.support.assign(N, 0.0);
  State key(box.dims() + y.size());
  std::copy(y.begin(), y.end(), key.begin() + static_cast<std::ptrdiff_t>(box.dims()));
  std::vector<double> query(key.size());
  for (std::size_t idx = 0; idx < N; ++idx) {
    box.state(idx, std::span<int>(key).first(box.dims()));
    const auto it = cells.find(key);
    if (it != cells.end()) {
      slice.support[idx] = metric(it->second);
      if (is_reliable(it->second)) {
        slice.reliable[idx] = 1;
        slice.value[idx] = it->second.sums[r] / it->second.weight;
        continue;
      }
    }
    for (std::size_t d = 0; d < key.size(); ++d) query[d] = key[d];
    slice.value[idx] = std::max(0.0, fit(query));
  }
  slice.filled = true;
  slice.carried = false;
  return true;
}

std::vector<TablePtr> make_tables(const SrnModel& model,
                                  const StatePartition& partition,
                                  const TruncatedSpace& box, const TimeGrid& grid,
                                  Interpolation interpolation) {
  if (box.dims() != partition.interest.size())
    throw Error(ErrorKind::BadParam, "table box dimension differs from |X'|");
  std::vector<TablePtr> out;
  for (std::size_t j : table_reactions(model, partition))
    out.push_back(std::make_shared<PropensityTable>(j, box, grid, interpolation));
  return out;
}

std::vector<TablePtr> ump_estimate(const SrnModel& model,
                                   const StatePartition& partition,
                                   const InitialDistribution& mu,
                                   const ObservedPath& path, const TimeGrid& grid,
                                   const TruncatedSpace& box, std::size_t M,
                                   std::uint64_t seed, const EstimateOptions& options) {
  if (M == 0) throw Error(ErrorKind::BadParam, "sample count M must be >= 1");
  auto tables = make_tables(model, partition, box, grid, options.interpolation);
  if (tables.empty()) return tables;
  const std::size_t R = tables.size();
  const std::size_t dx = partition.interest.size();

  std::vector<Engine> engines;
  std::vector<State> runs(M);
  engines.reserve(M);
  for (std::size_t i = 0; i < M; ++i) {
    engines.push_back(make_engine(seed, i, kUmpStream));
    runs[i] = sample_initial(mu, engines.back());
  }
  // key = (x', y) per run, followed by R propensities
  std::vector<State> keys(M, State(dx + partition.observed.size()));
  std::vector<double> props(M * R);
  const ReliabilityRule rule{ReliabilityRule::Kind::Count,
                             static_cast<double>(options.min_support)};

  double t = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const GridSegment& seg = grid.segment(k);
    const auto y = path.value_in_segment(k);
    for (std::size_t node = 0; node < seg.node_count(); ++node) {
      const double t_node = seg.node_time(node);
      parallel_for(M, M >= 64 ? options.workers : 1, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
          if (t_node > t) ssa_advance(model, runs[i], t, t_node, engines[i], options.ssa);
          for (std::size_t c = 0; c < dx; ++c) keys[i][c] = runs[i][partition.interest[c]];
          for (std::size_t c = 0; c < partition.observed.size(); ++c)
            keys[i][dx + c] = runs[i][partition.observed[c]];
          for (std::size_t r = 0; r < R; ++r)
            props[i * R + r] = model.propensity(tables[r]->reaction(), runs[i]);
        }
      });
      t = std::max(t, t_node);
      CellMap cells;
      for (std::size_t i = 0; i < M; ++i) {
        CellStats& c = cells[keys[i]];
        if (c.sums.empty()) c.sums.assign(R, 0.0);
        c.weight += 1.0;
        c.count += 1.0;
        for (std::size_t r = 0; r < R; ++r) c.sums[r] += props[i * R + r];
      }
      for (std::size_t r = 0; r < R; ++r) fill_or_carry(cells, r, y, rule, *tables[r], k, node);
    }
  }
  return tables;
}

void cmp_estimate(const Ensemble& ens, const SrnModel& model,
                  const StatePartition& partition, std::span<const int> y,
                  std::size_t segment, std::size_t node,
                  const std::vector<TablePtr>& tables,
                  const EstimateOptions& options) {
  if (tables.empty()) return;
  const std::size_t R = tables.size();
  const std::size_t dx = partition.interest.size();
  std::vector<double> w;
  relative_weights(ens, w);
  CellMap cells;
  State key(dx), z(model.species_count());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    if (w[i] == 0.0) continue;
    const State& v = ens.particles[i].v;
    std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(dx), key.begin());
    assemble_state(partition, v, y, z);
    CellStats& c = cells[key];
    if (c.sums.empty()) c.sums.assign(R, 0.0);
    c.weight += w[i];
    c.count += 1.0;
    for (std::size_t r = 0; r < R; ++r)
      c.sums[r] += w[i] * model.propensity(tables[r]->reaction(), z);
  }
  const ReliabilityRule rule{ReliabilityRule::Kind::WeightShare, options.weight_share};
  for (std::size_t r = 0; r < R; ++r)
    fill_or_carry(cells, r, {}, rule, *tables[r], segment, node);
}

void exact_slice(const SrnModel& model, const StatePartition& partition,
                 const TruncatedSpace& hidden_box, std::span<const double> joint,
                 std::span<const int> y, std::size_t segment, std::size_t node,
                 const std::vector<TablePtr>& tables) {
  if (tables.empty()) return;
  const std::size_t R = tables.size();
  const std::size_t dx = partition.interest.size();
  CellMap cells;
  State x(hidden_box.dims()), key(dx), z(model.species_count());
  for (std::size_t idx = 0; idx < hidden_box.size(); ++idx) {
    const double p = joint[idx];
    if (p == 0.0) continue;
    hidden_box.state(idx, x);
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(dx), key.begin());
    assemble_state(partition, x, y, z);
    CellStats& c = cells[key];
    if (c.sums.empty()) c.sums.assign(R, 0.0);
    c.weight += p;
    c.count += 1.0;
    for (std::size_t r = 0; r < R; ++r)
      c.sums[r] += p * model.propensity(tables[r]->reaction(), z);
  }
  const ReliabilityRule rule{ReliabilityRule::Kind::WeightShare, 0.0};
  for (std::size_t r = 0; r < R; ++r)
    fill_or_carry(cells, r, {}, rule, *tables[r], segment, node);
}

ProjectedModel::ProjectedModel(std::vector<std::string> species,
                               std::vector<Entry> entries)
    : species_(std::move(species)), entries_(std::move(entries)) {
  time_dependent_ = std::any_of(entries_.begin(), entries_.end(),
                                [](const Entry& e) { return e.table != nullptr; });
}

double ProjectedModel::propensity(std::size_t k, std::span<const int> z,
                                  TimePoint at) const {
  const Entry& e = entries_[k];
  if (!e.table) return mass_action(e.rate, e.consumed, z);
  for (std::size_t i = 0; i < e.consumed.size(); ++i)
    if (z[i] < e.consumed[i]) return 0.0;
  return e.table->lookup(z, at);
}

ProjectedModel build_projected_model(const SrnModel& model,
                                     const StatePartition& partition,
                                     const std::vector<TablePtr>& tables) {
  std::vector<std::size_t> kept = partition.interest;
  kept.insert(kept.end(), partition.observed.begin(), partition.observed.end());
  std::vector<std::string> names;
  for (std::size_t i : kept) names.push_back(model.species_names()[i]);

  std::vector<ProjectedModel::Entry> entries;
  for (auto& p : project_stoichiometry(model, partition)) {
    const Reaction& r = model.reaction(p.reaction);
    ProjectedModel::Entry e;
    e.original = p.reaction;
    e.net = std::move(p.net);
    e.consumed = slice(r.consumed, kept);
    e.rate = r.rate;
    if (!detect_analytic(model, partition, p.reaction)) {
      const auto it = std::find_if(tables.begin(), tables.end(), [&](const TablePtr& t) {
        return t && t->reaction() == p.reaction;
      });
      if (it == tables.end())
        throw Error(ErrorKind::MissingTable,
                    "no propensity table for reaction " + std::to_string(p.reaction));
      e.table = *it;
    }
    entries.push_back(std::move(e));
  }
  return ProjectedModel(std::move(names), std::move(entries));
}

StatePartition projected_partition(const StatePartition& partition) {
  StatePartition p;
  const std::size_t dx = partition.interest.size();
  for (std::size_t i = 0; i < dx; ++i) p.interest.push_back(i);
  for (std::size_t i = 0; i < partition.observed.size(); ++i) p.observed.push_back(dx + i);
  return p;
}

}  // namespace srnfilter
