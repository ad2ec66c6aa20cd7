#include "srnfilter/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "srnfilter/errors.hpp"

namespace srnfilter {

Reaction make_reaction(std::vector<int> consumed, std::vector<int> produced,
                       double rate) {
  Reaction r;
  r.net.resize(std::max(consumed.size(), produced.size()), 0);
  for (std::size_t i = 0; i < r.net.size(); ++i) {
    const int minus = i < consumed.size() ? consumed[i] : 0;
    const int plus = i < produced.size() ? produced[i] : 0;
    r.net[i] = plus - minus;
  }
  r.consumed = std::move(consumed);
  r.produced = std::move(produced);
  r.rate = rate;
  return r;
}

double mass_action(double rate, std::span<const int> consumed,
                   std::span<const int> z) {
  double a = rate;
  for (std::size_t i = 0; i < consumed.size(); ++i) {
    const int need = consumed[i];
    if (need == 0) continue;
    const int have = z[i];
    if (have < need) return 0.0;
    for (int k = 0; k < need; ++k) a *= static_cast<double>(have - k);
  }
  return a;
}

SrnModel::SrnModel(std::vector<std::string> species,
                   std::vector<Reaction> reactions)
    : species_(std::move(species)), reactions_(std::move(reactions)) {}

SrnModel SrnModel::checked(std::vector<std::string> species,
                           std::vector<Reaction> reactions) {
  SrnModel model(std::move(species), std::move(reactions));
  const auto problems = validate_model(model);
  if (!problems.empty()) {
    std::ostringstream os;
    os << "invalid model:";
    for (const auto& p : problems) os << ' ' << p << ';';
    throw Error(ErrorKind::InvalidModel, os.str());
  }
  return model;
}

double SrnModel::propensity(std::size_t j, std::span<const int> z,
                            TimePoint) const {
  const Reaction& r = reactions_[j];
  return mass_action(r.rate, r.consumed, z);
}

std::size_t SrnModel::species_index(const std::string& name) const {
  const auto it = std::find(species_.begin(), species_.end(), name);
  if (it == species_.end())
    throw Error(ErrorKind::BadParam, "unknown species '" + name + "'");
  return static_cast<std::size_t>(it - species_.begin());
}

double propensity(const SrnModel& model, std::size_t j,
                  std::span<const int> z) {
  return model.propensity(j, z, {});
}

std::vector<std::string> validate_model(const SrnModel& model) {
  std::vector<std::string> out;
  const std::size_t d = model.species_count();
  std::set<std::string> seen;
  for (const auto& name : model.species_names()) {
    if (name.empty()) out.push_back("empty species name");
    if (!seen.insert(name).second)
      out.push_back("duplicate species name '" + name + "'");
  }
  for (std::size_t j = 0; j < model.reaction_count(); ++j) {
    const Reaction& r = model.reaction(j);
    const std::string tag = "reaction " + std::to_string(j) + ": ";
    if (r.consumed.size() != d || r.produced.size() != d || r.net.size() != d)
      out.push_back(tag + "stoichiometry length mismatch");
    if (!std::isfinite(r.rate)) out.push_back(tag + "non-finite rate constant");
    else if (r.rate < 0.0) out.push_back(tag + "negative rate constant");
    const std::size_t n =
        std::min({r.consumed.size(), r.produced.size(), r.net.size()});
    for (std::size_t i = 0; i < n; ++i) {
      if (r.consumed[i] < 0 || r.produced[i] < 0) {
        out.push_back(tag + "negative stoichiometric coefficient");
        break;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (r.net[i] != r.produced[i] - r.consumed[i]) {
        out.push_back(tag + "net change differs from produced - consumed");
        break;
      }
    }
  }
  return out;
}

std::vector<std::size_t> StatePartition::hidden() const {
  std::vector<std::size_t> h = interest;
  h.insert(h.end(), nuisance.begin(), nuisance.end());
  return h;
}

StatePartition StatePartition::from_names(
    const ReactionSystem& system, const std::vector<std::string>& interest,
    const std::vector<std::string>& observed) {
  const auto& names = system.species_names();
  auto index_of = [&](const std::string& n) {
    const auto it = std::find(names.begin(), names.end(), n);
    if (it == names.end())
      throw Error(ErrorKind::BadParam, "unknown species '" + n + "'");
    return static_cast<std::size_t>(it - names.begin());
  };
  StatePartition p;
  for (const auto& n : interest) p.interest.push_back(index_of(n));
  for (const auto& n : observed) p.observed.push_back(index_of(n));
  for (std::size_t i = 0; i < names.size(); ++i) {
    const bool used =
        std::find(p.interest.begin(), p.interest.end(), i) != p.interest.end() ||
        std::find(p.observed.begin(), p.observed.end(), i) != p.observed.end();
    if (!used) p.nuisance.push_back(i);
  }
  check_partition(names.size(), p);
  return p;
}

void check_partition(std::size_t species_count, const StatePartition& p) {
  std::vector<int> hits(species_count, 0);
  auto mark = [&](const std::vector<std::size_t>& idx) {
    for (std::size_t i : idx) {
      if (i >= species_count)
        throw Error(ErrorKind::BadParam, "partition index out of range");
      ++hits[i];
    }
  };
  mark(p.interest);
  mark(p.nuisance);
  mark(p.observed);
  for (std::size_t i = 0; i < species_count; ++i) {
    if (hits[i] != 1)
      throw Error(ErrorKind::BadParam,
                  "partition must cover every species exactly once (species " +
                      std::to_string(i) + ")");
  }
}

std::vector<int> slice(std::span<const int> values,
                       std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = values[idx[i]];
  return out;
}

ReactionClasses classify_reactions(const ReactionSystem& system,
                                   const StatePartition& partition) {
  ReactionClasses c;
  for (std::size_t j = 0; j < system.reaction_count(); ++j) {
    const auto nu = system.net_change(j);
    const bool touches_y =
        std::any_of(partition.observed.begin(), partition.observed.end(),
                    [&](std::size_t i) { return nu[i] != 0; });
    (touches_y ? c.observable : c.unobservable).push_back(j);
  }
  return c;
}

std::vector<std::size_t> matching_reactions(const ReactionSystem& system,
                                            const StatePartition& partition,
                                            std::span<const int> delta_y) {
  std::vector<std::size_t> out;
  for (std::size_t j : classify_reactions(system, partition).observable) {
    const auto nu = system.net_change(j);
    bool same = true;
    for (std::size_t k = 0; k < partition.observed.size(); ++k)
      same = same && nu[partition.observed[k]] == delta_y[k];
    if (same) out.push_back(j);
  }
  if (out.empty()) {
    std::ostringstream os;
    os << "no observable reaction produces the observed jump (";
    for (std::size_t k = 0; k < delta_y.size(); ++k)
      os << (k ? "," : "") << delta_y[k];
    os << ')';
    throw Error(ErrorKind::EmptyMatch, os.str());
  }
  return out;
}

std::vector<ProjectedStoichiometry> project_stoichiometry(
    const ReactionSystem& system, const StatePartition& partition) {
  std::vector<std::size_t> kept = partition.interest;
  kept.insert(kept.end(), partition.observed.begin(), partition.observed.end());
  std::vector<ProjectedStoichiometry> out;
  for (std::size_t j = 0; j < system.reaction_count(); ++j) {
    auto net = slice(system.net_change(j), kept);
    if (std::any_of(net.begin(), net.end(), [](int v) { return v != 0; }))
      out.push_back({j, std::move(net)});
  }
  return out;
}

SpeciesMarginal SpeciesMarginal::deterministic(int value) {
  return {{value}, {1.0}};
}

double SpeciesMarginal::probability_of(int value) const {
  double p = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i)
    if (support[i] == value) p += probs[i];
  return p;
}

InitialDistribution InitialDistribution::deterministic(const State& z0) {
  InitialDistribution mu;
  for (int v : z0) mu.marginals.push_back(SpeciesMarginal::deterministic(v));
  return mu;
}

std::vector<std::string> InitialDistribution::violations() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    const auto& m = marginals[i];
    const std::string tag = "initial marginal " + std::to_string(i) + ": ";
    if (m.support.empty() || m.support.size() != m.probs.size()) {
      out.push_back(tag + "support/probability size mismatch");
      continue;
    }
    if (std::any_of(m.support.begin(), m.support.end(),
                    [](int v) { return v < 0; }))
      out.push_back(tag + "negative support value");
    if (std::any_of(m.probs.begin(), m.probs.end(),
                    [](double p) { return !(p >= 0.0); }))
      out.push_back(tag + "negative probability");
    const double total = std::accumulate(m.probs.begin(), m.probs.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12)
      out.push_back(tag + "probabilities do not sum to 1");
  }
  return out;
}

void assemble_state(const StatePartition& partition, std::span<const int> hidden,
                    std::span<const int> observed, std::span<int> out) {
  std::size_t h = 0;
  for (std::size_t i : partition.interest) out[i] = hidden[h++];
  for (std::size_t i : partition.nuisance) out[i] = hidden[h++];
  for (std::size_t k = 0; k < partition.observed.size(); ++k)
    out[partition.observed[k]] = observed[k];
}

}  // namespace srnfilter
