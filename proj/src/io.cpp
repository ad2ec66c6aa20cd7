#include "srnfilter/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "srnfilter/errors.hpp"

namespace srnfilter {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kDefaultUpper = 50;

std::string names_header(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += "," + n;
  return out;
}

std::vector<int> dense_counts(const json& counts, const std::vector<std::string>& species,
                              std::vector<std::string>& problems, const std::string& tag) {
  std::vector<int> v(species.size(), 0);
  if (counts.is_null()) return v;
  if (!counts.is_object()) {
    problems.push_back(tag + " must be an object of species counts");
    return v;
  }
  for (const auto& [name, n] : counts.items()) {
    const auto it = std::find(species.begin(), species.end(), name);
    if (it == species.end()) {
      problems.push_back(tag + " names unknown species '" + name + "'");
      continue;
    }
    if (!n.is_number_integer()) {
      problems.push_back(tag + " count for '" + name + "' is not an integer");
      continue;
    }
    v[static_cast<std::size_t>(it - species.begin())] = n.get<int>();
  }
  return v;
}

SpeciesMarginal parse_marginal(const json& j, const std::string& name,
                               std::vector<std::string>& problems) {
  if (j.is_number_integer()) return SpeciesMarginal::deterministic(j.get<int>());
  if (j.is_object() && j.contains("support") && j.contains("probs")) {
    try {
      return SpeciesMarginal{j.at("support").get<std::vector<int>>(),
                             j.at("probs").get<std::vector<double>>()};
    } catch (const json::exception&) {
    }
  }
  problems.push_back("initial value of '" + name +
                     "' must be an integer or {\"support\": [...], \"probs\": [...]}");
  return SpeciesMarginal::deterministic(0);
}

ordered_json marginal_json(const SpeciesMarginal& m) {
  if (m.is_deterministic()) return m.support[0];
  ordered_json j;
  j["support"] = m.support;
  j["probs"] = m.probs;
  return j;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << content;
}

ModelSpec parse_model_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidModel, std::string("model JSON does not parse: ") + e.what());
  }
  std::vector<std::string> problems;
  ModelSpec spec;
  spec.name = doc.value("name", std::string("custom"));
  std::vector<std::string> species;
  try {
    species = doc.at("species").get<std::vector<std::string>>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::InvalidModel, "model JSON needs a \"species\" list of names");
  }
  std::vector<Reaction> reactions;
  const json rxns = doc.value("reactions", json::array());
  for (std::size_t j = 0; j < rxns.size(); ++j) {
    const std::string tag = "reaction " + std::to_string(j);
    const json& r = rxns[j];
    const auto consumed = dense_counts(r.value("consumed", json()), species, problems, tag + " consumed");
    const auto produced = dense_counts(r.value("produced", json()), species, problems, tag + " produced");
    double rate = 0.0;
    if (r.contains("rate") && r.at("rate").is_number()) rate = r.at("rate").get<double>();
    else problems.push_back(tag + ": missing numeric rate");
    reactions.push_back(make_reaction(consumed, produced, rate));
  }
  spec.model = SrnModel(species, reactions);
  for (auto& p : validate_model(spec.model)) problems.push_back(std::move(p));

  spec.initial.marginals.assign(species.size(), SpeciesMarginal::deterministic(0));
  if (doc.contains("initial")) {
    for (const auto& [name, v] : doc.at("initial").items()) {
      const auto it = std::find(species.begin(), species.end(), name);
      if (it == species.end()) {
        problems.push_back("initial value for unknown species '" + name + "'");
        continue;
      }
      spec.initial.marginals[static_cast<std::size_t>(it - species.begin())] =
          parse_marginal(v, name, problems);
    }
  }
  for (auto& p : spec.initial.violations()) problems.push_back(std::move(p));

  spec.species_lower.assign(species.size(), 0);
  spec.species_upper.assign(species.size(), kDefaultUpper);
  if (doc.contains("bounds")) {
    for (const auto& [name, b] : doc.at("bounds").items()) {
      const auto it = std::find(species.begin(), species.end(), name);
      if (it == species.end() || !b.is_array() || b.size() != 2) {
        problems.push_back("bounds entry '" + name + "' must be [lower, upper] of a species");
        continue;
      }
      const auto i = static_cast<std::size_t>(it - species.begin());
      spec.species_lower[i] = b[0].get<int>();
      spec.species_upper[i] = b[1].get<int>();
    }
  }
  spec.horizon = doc.value("horizon", 5.0);
  spec.dt = doc.value("dt", 0.01);

  if (!problems.empty()) {
    std::string msg = "invalid model:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw Error(ErrorKind::InvalidModel, msg);
  }
  std::vector<std::string> interest = species, observed;
  if (doc.contains("partition")) {
    const json& p = doc.at("partition");
    interest = p.value("interest", std::vector<std::string>{});
    observed = p.value("observed", std::vector<std::string>{});
  }
  spec.partition = StatePartition::from_names(spec.model, interest, observed);
  return spec;
}

ModelSpec load_model_json(const std::string& path) { return parse_model_json(read_file(path)); }

std::string model_to_json(const ModelSpec& spec) {
  const auto& names = spec.model.species_names();
  ordered_json doc;
  doc["name"] = spec.name;
  doc["species"] = names;
  doc["reactions"] = ordered_json::array();
  for (const Reaction& r : spec.model.reactions()) {
    ordered_json jr;
    jr["consumed"] = ordered_json::object();
    jr["produced"] = ordered_json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (r.consumed[i]) jr["consumed"][names[i]] = r.consumed[i];
      if (r.produced[i]) jr["produced"][names[i]] = r.produced[i];
    }
    jr["rate"] = r.rate;
    doc["reactions"].push_back(jr);
  }
  for (std::size_t i = 0; i < names.size(); ++i)
    doc["initial"][names[i]] = marginal_json(spec.initial.marginals[i]);
  auto pick = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    for (std::size_t i : idx) out.push_back(names[i]);
    return out;
  };
  doc["partition"]["interest"] = pick(spec.partition.interest);
  doc["partition"]["observed"] = pick(spec.partition.observed);
  for (std::size_t i = 0; i < names.size(); ++i)
    doc["bounds"][names[i]] = {spec.species_lower[i], spec.species_upper[i]};
  doc["horizon"] = spec.horizon;
  doc["dt"] = spec.dt;
  return doc.dump(2) + "\n";
}

std::string observed_to_json(const ObservedPath& path,
                             const std::vector<std::string>& observed_names) {
  ordered_json doc;
  doc["species"] = observed_names;
  doc["t0_value"] = path.t0_value;
  doc["jump_times"] = path.jump_times;
  doc["values"] = path.values;
  doc["horizon"] = path.horizon;
  return doc.dump(2) + "\n";
}

ObservedPath parse_observed_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    ObservedPath p;
    p.t0_value = doc.at("t0_value").get<std::vector<int>>();
    p.jump_times = doc.value("jump_times", std::vector<double>{});
    p.values = doc.value("values", std::vector<std::vector<int>>{});
    p.horizon = doc.at("horizon").get<double>();
    p.check();
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("observed path JSON is malformed: ") + e.what());
  }
}

ObservedPath load_observed_json(const std::string& path) {
  return parse_observed_json(read_file(path));
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& names) {
  os << "time" << names_header(names) << '\n';
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    os << format_double(traj.times[i]);
    for (int v : traj.states[i]) os << ',' << v;
    os << '\n';
  }
}

void write_observed_csv(std::ostream& os, const ObservedPath& path,
                        const std::vector<std::string>& observed_names) {
  os << "time" << names_header(observed_names) << '\n';
  os << 0;
  for (int v : path.t0_value) os << ',' << v;
  os << '\n';
  for (std::size_t k = 0; k < path.jump_count(); ++k) {
    os << format_double(path.jump_times[k]);
    for (int v : path.values[k]) os << ',' << v;
    os << '\n';
  }
}

void write_pmf_csv(std::ostream& os, const FilterResult& result) {
  os << "time" << names_header(result.coordinate_names) << ",prob\n";
  State x(result.space.dims());
  for (std::size_t t = 0; t < result.times.size(); ++t) {
    const std::string time = format_double(result.times[t]);
    for (std::size_t idx = 0; idx < result.space.size(); ++idx) {
      result.space.state(idx, x);
      os << time;
      for (int v : x) os << ',' << v;
      os << ',' << format_double(result.pmfs[t][idx]) << '\n';
    }
  }
}

void write_summary_csv(std::ostream& os, const FilterResult& result) {
  os << "time";
  for (const auto& n : result.coordinate_names) os << ",mean_" << n << ",var_" << n;
  os << ",ess,leak\n";
  for (std::size_t t = 0; t < result.times.size(); ++t) {
    os << format_double(result.times[t]);
    for (std::size_t c = 0; c < result.coordinate_names.size(); ++c)
      os << ',' << format_double(result.mean[t][c]) << ',' << format_double(result.var[t][c]);
    os << ',' << format_double(result.ess[t]) << ',' << format_double(result.leak[t]) << '\n';
  }
}

std::string diagnostics_json(const FilterResult& result) {
  const FilterDiagnostics& d = result.diagnostics;
  ordered_json doc;
  doc["method"] = to_string(result.method);
  doc["state_count"] = d.state_count;
  doc["table_count"] = d.table_count;
  doc["leak"] = d.leak;
  doc["reliable_fraction"] = d.reliable_fraction;
  doc["extrapolated_fraction"] = d.extrapolated_fraction;
  doc["carried_slices"] = d.carried_slices;
  doc["table_gap"] = d.table_gap;
  if (std::isnan(d.min_ess)) doc["min_ess"] = nullptr;
  else doc["min_ess"] = d.min_ess;
  doc["wall_seconds"] = d.wall_seconds;
  doc["emitted_times"] = result.times.size();
  return doc.dump(2) + "\n";
}

void write_table_csv(std::ostream& os, const std::vector<TablePtr>& tables,
                     const ObservedPath& path, const std::vector<std::string>& interest_names,
                     const std::vector<std::string>& observed_names) {
  os << "reaction,time" << names_header(interest_names) << names_header(observed_names)
     << ",value,reliable,support\n";
  for (const auto& table : tables) {
    const TimeGrid& grid = table->grid();
    State x(table->box().dims());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto y = path.value_in_segment(k);
      const GridSegment& seg = grid.segment(k);
      for (std::size_t node = 0; node < seg.node_count(); ++node) {
        const TableSlice& s = table->slice(k, node);
        if (!s.filled) continue;
        const std::string time = format_double(seg.node_time(node));
        for (std::size_t idx = 0; idx < table->box().size(); ++idx) {
          table->box().state(idx, x);
          os << table->reaction() << ',' << time;
          for (int v : x) os << ',' << v;
          for (int v : y) os << ',' << v;
          os << ',' << format_double(s.value[idx]) << ',' << int(s.reliable[idx]) << ','
             << format_double(s.support[idx]) << '\n';
        }
      }
    }
  }
}

void write_ensemble_csv(std::ostream& os, const Ensemble& ens,
                        const std::vector<std::string>& hidden_names) {
  os << "particle_id" << names_header(hidden_names) << ",log_weight\n";
  for (std::size_t i = 0; i < ens.size(); ++i) {
    os << i;
    for (int v : ens.particles[i].v) os << ',' << v;
    os << ',' << format_double(ens.particles[i].log_w) << '\n';
  }
}

}  // namespace srnfilter
