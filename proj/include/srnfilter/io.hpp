#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "srnfilter/builtin.hpp"
#include "srnfilter/filters.hpp"
#include "srnfilter/particle_filter.hpp"
#include "srnfilter/projection.hpp"
#include "srnfilter/trajectory.hpp"

namespace srnfilter {

/// Model JSON:
///   {"species": [...], "reactions": [{"consumed": {..}, "produced": {..}, "rate": r}],
///    "initial": {"A": 10, "B": {"support": [..], "probs": [..]}},
///    "partition": {"interest": [..], "observed": [..]}}
/// plus optional "bounds": {"A": [lo, hi]}, "horizon", "dt", "name".
/// Throws InvalidModel (with every violation) or Io.
ModelSpec parse_model_json(const std::string& text);
ModelSpec load_model_json(const std::string& path);
std::string model_to_json(const ModelSpec& spec);

std::string observed_to_json(const ObservedPath& path,
                             const std::vector<std::string>& observed_names);
ObservedPath parse_observed_json(const std::string& text);
ObservedPath load_observed_json(const std::string& path);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& names);
void write_observed_csv(std::ostream& os, const ObservedPath& path,
                        const std::vector<std::string>& observed_names);
/// Long format time,<X' names>,prob.
void write_pmf_csv(std::ostream& os, const FilterResult& result);
/// time,mean_<x>,var_<x>...,ess,leak.
void write_summary_csv(std::ostream& os, const FilterResult& result);
std::string diagnostics_json(const FilterResult& result);
/// reaction,time,<X' names>,<Y names>,value,reliable,support.
void write_table_csv(std::ostream& os, const std::vector<TablePtr>& tables,
                     const ObservedPath& path, const std::vector<std::string>& interest_names,
                     const std::vector<std::string>& observed_names);
/// particle_id,<hidden names>,log_weight.
void write_ensemble_csv(std::ostream& os, const Ensemble& ens,
                        const std::vector<std::string>& hidden_names);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Shortest round-trip text for a double.
std::string format_double(double v);

}  // namespace srnfilter
