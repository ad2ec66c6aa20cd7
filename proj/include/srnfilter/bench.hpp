#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "srnfilter/builtin.hpp"
#include "srnfilter/filters.hpp"

namespace srnfilter {

/// P(X'_coord >= threshold) at the final time.
struct TailQoi {
  std::size_t coord = 0;  // index into X'
  int threshold = 0;
  std::string label;

  double operator()(std::span<const double> pmf, const TruncatedSpace& space) const {
    return tail_probability(pmf, space, coord, threshold);
  }
};

/// "tail:<species>>=<k>", where <species> is a species name or Z<i>
/// (1-based species index); the species must belong to X'.
TailQoi parse_qoi(const std::string& text, const ModelSpec& spec);

struct ConvergenceConfig {
  std::vector<std::size_t> Ms{125, 250, 500, 1000, 2000};
  std::size_t reps = 30;
  std::uint64_t seed = 1;
  bool include_ump = true;
  std::size_t workers = 0;  // concurrent runs; 0 = hardware threads
  FilterConfig base;        // box, dt, resampling
};

struct ConvergenceRow {
  std::string method;  // cmp | pf | ump
  std::size_t M = 0;
  double mean_error = 0.0;  // mean relative error over reps
  double ci_low = 0.0;      // 95% normal interval of the mean
  double ci_high = 0.0;
  double mean_seconds = 0.0;
  std::size_t failures = 0;  // runs that raised; scored as relative error 1
};

struct ConvergenceReport {
  double q_ref = 0.0;
  double reference_seconds = 0.0;
  std::vector<ConvergenceRow> rows;
  double slope_cmp = 0.0;  // log-log least-squares slope of mean error vs M
  double slope_pf = 0.0;
  double slope_ump = 0.0;

  const ConvergenceRow& row(const std::string& method, std::size_t M) const;
};

/// Relative error of the tail QOI for CMP, the raw PF estimate built from
/// the same particles, and UMP, averaged over `reps` seeds per M, against
/// full FFSP on cfg.base's box.
ConvergenceReport run_convergence(const ModelSpec& spec, const ObservedPath& path,
                                  const TailQoi& qoi, const ConvergenceConfig& cfg);

void write_convergence_csv(std::ostream& os, const ConvergenceReport& report);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

/// Oracle property suite behind `srnfilter validate`: SSA against the
/// analytic birth-death law, CME against SSA, projection with exact
/// propensities (unconditional and filtered), identity projection.
std::vector<CheckResult> run_validation(std::size_t workers = 1);

}  // namespace srnfilter
