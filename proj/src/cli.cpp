#include "srnfilter/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <cmath>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "srnfilter/bench.hpp"
#include "srnfilter/builtin.hpp"
#include "srnfilter/errors.hpp"
#include "srnfilter/filters.hpp"
#include "srnfilter/io.hpp"
#include "srnfilter/parallel.hpp"
#include "srnfilter/ssa.hpp"

namespace srnfilter {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Settings {
  std::string model;
  int d = 5;
  std::string partition;
  std::string method = "cmp";
  std::string M = "500";
  double dt = 0.0;
  std::string box;
  double T = 0.0;
  std::uint64_t seed = 1;
  std::int64_t path_seed = -1;
  std::string observed;
  std::string out;
  std::string qoi = "tail:Z1>=8";
  std::size_t reps = 30;
  std::size_t workers = 0;
  std::string resampling = "multinomial";
  std::string interpolation = "constant";
  double ess_threshold = 0.0;
  bool dry_run = false;
  bool no_ump = false;
  std::string manifest;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

int to_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::BadParam, "cannot read " + what + " from '" + s + "'");
}

// Manifest keys mirror the long flag names and take precedence over flags.
void apply_manifest(Settings& s) {
  if (s.manifest.empty()) return;
  json doc;
  try {
    doc = json::parse(read_file(s.manifest));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("manifest does not parse: ") + e.what());
  }
  auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  for (const auto& [key, v] : doc.items()) {
    if (key == "model") s.model = text(v);
    else if (key == "d") s.d = v.get<int>();
    else if (key == "partition") s.partition = text(v);
    else if (key == "method") s.method = text(v);
    else if (key == "M") s.M = v.is_array() ? [&] {
        std::string joined;
        for (const auto& m : v) joined += (joined.empty() ? "" : ",") + m.dump();
        return joined;
      }() : text(v);
    else if (key == "dt") s.dt = v.get<double>();
    else if (key == "box") s.box = text(v);
    else if (key == "T") s.T = v.get<double>();
    else if (key == "seed") s.seed = v.get<std::uint64_t>();
    else if (key == "path_seed") s.path_seed = v.get<std::int64_t>();
    else if (key == "observed") s.observed = text(v);
    else if (key == "out") s.out = text(v);
    else if (key == "qoi") s.qoi = text(v);
    else if (key == "reps") s.reps = v.get<std::size_t>();
    else if (key == "workers") s.workers = v.get<std::size_t>();
    else if (key == "resampling") s.resampling = text(v);
    else if (key == "interpolation") s.interpolation = text(v);
    else if (key == "ess_threshold") s.ess_threshold = v.get<double>();
    else if (key == "dry_run") s.dry_run = v.get<bool>();
    else if (key == "no_ump") s.no_ump = v.get<bool>();
    else throw Error(ErrorKind::BadParam, "unknown manifest key '" + key + "'");
  }
}

ModelSpec load_spec(const Settings& s) {
  if (s.model.empty()) throw Error(ErrorKind::BadParam, "--model is required");
  ModelSpec spec;
  const std::string prefix = "builtin:";
  if (s.model.rfind(prefix, 0) == 0) {
    spec = builtin_model(s.model.substr(prefix.size()), s.d);
  } else if (fs::exists(s.model)) {
    spec = load_model_json(s.model);
  } else {
    spec = builtin_model(s.model, s.d);
  }
  if (!s.partition.empty()) {
    std::vector<std::string> interest, observed;
    for (const auto& part : split(s.partition, ';')) {
      const auto eq = part.find('=');
      if (eq == std::string::npos)
        throw Error(ErrorKind::BadParam, "partition must look like interest=A,B;observed=C");
      const std::string key = part.substr(0, eq);
      const auto names = split(part.substr(eq + 1), ',');
      if (key == "interest") interest = names;
      else if (key == "observed") observed = names;
      else throw Error(ErrorKind::BadParam, "unknown partition key '" + key + "'");
    }
    repartition(spec, interest, observed);
  }
  if (s.T > 0.0) spec.horizon = s.T;
  if (s.dt > 0.0) spec.dt = s.dt;
  return spec;
}

// "lo:hi" for every hidden coordinate, or a comma list with one pair each.
void parse_box(const std::string& text, const ModelSpec& spec, FilterConfig& cfg) {
  hidden_box(spec, cfg.box_lower, cfg.box_upper);
  if (text.empty()) return;
  const auto pairs = split(text, ',');
  const std::size_t n = cfg.box_lower.size();
  if (pairs.size() != 1 && pairs.size() != n)
    throw Error(ErrorKind::BadParam, "--box needs one lo:hi pair or " + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& p = pairs.size() == 1 ? pairs[0] : pairs[i];
    const auto colon = p.find(':');
    if (colon == std::string::npos)
      throw Error(ErrorKind::BadParam, "box entry must be lo:hi, got '" + p + "'");
    cfg.box_lower[i] = to_int(p.substr(0, colon), "box lower bound");
    cfg.box_upper[i] = to_int(p.substr(colon + 1), "box upper bound");
  }
}

std::vector<std::size_t> parse_Ms(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& m : split(text, ',')) {
    const int v = to_int(m, "M");
    if (v < 1) throw Error(ErrorKind::BadParam, "M must be >= 1");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw Error(ErrorKind::BadParam, "--M is empty");
  return out;
}

FilterConfig make_config(const Settings& s, const ModelSpec& spec) {
  FilterConfig cfg;
  cfg.method = parse_method(s.method);
  cfg.M = parse_Ms(s.M).front();
  cfg.dt = spec.dt;
  parse_box(s.box, spec, cfg);
  cfg.seed = s.seed;
  cfg.workers = s.workers == 0 ? default_workers() : s.workers;
  if (s.resampling == "multinomial") cfg.resampling = Resampling::Multinomial;
  else if (s.resampling == "systematic") cfg.resampling = Resampling::Systematic;
  else throw Error(ErrorKind::BadParam, "resampling must be multinomial or systematic");
  if (s.interpolation == "constant") cfg.interpolation = Interpolation::Constant;
  else if (s.interpolation == "linear") cfg.interpolation = Interpolation::Linear;
  else throw Error(ErrorKind::BadParam, "interpolation must be constant or linear");
  cfg.ess_threshold = s.ess_threshold;
  return cfg;
}

ObservedPath obtain_path(const Settings& s, const ModelSpec& spec) {
  if (!s.observed.empty()) return load_observed_json(s.observed);
  const std::uint64_t seed =
      s.path_seed >= 0 ? static_cast<std::uint64_t>(s.path_seed) : spec.path_seed;
  return generate_path(spec, seed);
}

std::vector<std::string> names_of(const ModelSpec& spec, const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  for (std::size_t i : idx) out.push_back(spec.model.species_names()[i]);
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory '" + dir + "'");
}

template <class Writer>
void emit_file(const std::string& path, Writer&& writer) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  writer(f);
}

int cmd_simulate(const Settings& s, std::ostream& out) {
  const ModelSpec spec = load_spec(s);
  const State z0 = sample_initial(spec.initial, s.seed);
  const Trajectory traj = ssa_simulate(spec.model, z0, spec.horizon, s.seed);
  if (s.out.empty()) {
    write_trajectory_csv(out, traj, spec.model.species_names());
  } else {
    emit_file(s.out, [&](std::ostream& f) {
      write_trajectory_csv(f, traj, spec.model.species_names());
    });
  }
  return 0;
}

int cmd_observe(const Settings& s, std::ostream& out) {
  const ModelSpec spec = load_spec(s);
  const std::uint64_t seed =
      s.path_seed >= 0 ? static_cast<std::uint64_t>(s.path_seed) : s.seed;
  Trajectory truth;
  const ObservedPath path = generate_path(spec, seed, &truth);
  const auto names = names_of(spec, spec.partition.observed);
  if (s.out.empty()) {
    out << observed_to_json(path, names);
    return 0;
  }
  ensure_dir(s.out);
  write_file(s.out + "/observed.json", observed_to_json(path, names));
  emit_file(s.out + "/observed.csv", [&](std::ostream& f) { write_observed_csv(f, path, names); });
  emit_file(s.out + "/truth.csv", [&](std::ostream& f) {
    write_trajectory_csv(f, truth, spec.model.species_names());
  });
  return 0;
}

int cmd_dry_run(const Settings& s, const ModelSpec& spec, std::ostream& out) {
  FilterConfig cfg = make_config(s, spec);
  const std::size_t dx = spec.partition.interest.size();
  json doc;
  doc["model"] = spec.name;
  doc["species"] = spec.model.species_count();
  doc["reactions"] = spec.model.reaction_count();
  doc["hidden_dims"] = spec.partition.hidden_count();
  doc["interest"] = names_of(spec, spec.partition.interest);
  doc["observed"] = names_of(spec, spec.partition.observed);
  doc["full_hidden_states"] = TruncatedSpace::count(cfg.box_lower, cfg.box_upper);
  doc["projected_states"] = TruncatedSpace::count(
      std::span<const int>(cfg.box_lower).first(dx), std::span<const int>(cfg.box_upper).first(dx));
  doc["projected_reactions"] = project_stoichiometry(spec.model, spec.partition).size();
  doc["table_reactions"] = table_reactions(spec.model, spec.partition).size();
  doc["method"] = to_string(cfg.method);
  out << doc.dump(2) << '\n';
  return 0;
}

int cmd_filter(const Settings& s, std::ostream& out) {
  const ModelSpec spec = load_spec(s);
  if (s.dry_run) return cmd_dry_run(s, spec, out);
  const FilterConfig cfg = make_config(s, spec);
  const ObservedPath path = obtain_path(s, spec);
  const FilterResult result = run_filter(spec.model, spec.partition, spec.initial, path, cfg);
  if (s.out.empty()) {
    write_summary_csv(out, result);
    return 0;
  }
  ensure_dir(s.out);
  const auto observed = names_of(spec, spec.partition.observed);
  write_file(s.out + "/observed.json", observed_to_json(path, observed));
  emit_file(s.out + "/pmf.csv", [&](std::ostream& f) { write_pmf_csv(f, result); });
  emit_file(s.out + "/summary.csv", [&](std::ostream& f) { write_summary_csv(f, result); });
  write_file(s.out + "/diagnostics.json", diagnostics_json(result));
  if (!result.tables.empty())
    emit_file(s.out + "/tables.csv", [&](std::ostream& f) {
      write_table_csv(f, result.tables, path, result.coordinate_names, observed);
    });
  out << diagnostics_json(result);
  return 0;
}

int cmd_convergence(const Settings& s, std::ostream& out) {
  const ModelSpec spec = load_spec(s);
  const ObservedPath path = obtain_path(s, spec);
  ConvergenceConfig cc;
  cc.Ms = parse_Ms(s.M);
  cc.reps = s.reps;
  cc.seed = s.seed;
  cc.include_ump = !s.no_ump;
  cc.workers = s.workers;
  cc.base = make_config(s, spec);
  const TailQoi qoi = parse_qoi(s.qoi, spec);
  const ConvergenceReport report = run_convergence(spec, path, qoi, cc);
  std::ostringstream csv;
  write_convergence_csv(csv, report);
  json doc;
  doc["qoi"] = qoi.label;
  doc["q_ref"] = report.q_ref;
  doc["reference_seconds"] = report.reference_seconds;
  doc["slope_cmp"] = report.slope_cmp;
  doc["slope_pf"] = report.slope_pf;
  if (cc.include_ump) doc["slope_ump"] = report.slope_ump;
  if (!s.out.empty()) {
    ensure_dir(s.out);
    write_file(s.out + "/convergence.csv", csv.str());
    write_file(s.out + "/convergence.json", doc.dump(2) + "\n");
  }
  out << csv.str() << doc.dump(2) << '\n';
  return 0;
}

int cmd_validate(const Settings& s, std::ostream& out) {
  bool ok = true;
  for (const CheckResult& c : run_validation(s.workers == 0 ? default_workers() : s.workers)) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << "  value=" << format_double(c.value)
        << " tolerance=" << format_double(c.tolerance) << " (" << c.detail << ", "
        << format_double(std::round(c.seconds * 100.0) / 100.0) << " s)\n";
    ok = ok && c.passed;
  }
  return ok ? 0 : 3;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message) {
  json doc;
  doc["error"] = kind;
  doc["message"] = message;
  err << doc.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact-observation filtering for stochastic reaction networks", "srnfilter"};
  app.require_subcommand(1);
  Settings s;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--model", s.model, "builtin:<name>, a builtin name, or a model JSON file");
    sub->add_option("--d", s.d, "species count of linear-cascade");
    sub->add_option("--partition", s.partition, "interest=A,B;observed=C");
    sub->add_option("--T", s.T, "time horizon (model default when omitted)");
    sub->add_option("--seed", s.seed, "master seed");
    sub->add_option("--out", s.out, "output file (simulate) or directory");
    sub->add_option("--manifest", s.manifest, "JSON manifest; its keys override flags");
    sub->add_option("--workers", s.workers, "threads (0 = all hardware threads)");
  };
  auto filtering = [&](CLI::App* sub) {
    sub->add_option("--method", s.method, "ffsp | pf | ump | cmp");
    sub->add_option("--M", s.M, "sample/particle count (comma list for convergence)");
    sub->add_option("--dt", s.dt, "ODE step and table resolution");
    sub->add_option("--box", s.box, "lo:hi for all hidden species, or one pair per species");
    sub->add_option("--observed", s.observed, "observed path JSON (generated when omitted)");
    sub->add_option("--path-seed", s.path_seed, "seed of the generated observed path");
    sub->add_option("--resampling", s.resampling, "multinomial | systematic");
    sub->add_option("--interpolation", s.interpolation, "constant | linear");
    sub->add_option("--ess-threshold", s.ess_threshold, "extra resampling when ESS < x*M");
  };

  auto* simulate = app.add_subcommand("simulate", "SSA trajectory as CSV");
  common(simulate);
  auto* observe = app.add_subcommand("observe", "generate and extract an observed path");
  common(observe);
  observe->add_option("--path-seed", s.path_seed, "seed of the path (defaults to --seed)");
  auto* filter = app.add_subcommand("filter", "run a filter and write its artifacts");
  common(filter);
  filtering(filter);
  filter->add_flag("--dry-run", s.dry_run, "report state-space sizes without solving");
  auto* convergence = app.add_subcommand("convergence", "error-vs-M sweep for a tail QOI");
  common(convergence);
  filtering(convergence);
  convergence->add_option("--qoi", s.qoi, "tail:<species>>=<k>");
  convergence->add_option("--reps", s.reps, "seed repetitions per M");
  convergence->add_flag("--no-ump", s.no_ump, "skip the UMP filter");
  auto* validate = app.add_subcommand("validate", "run the oracle property suite");
  validate->add_option("--workers", s.workers, "threads (0 = all hardware threads)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, "Usage", e.what());
    return 2;
  }

  try {
    apply_manifest(s);
    if (*simulate) return cmd_simulate(s, out);
    if (*observe) return cmd_observe(s, out);
    if (*filter) return cmd_filter(s, out);
    if (*convergence) return cmd_convergence(s, out);
    return cmd_validate(s, out);
  } catch (const Error& e) {
    report_error(err, to_string(e.kind()), e.what());
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    report_error(err, "Io", e.what());
    return 2;
  } catch (const std::exception& e) {
    report_error(err, "Internal", e.what());
    return 3;
  }
}

}  // namespace srnfilter
