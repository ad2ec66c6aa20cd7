#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "srnfilter/builtin.hpp"
#include "srnfilter/cli.hpp"
#include "srnfilter/errors.hpp"
#include "srnfilter/io.hpp"

using namespace srnfilter;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out, err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("srnfilter_test_" + name);
  fs::remove_all(p);
  return p;
}

const char* kTwoSpecies = R"({
  "name": "pair",
  "species": ["A", "B"],
  "reactions": [
    {"consumed": {}, "produced": {"A": 1}, "rate": 2.0},
    {"consumed": {"A": 2}, "produced": {"B": 1}, "rate": 0.25},
    {"consumed": {"B": 1}, "produced": {}, "rate": 1.0}
  ],
  "initial": {"A": 3, "B": {"support": [0, 1], "probs": [0.5, 0.5]}},
  "partition": {"interest": ["A"], "observed": ["B"]},
  "bounds": {"A": [0, 12], "B": [0, 6]},
  "horizon": 1.5,
  "dt": 0.02
})";

}  // namespace

TEST(ModelJson, ParsesEveryField) {
  const ModelSpec s = parse_model_json(kTwoSpecies);
  EXPECT_EQ(s.name, "pair");
  ASSERT_EQ(s.model.reaction_count(), 3u);
  EXPECT_EQ(s.model.reaction(1).consumed, (std::vector<int>{2, 0}));
  EXPECT_EQ(s.model.reaction(1).net, (std::vector<int>{-2, 1}));
  EXPECT_DOUBLE_EQ(s.model.reaction(1).rate, 0.25);
  EXPECT_EQ(s.partition.interest, (std::vector<std::size_t>{0}));
  EXPECT_EQ(s.partition.observed, (std::vector<std::size_t>{1}));
  EXPECT_EQ(s.species_upper, (std::vector<int>{12, 6}));
  EXPECT_DOUBLE_EQ(s.horizon, 1.5);
  EXPECT_DOUBLE_EQ(s.dt, 0.02);
  EXPECT_EQ(s.initial.marginals[1].support, (std::vector<int>{0, 1}));
}

TEST(ModelJson, RoundTripsThroughText) {
  const ModelSpec a = parse_model_json(kTwoSpecies);
  const ModelSpec b = parse_model_json(model_to_json(a));
  EXPECT_EQ(model_to_json(a), model_to_json(b));
  for (const auto& name : builtin_names()) {
    const ModelSpec s = builtin_model(name);
    const ModelSpec t = parse_model_json(model_to_json(s));
    EXPECT_EQ(t.model.reaction_count(), s.model.reaction_count()) << name;
    EXPECT_EQ(t.partition.interest, s.partition.interest) << name;
    EXPECT_EQ(t.species_upper, s.species_upper) << name;
  }
}

TEST(ModelJson, ReportsEveryViolation) {
  const std::string bad = R"({"species": ["A"],
    "reactions": [{"consumed": {"Q": 1}, "produced": {}, "rate": -1}],
    "initial": {"A": {"support": [0, 1], "probs": [0.5, 0.6]}}})";
  try {
    parse_model_json(bad);
    FAIL() << "expected InvalidModel";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidModel);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("Q"), std::string::npos) << msg;
    EXPECT_NE(msg.find("negative"), std::string::npos) << msg;
  }
  EXPECT_THROW(parse_model_json("{not json"), Error);
  EXPECT_THROW(parse_model_json(R"({"reactions": []})"), Error);
}

TEST(ObservedJson, RoundTrip) {
  ObservedPath p;
  p.t0_value = {2};
  p.jump_times = {0.125, 0.5, 1.0 / 3.0};
  std::sort(p.jump_times.begin(), p.jump_times.end());
  p.values = {{3}, {2}, {3}};
  p.horizon = 2.0;
  const ObservedPath q = parse_observed_json(observed_to_json(p, {"B"}));
  EXPECT_EQ(q.t0_value, p.t0_value);
  EXPECT_EQ(q.jump_times, p.jump_times);  // shortest round-trip text is exact
  EXPECT_EQ(q.values, p.values);
  EXPECT_EQ(q.horizon, p.horizon);
}

TEST(ObservedJson, RejectsMalformedAndInconsistent) {
  EXPECT_THROW(parse_observed_json("[]"), Error);
  const std::string unsorted =
      R"({"t0_value": [0], "jump_times": [0.5, 0.2], "values": [[1], [2]], "horizon": 1})";
  try {
    parse_observed_json(unsorted);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InconsistentObservation);
  }
}

TEST(Csv, Headers) {
  Trajectory traj;
  traj.times = {0.0, 0.5};
  traj.states = {{1, 2}, {2, 2}};
  std::ostringstream a;
  write_trajectory_csv(a, traj, {"A", "B"});
  EXPECT_EQ(a.str(), "time,A,B\n0,1,2\n0.5,2,2\n");

  ObservedPath p;
  p.t0_value = {0};
  p.jump_times = {0.25};
  p.values = {{1}};
  p.horizon = 1.0;
  std::ostringstream b;
  write_observed_csv(b, p, {"C"});
  EXPECT_EQ(b.str(), "time,C\n0,0\n0.25,1\n");
}

TEST(Csv, FormatDoubleIsShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(3.0), "3");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(ErrorCodes, MapKindsToExitStatus) {
  EXPECT_EQ(Error(ErrorKind::BadParam, "").exit_code(), 2);
  EXPECT_EQ(Error(ErrorKind::UnknownModel, "").exit_code(), 2);
  EXPECT_EQ(Error(ErrorKind::InvalidModel, "").exit_code(), 2);
  EXPECT_EQ(Error(ErrorKind::Degenerate, "").exit_code(), 4);
  EXPECT_EQ(Error(ErrorKind::StepUnstable, "").exit_code(), 3);
  EXPECT_EQ(Error(ErrorKind::EmptyMatch, "").exit_code(), 3);
}

TEST(Cli, UsageErrorsExitTwoWithJson) {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"filter", "--method", "kalman", "--model", "toy-chain"},
           {"filter", "--M"},
           {"frobnicate"},
           {"filter", "--model", "builtin:no-such-model"}}) {
    const CliRun r = cli(args);
    EXPECT_EQ(r.code, 2) << r.err;
    ASSERT_FALSE(r.err.empty());
    const auto doc = nlohmann::json::parse(r.err);
    EXPECT_TRUE(doc.contains("error"));
    EXPECT_TRUE(doc.contains("message"));
  }
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(cli({"--help"}).code, 0); }

TEST(Cli, DryRunReportsStateCounts) {
  const CliRun gene = cli({"filter", "--model", "builtin:bistable-gene", "--dry-run"});
  ASSERT_EQ(gene.code, 0) << gene.err;
  const auto g = nlohmann::json::parse(gene.out);
  EXPECT_EQ(g["full_hidden_states"].get<std::size_t>(), 15376u);
  EXPECT_EQ(g["hidden_dims"].get<std::size_t>(), 6u);

  const CliRun casc = cli({"filter", "--model", "linear-cascade", "--d", "8", "--dry-run"});
  ASSERT_EQ(casc.code, 0) << casc.err;
  const auto c = nlohmann::json::parse(casc.out);
  EXPECT_EQ(c["full_hidden_states"].get<std::size_t>(), 19487171u);
  EXPECT_EQ(c["projected_states"].get<std::size_t>(), 11u);
}

TEST(Cli, ManifestOverridesFlags) {
  const fs::path dir = scratch("manifest");
  fs::create_directories(dir);
  const fs::path m = dir / "run.json";
  std::ofstream(m) << R"({"model": "builtin:linear-cascade", "d": 4})";
  const CliRun r = cli({"filter", "--model", "toy-chain", "--d", "7", "--dry-run", "--manifest",
                        m.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["model"], "linear-cascade");
  EXPECT_EQ(doc["full_hidden_states"].get<std::size_t>(), 1331u);
  fs::remove_all(dir);
}

TEST(Cli, SimulateWritesTrajectoryCsv) {
  const CliRun r = cli({"simulate", "--model", "toy-chain", "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(first_line(r.out), "time,A,B");
  EXPECT_EQ(r.out, cli({"simulate", "--model", "toy-chain", "--seed", "4"}).out);
}

TEST(Cli, ObserveThenFilterProducesArtifacts) {
  const fs::path dir = scratch("artifacts");
  ASSERT_EQ(cli({"observe", "--model", "toy-chain", "--path-seed", "2", "--out",
                 (dir / "obs").string()}).code,
            0);
  EXPECT_TRUE(fs::exists(dir / "obs" / "observed.csv"));
  EXPECT_TRUE(fs::exists(dir / "obs" / "truth.csv"));
  const CliRun r = cli({"filter", "--model", "toy-chain", "--method", "cmp", "--M", "200",
                        "--observed", (dir / "obs" / "observed.json").string(), "--out",
                        (dir / "run").string(), "--workers", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"pmf.csv", "summary.csv", "diagnostics.json", "observed.json"})
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  std::ifstream pmf(dir / "run" / "pmf.csv");
  std::string header;
  std::getline(pmf, header);
  EXPECT_EQ(header, "time,A,prob");
  const auto diag = nlohmann::json::parse(r.out);
  EXPECT_TRUE(diag.contains("leak"));
  fs::remove_all(dir);
}

TEST(Cli, UmpRunWritesTableCsv) {
  const fs::path dir = scratch("tables");
  const CliRun r = cli({"filter", "--model", "toy-three", "--method", "ump", "--M", "400",
                        "--out", dir.string(), "--workers", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream tables(dir / "tables.csv");
  std::string header;
  std::getline(tables, header);
  EXPECT_EQ(header, "reaction,time,A,C,value,reliable,support");
  fs::remove_all(dir);
}

TEST(Cli, ImpossiblePathIsNumericalFailure) {
  const fs::path dir = scratch("impossible");
  fs::create_directories(dir);
  // toy-chain can never raise B by two at once.
  std::ofstream(dir / "obs.json")
      << R"({"t0_value": [0], "jump_times": [0.5], "values": [[2]], "horizon": 1})";
  const CliRun r = cli({"filter", "--model", "toy-chain", "--method", "ffsp", "--observed",
                        (dir / "obs.json").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "EmptyMatch");
  fs::remove_all(dir);
}

TEST(Cli, BadObservedFileIsUsageError) {
  const CliRun r = cli({"filter", "--model", "toy-chain", "--observed", "/nonexistent/x.json"});
  EXPECT_EQ(r.code, 2);
}
