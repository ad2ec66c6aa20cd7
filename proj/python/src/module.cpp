#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "srnfilter/builtin.hpp"
#include "srnfilter/cli.hpp"
#include "srnfilter/errors.hpp"
#include "srnfilter/filters.hpp"
#include "srnfilter/io.hpp"
#include "srnfilter/ssa.hpp"

namespace py = pybind11;
using namespace srnfilter;

namespace {

// A builtin name, or model JSON text when it starts with '{'.
ModelSpec resolve(const std::string& model, int d) {
  if (!model.empty() && model.front() == '{') return parse_model_json(model);
  return builtin_model(model, d);
}

py::array_t<double> matrix(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size(), m = n ? rows.front().size() : 0;
  py::array_t<double> out({n, m});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) v(i, j) = rows[i][j];
  return out;
}

py::dict simulate(const std::string& model, int d, std::uint64_t seed) {
  const ModelSpec spec = resolve(model, d);
  const Trajectory traj = ssa_simulate(spec.model, sample_initial(spec.initial, seed), spec.horizon, seed);
  py::array_t<int> states({traj.states.size(), spec.model.species_count()});
  auto s = states.mutable_unchecked<2>();
  for (std::size_t i = 0; i < traj.states.size(); ++i)
    for (std::size_t j = 0; j < spec.model.species_count(); ++j) s(i, j) = traj.states[i][j];
  py::dict out;
  out["species"] = spec.model.species_names();
  out["times"] = py::array_t<double>(traj.times.size(), traj.times.data());
  out["states"] = states;
  return out;
}

std::string observe(const std::string& model, int d, std::uint64_t seed) {
  const ModelSpec spec = resolve(model, d);
  std::vector<std::string> names;
  for (std::size_t i : spec.partition.observed) names.push_back(spec.model.species_names()[i]);
  return observed_to_json(generate_path(spec, seed), names);
}

py::dict run(const std::string& model, int d, const std::string& method, std::size_t M,
             std::uint64_t seed, std::int64_t path_seed, const std::string& observed_json,
             std::size_t workers) {
  const ModelSpec spec = resolve(model, d);
  const ObservedPath path =
      !observed_json.empty() ? parse_observed_json(observed_json)
                             : generate_path(spec, path_seed >= 0 ? std::uint64_t(path_seed) : spec.path_seed);
  FilterConfig cfg;
  cfg.method = parse_method(method);
  cfg.M = M;
  cfg.seed = seed;
  cfg.dt = spec.dt;
  cfg.workers = workers;
  hidden_box(spec, cfg.box_lower, cfg.box_upper);
  FilterResult r;
  {
    py::gil_scoped_release release;
    r = run_filter(spec.model, spec.partition, spec.initial, path, cfg);
  }
  std::vector<std::vector<double>> states;
  for (std::size_t i = 0; i < r.space.size(); ++i) {
    const State x = r.space.state(i);
    states.emplace_back(x.begin(), x.end());
  }
  py::dict out;
  out["method"] = to_string(r.method);
  out["coordinates"] = r.coordinate_names;
  out["times"] = py::array_t<double>(r.times.size(), r.times.data());
  out["states"] = matrix(states);
  out["pmf"] = matrix(r.pmfs);
  out["mean"] = matrix(r.mean);
  out["diagnostics"] = py::module_::import("json").attr("loads")(diagnostics_json(r));
  return out;
}

py::tuple cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = run_cli(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_srnfilter, m) {
  m.doc() = "Filtering for partially observed stochastic reaction networks";
  static py::exception<Error> error(m, "SrnError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });
  m.def("builtin_names", &builtin_names);
  m.def("model_json", [](const std::string& model, int d) { return model_to_json(resolve(model, d)); },
        py::arg("model"), py::arg("d") = 5);
  m.def("simulate", &simulate, py::arg("model"), py::arg("d") = 5, py::arg("seed") = 1);
  m.def("observe", &observe, py::arg("model"), py::arg("d") = 5, py::arg("seed") = 1,
        "observed path JSON generated with the given seed");
  m.def("run_filter", &run, py::arg("model"), py::arg("d") = 5, py::arg("method") = "cmp",
        py::arg("M") = 500, py::arg("seed") = 1, py::arg("path_seed") = -1,
        py::arg("observed") = "", py::arg("workers") = 1);
  m.def("cli", &cli, py::arg("args"), "run the command line; returns (code, stdout, stderr)");
}
