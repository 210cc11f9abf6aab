#include "napkin/cli.hpp"
#include "napkin/error.hpp"
#include "napkin/simulation.hpp"
#include "napkin/study.hpp"
#include "napkin/verma.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace napkin;

namespace {

Dgp parse_dgp(const std::string& name) {
  for (Dgp d : {Dgp::sim1_binary, Dgp::sim1_continuous, Dgp::sim3, Dgp::sim4_binary, Dgp::confounded}) {
    if (name == to_string(d)) return d;
  }
  fail_validation("unknown DGP '" + name + "'");
}

ZKindRequest parse_z_kind(const std::string& s) {
  if (s == "auto") return ZKindRequest::automatic;
  if (s == "discrete") return ZKindRequest::discrete;
  if (s == "continuous") return ZKindRequest::continuous;
  fail_validation("z_kind must be auto, discrete or continuous");
}

py::dict dataset_columns(const Dataset& d) {
  py::dict out;
  out["w"] = Eigen::MatrixXd(d.w());
  out["z"] = d.z();
  out["x"] = d.x();
  out["y"] = d.y();
  if (d.has_confounders()) out["c"] = Eigen::MatrixXd(d.c());
  return out;
}

}  // namespace

PYBIND11_MODULE(_napkin, m) {
  m.doc() = "Napkin-graph ATE estimators";

  static py::exception<Error> napkin_error(m, "NapkinError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = napkin_error;
      PyErr_SetObject(err.ptr(), py::make_tuple(e.what(), to_string(e.kind())).ptr());
    }
  });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const Eigen::MatrixXd& w, std::vector<double> z, std::vector<int> x, std::vector<double> y,
                       std::optional<Eigen::MatrixXd> c, const std::string& z_kind, int level_cap) {
             return Dataset(RowMatrix(w), std::move(z), std::move(x), std::move(y), c ? RowMatrix(*c) : RowMatrix(),
                            parse_z_kind(z_kind), level_cap);
           }),
           py::arg("w"), py::arg("z"), py::arg("x"), py::arg("y"), py::arg("c") = py::none(),
           py::arg("z_kind") = "auto", py::arg("level_cap") = 10)
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("z_discrete", &Dataset::z_discrete)
      .def_property_readonly("z_levels", &Dataset::z_levels)
      .def("columns", &dataset_columns);

  m.def(
      "estimate_json",
      [](const Dataset& data, const std::string& config_json, const std::string& x0) {
        const RunConfig cfg = parse_config(config_json);
        std::vector<std::string> out;
        for (const auto& r : run_configured(data, cfg, parse_x0(x0))) out.push_back(result_json(r));
        return out;
      },
      py::arg("data"), py::arg("config_json"), py::arg("x0") = "ate");

  m.def(
      "simulate_json",
      [](const std::string& scenario, std::size_t n, std::size_t reps, std::uint64_t seed, unsigned threads,
         bool points) {
        Scenario s = default_scenario(scenario);
        if (n > 0) s.n = n;
        if (reps > 0) s.reps = reps;
        s.seed = seed;
        py::gil_scoped_release release;
        return report_json(run_study(s, threads), points);
      },
      py::arg("scenario"), py::arg("n") = 0, py::arg("reps") = 0, py::arg("seed") = 1, py::arg("threads") = 1,
      py::arg("points") = false);

  m.def(
      "sample",
      [](const std::string& dgp, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        return sample(parse_dgp(dgp), n, rng);
      },
      py::arg("dgp"), py::arg("n"), py::arg("seed"));

  m.def(
      "population_truth", [](const std::string& dgp) { return population_truth(parse_dgp(dgp)); }, py::arg("dgp"));

  m.def(
      "optimal_alpha_binary",
      [](const std::vector<double>& if0, const std::vector<double>& if1) {
        return optimal_alpha_binary(if0, if1).alpha(0);
      },
      py::arg("if0"), py::arg("if1"));

  m.def("scenario_ids", &scenario_ids);
}
