#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nelson/cli.hpp"
#include "nelson/lemma_lab.hpp"
#include "nelson/spectral.hpp"

namespace py = pybind11;
using namespace nelson;

namespace {

ModelParams make_params(double e, double z, double lambda, double ir_shift) {
  ModelParams p;
  p.e = e;
  p.z = z;
  p.lambda = lambda;
  p.ir_shift = ir_shift;
  p.validate();
  return p;
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = cli::run(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_nelson, m) {
  m.doc() = "Numerical lab for the Nelson model.";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<DegenerateGridError>(m, "DegenerateGridError", PyExc_RuntimeError);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init(&make_params), py::arg("e") = 0.0, py::arg("z") = 1.0, py::arg("lambda_") = 1.0,
           py::arg("ir_shift") = 0.0)
      .def_readwrite("e", &ModelParams::e)
      .def_readwrite("z", &ModelParams::z)
      .def_readwrite("lambda_", &ModelParams::lambda)
      .def_readwrite("ir_shift", &ModelParams::ir_shift)
      .def("__repr__", [](const ModelParams& p) {
        std::ostringstream s;
        s << "ModelParams(e=" << p.e << ", z=" << p.z << ", lambda_=" << p.lambda << ", ir_shift=" << p.ir_shift << ")";
        return s.str();
      });

  py::class_<Estimate>(m, "Estimate")
      .def_readonly("value", &Estimate::value)
      .def_readonly("error", &Estimate::error)
      .def_readonly("divergent", &Estimate::divergent);

  py::class_<ConstantsReport>(m, "ConstantsReport")
      .def_readonly("c_I", &ConstantsReport::c_I)
      .def_readonly("c_II", &ConstantsReport::c_II)
      .def_readonly("c_A", &ConstantsReport::c_A)
      .def_readonly("c_eps", &ConstantsReport::c_eps)
      .def_readonly("phi_norm_sq", &ConstantsReport::phi_norm_sq);

  py::class_<quad::QuadResult>(m, "QuadResult")
      .def_readonly("value", &quad::QuadResult::value)
      .def_readonly("error", &quad::QuadResult::error)
      .def_readonly("n_evals", &quad::QuadResult::n_evals)
      .def_readonly("seed", &quad::QuadResult::seed)
      .def_property_readonly("method", [](const quad::QuadResult& r) { return quad::to_string(r.method); });

  py::class_<HydrogenRef>(m, "HydrogenRef")
      .def_readonly("gamma", &HydrogenRef::gamma)
      .def_readonly("E_at", &HydrogenRef::E_at)
      .def_readonly("p2_moment", &HydrogenRef::p2_moment);

  py::class_<MatrixCoefficients>(m, "MatrixCoefficients")
      .def_readonly("a4", &MatrixCoefficients::a4)
      .def_readonly("b1", &MatrixCoefficients::b1)
      .def_readonly("b2", &MatrixCoefficients::b2)
      .def_readonly("b3", &MatrixCoefficients::b3)
      .def("expansion", &MatrixCoefficients::expansion, py::arg("e"));

  py::class_<FormBoundReport>(m, "FormBoundReport")
      .def_readonly("lemma_id", &FormBoundReport::lemma_id)
      .def_readonly("alpha", &FormBoundReport::alpha)
      .def_readonly("c_star", &FormBoundReport::c_star)
      .def_readonly("margin", &FormBoundReport::margin)
      .def_readonly("unbounded", &FormBoundReport::unbounded)
      .def_readonly("gram_draws", &FormBoundReport::gram_draws)
      .def_readonly("gram_violations", &FormBoundReport::gram_violations)
      .def_readonly("reference_bound", &FormBoundReport::reference_bound)
      .def("passed", &FormBoundReport::passed, py::arg("tol") = 1e-10);

  m.def("form_factor_sq", &form_factor_sq, py::arg("k"), py::arg("lambda_"));
  m.def("coupling_constants", &coupling_constants, py::arg("params"), py::arg("tol") = 1e-14);
  m.def("inverse_power_moment", &inverse_power_moment, py::arg("s"), py::arg("lambda_"), py::arg("tol") = 1e-13);
  m.def("hydrogen_ground", &hydrogen_ground, py::arg("params"));
  m.def("binding_integral_closed", &binding_integral_closed, py::arg("lambda_"));

  m.def(
      "vev_mc",
      [](const std::string& s, const ModelParams& p, std::size_t budget, std::uint64_t seed) {
        const auto expr = wick::vev_integrand(wick::OpString::parse(s), p);
        py::gil_scoped_release release;
        return quad::integrate_mc(expr, budget, seed, p);
      },
      py::arg("string"), py::arg("params"), py::arg("budget") = 1'000'000, py::arg("seed") = 7);
  m.def(
      "vev_grid",
      [](const std::string& s, const ModelParams& p, std::size_t n) {
        return quad::integrate_grid3d(quad::reduce_two_photon(wick::vev_integrand(wick::OpString::parse(s), p), p), n);
      },
      py::arg("string"), py::arg("params"), py::arg("points") = 48);
  m.def(
      "matrix_coefficients",
      [](const ModelParams& p, std::size_t n_radial, std::size_t n_angular, std::size_t n_max) {
        const FockBasis b(build_mode_grid(n_radial, n_angular, p), n_max);
        return matrix_path_coefficients(FockOperators(b, p));
      },
      py::arg("params"), py::arg("n_radial") = 3, py::arg("n_angular") = 4, py::arg("n_max") = 3);
  m.def(
      "lemma_suite",
      [](const ModelParams& p, std::size_t n_radial, std::size_t n_angular, std::size_t n_max,
         std::vector<std::string> only) {
        const FockBasis b(build_mode_grid(n_radial, n_angular, p), n_max);
        LemmaSuiteOptions o;
        o.only = std::move(only);
        py::gil_scoped_release release;
        return lemma_suite(b, p, o);
      },
      py::arg("params"), py::arg("n_radial") = 2, py::arg("n_angular") = 3, py::arg("n_max") = 3,
      py::arg("only") = std::vector<std::string>{});
  m.def("run_cli", &run_cli, py::arg("args"),
        "Runs the command-line front end in-process; returns (exit_code, stdout, stderr).");
}
