#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "magsim/commands.hpp"
#include "magsim/config.hpp"
#include "magsim/errors.hpp"
#include "magsim/model.hpp"
#include "magsim/operators.hpp"
#include "magsim/selftest.hpp"
#include "magsim/tomography.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace magsim;

namespace {

DensityMatrix magnon_state(const ComplexMatrix& rho) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) {
    throw Error(ErrorKind::InvalidDimension, "density matrix must be square and non-empty");
  }
  return {HilbertLayout::magnon_only(static_cast<std::size_t>(rho.rows())), rho};
}

RunConfig config_from_text(const std::string& text) { return config_from_json(json::parse(text)); }

}  // namespace

PYBIND11_MODULE(_magsim, m) {
  m.doc() = "Qutrit-magnon pulse simulator and Wigner tomography (C++ core).";
  m.attr("__version__") = kVersion;

  static py::exception<Error> error(m, "MagsimError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def("default_config", [] { return to_json(RunConfig{}).dump(); });
  m.def(
      "load_config",
      [](const std::string& path, const std::vector<std::string>& overrides) {
        return to_json(load_config(path, overrides)).dump();
      },
      py::arg("path") = "", py::arg("overrides") = std::vector<std::string>{});
  m.def("command_names", &command_names);
  m.def(
      "run_command",
      [](const std::string& name, const std::string& config) {
        CommandOutput out;
        {
          py::gil_scoped_release release;
          out = run_command(name, config_from_text(config));
        }
        return py::make_tuple(out.summary, out.result.dump());
      },
      py::arg("name"), py::arg("config"));
  m.def("selftest", [] {
    std::ostringstream s;
    const bool ok = run_selftest(s);
    return py::make_tuple(ok, s.str());
  });

  m.def(
      "effective_coupling_mhz",
      [](const std::string& config) { return effective_coupling(config_from_text(config).physical); },
      py::arg("config"));

  m.def("fock_annihilation", &fock_annihilation, py::arg("dim"));
  m.def("displacement", &displacement, py::arg("alpha"), py::arg("dim"));
  m.def("parity", &parity, py::arg("dim"));
  m.def("fock_state", &fock_state, py::arg("n"), py::arg("dim"));
  m.def("coherent_state", &coherent_state, py::arg("alpha"), py::arg("dim"));

  m.def(
      "wigner_analytic",
      [](const ComplexMatrix& rho, Complex alpha) { return wigner_analytic(magnon_state(rho), alpha); },
      py::arg("rho"), py::arg("alpha"));
  m.def("alpha_grid_square", &alpha_grid_square, py::arg("n"), py::arg("half_width"));
  m.def("nnls", [](const RealMatrix& a, const RealVector& b) { return nnls(a, b); }, py::arg("a"), py::arg("b"));
  m.def("project_to_simplex", &project_to_simplex, py::arg("v"));

  m.def(
      "analytic_map",
      [](const ComplexMatrix& rho, const std::vector<Complex>& alphas, double noise_sigma, std::uint64_t seed) {
        return to_json(analytic_map(magnon_state(rho), alphas, noise_sigma, seed)).dump();
      },
      py::arg("rho"), py::arg("alphas"), py::arg("noise_sigma") = 0.0, py::arg("seed") = 0);
  m.def(
      "reconstruct",
      [](const std::string& map, std::size_t d_rec, std::optional<ComplexVector> target, std::size_t bootstrap,
         std::uint64_t seed) {
        ReconstructOptions o;
        o.target = std::move(target);
        o.bootstrap = bootstrap;
        o.seed = seed;
        const ReconstructionResult r = reconstruct_density_matrix(wigner_map_from_json(json::parse(map)), d_rec, o);
        return py::make_tuple(r.rho.rho, to_json(r).dump());
      },
      py::arg("map"), py::arg("d_rec"), py::arg("target") = std::nullopt, py::arg("bootstrap") = 0,
      py::arg("seed") = 0);
  m.def(
      "fidelity", [](const ComplexMatrix& rho, const ComplexVector& target) { return fidelity(magnon_state(rho), target); },
      py::arg("rho"), py::arg("target"));
}
