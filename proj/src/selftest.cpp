#include "magsim/selftest.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "magsim/config.hpp"
#include "magsim/errors.hpp"
#include "magsim/experiments.hpp"
#include "magsim/lindblad.hpp"
#include "magsim/model.hpp"
#include "magsim/operators.hpp"
#include "magsim/tomography.hpp"

namespace magsim {

namespace {

struct Check {
  std::string name;
  std::function<bool()> fn;
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace

bool run_selftest(std::ostream& out) {
  const PhysicalParams p;
  const std::vector<Check> checks = {
      {"canonical commutator below the cutoff",
       [] {
         const std::size_t d = 8;
         const ComplexMatrix a = fock_annihilation(d);
         const ComplexMatrix c = a * a.adjoint() - a.adjoint() * a;
         return (c.topLeftCorner(d - 1, d - 1) - ComplexMatrix::Identity(d - 1, d - 1)).norm() < 1e-12;
       }},
      {"displacement is unitary and maps vacuum to a coherent state",
       [] {
         const Complex alpha{0.7, -0.4};
         const ComplexMatrix d = displacement(alpha, 30);
         const ComplexVector psi = d * fock_state(0, 30);
         return is_unitary(d, 1e-9) && std::abs(psi.dot(coherent_state(alpha, 30))) > 1.0 - 1e-9;
       }},
      {"hamiltonian is hermitian",
       [&] {
         const HilbertLayout l = HilbertLayout::two_body(4);
         return is_hermitian(build_hamiltonian(p, l, {}, 0.0), 1e-12);
       }},
      {"avoided-crossing splitting equals 2g",
       [&] {
         const auto t = transitions(p, p.qubit_freq_ghz);
         std::vector<double> f;
         for (const auto& x : t)
           if (x.qubit_weight > 0.2) f.push_back(x.freq_ghz);
         if (f.size() != 2) return false;
         const double split = std::abs(f[1] - f[0]) * 1e3;
         return near(split, 2.0 * effective_coupling(p), 0.02 * effective_coupling(p));
       }},
      {"lindblad evolution keeps trace and positivity",
       [&] {
         const HilbertLayout l = HilbertLayout::two_body(3);
         const DensityMatrix rho0 = DensityMatrix::ground(l, 1);
         PulseSchedule idle;
         idle.total_duration_ns = 100.0;
         idle.readout_at_ns = 100.0;
         EvolveDiagnostics diag;
         const auto states = evolve(p, l, idle, rho0, {0.0, 50.0, 100.0}, {}, &diag);
         for (const auto& s : states) s.validate();
         return diag.max_trace_drift < 1e-7;
       }},
      {"single-magnon wigner value at the origin is -2/pi",
       [] {
         const DensityMatrix rho = DensityMatrix::pure(HilbertLayout::magnon_only(6), fock_state(1, 6));
         return near(wigner_analytic(rho, {0.0, 0.0}), -2.0 / std::numbers::pi, 1e-9);
       }},
      {"nnls recovers a non-negative solution",
       [] {
         RealMatrix a(4, 2);
         a << 1, 0, 0, 1, 1, 1, 1, -1;
         RealVector x(2);
         x << 0.3, 0.7;
         const RealVector r = nnls(a, a * x);
         return (r - x).norm() < 1e-10;
       }},
      {"reconstruction recovers an analytic map",
       [] {
         const HilbertLayout l = HilbertLayout::magnon_only(4);
         ComplexVector psi = fock_state(0, 4) + fock_state(1, 4);
         psi.normalize();
         const DensityMatrix rho = DensityMatrix::pure(l, psi);
         const WignerMap m = analytic_map(rho, alpha_grid_square(5, 1.0));
         ReconstructOptions o;
         o.target = psi;
         return *reconstruct_density_matrix(m, 4, o).fidelity > 1.0 - 1e-6;
       }},
      {"shot sampling is reproducible",
       [] {
         ShotModel s;
         s.shots = 1000;
         s.seed = 7;
         return sample_readout(0.3, s, 5).estimate == sample_readout(0.3, s, 5).estimate;
       }},
      {"configuration round-trips through json",
       [] {
         const RunConfig c = load_config("", {"seed=11", "experiments.tomography.target=\"vacuum\""});
         const nlohmann::json j = to_json(c);
         return to_json(config_from_json(j)) == j && c.seed == 11 && c.tomography.target == "vacuum";
       }},
      {"unknown configuration keys are rejected",
       [] {
         try {
           load_config("", {"physical.no_such_key=1"});
         } catch (const Error& e) {
           return e.kind() == ErrorKind::Config;
         }
         return false;
       }},
  };

  bool ok = true;
  for (const auto& c : checks) {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
      pass = c.fn();
    } catch (const std::exception& e) {
      detail = std::string(" (") + e.what() + ")";
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    out << (pass ? "PASS " : "FAIL ") << c.name << detail << " [" << static_cast<long>(ms) << " ms]\n";
    ok = ok && pass;
  }
  out << (ok ? "selftest: all checks passed" : "selftest: failures") << "\n";
  return ok;
}

}  // namespace magsim
