#include "magsim/commands.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "magsim/errors.hpp"
#include "magsim/experiments.hpp"
#include "magsim/model.hpp"
#include "magsim/tomography.hpp"

namespace magsim {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

SimulationOptions sim_options(const RunConfig& c) {
  SimulationOptions o;
  o.evolve = c.evolve_options();
  o.workers = c.workers;
  o.shots = c.shot_model();
  return o;
}

ProtocolCalibration calibration(const RunConfig& c) {
  return calibrate_protocol(c.physical, c.protocol, c.evolve_options());
}

WignerOptions wigner_options(const RunConfig& c) {
  WignerOptions o;
  o.tau_grid_ns = c.tomography.tau_ns.values();
  o.n_max = c.tomography.n_max;
  o.exact_populations = c.tomography.exact_populations;
  o.shots = c.shot_model();
  o.workers = c.workers;
  o.evolve = c.evolve_options();
  return o;
}

double wigner_at_origin(const WignerMap& m) {
  for (std::size_t i = 0; i < m.alphas.size(); ++i)
    if (std::abs(m.alphas[i]) < 1e-12) return m.values[i];
  return std::nan("");
}

CommandOutput scan_output(const std::string& name, const ScanResult& r, std::string summary) {
  return {std::move(summary), to_json(r), {{name, to_csv(r)}}};
}

CommandOutput cmd_anticross(const RunConfig& c) {
  const ScanResult r = run_avoided_crossing(c.physical, c.anticross_coil_ma.values(), c.anticross_probe_ghz.values(),
                                            c.workers);
  const double coil = r.metadata["resonant_coil_ma"].get<double>();
  const double split = anticrossing_splitting_mhz(r, coil);
  return scan_output("anticross", r,
                     "anticross: splitting " + fixed(split, 3) + " MHz at " + fixed(coil, 2) + " mA (2g = " +
                         fixed(2.0 * effective_coupling(c.physical), 3) + " MHz)");
}

CommandOutput cmd_at_scan(const RunConfig& c) {
  const ScanResult r = run_at_scan(c.physical, c.at_amp_mhz.values(), c.at_probe_ghz.values(), c.workers);
  return scan_output("at-scan", r,
                     "at-scan: omega_+ reaches the magnon at " +
                         fixed(r.metadata["swap_point_amplitude_mhz"].get<double>(), 2) + " MHz drive amplitude");
}

ScanResult chevron_scan(const RunConfig& c) {
  return run_chevron(c.physical, calibration(c), c.chevron_tau_ns.values(), c.chevron_detuning_mhz.values(),
                     sim_options(c));
}

CommandOutput cmd_chevron(const RunConfig& c) {
  const ScanResult r = chevron_scan(c);
  return scan_output("chevron", r,
                     "chevron: " + std::to_string(r.axes[0].values.size()) + " detunings x " +
                         std::to_string(r.axes[1].values.size()) + " delays");
}

CommandOutput cmd_fourier(const RunConfig& c) {
  const ScanResult r = fourier_analysis(chevron_scan(c));
  return scan_output("fourier", r, "fourier: fitted g = " + fixed(r.metadata["g_fit_mhz"].get<double>(), 3) + " MHz");
}

CommandOutput cmd_swap(const RunConfig& c) {
  const ScanResult r = run_swap(c.physical, calibration(c), c.swap_tau_ns.values(), sim_options(c));
  return scan_output("swap", r,
                     "swap: first P+ minimum at " + fixed(r.metadata["first_minimum_ns"].get<double>(), 2) + " ns");
}

json rho_json(const ComplexMatrix& rho) {
  json re = json::array(), im = json::array();
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    json a = json::array(), b = json::array();
    for (Eigen::Index k = 0; k < rho.cols(); ++k) {
      a.push_back(rho(i, k).real());
      b.push_back(rho(i, k).imag());
    }
    re.push_back(a);
    im.push_back(b);
  }
  return {{"rho_real", re}, {"rho_imag", im}};
}

CommandOutput cmd_prepare(const RunConfig& c) {
  const PrepTarget target = prep_target_from_string(c.tomography.target);
  const std::size_t dim = c.protocol.tomography_magnon_dim;
  const DensityMatrix rho = prepare_magnon_state(c.physical, target, calibration(c), dim, c.evolve_options());
  const double f = fidelity(rho, target.ideal_state(dim));
  json result = rho_json(rho.rho);
  result["target"] = target.name();
  result["magnon_dim"] = dim;
  result["fidelity"] = f;
  return {"prepare: " + target.name() + " fidelity " + fixed(f, 4) + ", p1 " + fixed(rho.rho(1, 1).real(), 4),
          result,
          {{"prepare", density_matrix_csv(rho.rho)}}};
}

WignerMap map_for(const RunConfig& c, std::size_t points, double half_width) {
  return wigner_map(c.physical, prep_target_from_string(c.tomography.target), calibration(c),
                    alpha_grid_square(points, half_width), wigner_options(c));
}

CommandOutput cmd_wigner(const RunConfig& c) {
  const WignerMap m = map_for(c, c.tomography.map_points, c.tomography.map_half_width);
  return {"wigner: " + m.target + " W(0) = " + fixed(wigner_at_origin(m), 4), to_json(m), {{"wigner", to_csv(m)}}};
}

CommandOutput cmd_reconstruct(const RunConfig& c) {
  const PrepTarget target = prep_target_from_string(c.tomography.target);
  const WignerMap m = map_for(c, c.tomography.recon_points, c.tomography.recon_half_width);
  ReconstructOptions ro;
  ro.target = target.ideal_state(c.tomography.d_rec);
  ro.bootstrap = c.tomography.bootstrap;
  ro.seed = c.seed;
  const ReconstructionResult r = reconstruct_density_matrix(m, c.tomography.d_rec, ro);
  json result = to_json(r);
  result["target"] = target.name();
  result["map"] = to_json(m);
  std::string line = "reconstruct: " + target.name() + " fidelity " + fixed(*r.fidelity, 4);
  if (r.fidelity_error) line += " +- " + fixed(*r.fidelity_error, 4);
  return {line, result, {{"reconstruct", density_matrix_csv(r.rho.rho)}, {"reconstruct_map", to_csv(m)}}};
}

const std::map<std::string, std::function<CommandOutput(const RunConfig&)>>& registry() {
  static const std::map<std::string, std::function<CommandOutput(const RunConfig&)>> r = {
      {"anticross", cmd_anticross}, {"at-scan", cmd_at_scan}, {"chevron", cmd_chevron},
      {"fourier", cmd_fourier},     {"swap", cmd_swap},       {"prepare", cmd_prepare},
      {"wigner", cmd_wigner},       {"reconstruct", cmd_reconstruct},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"anticross", "at-scan", "chevron", "fourier",
                                                 "swap",      "prepare", "wigner",  "reconstruct"};
  return names;
}

CommandOutput run_command(const std::string& name, const RunConfig& config) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw Error(ErrorKind::Config, "unknown command '" + name + "'");
  return it->second(config);
}

json config_snapshot(const RunConfig& config) {
  json j = to_json(config);
  j.erase("output");
  j.erase("workers");
  return j;
}

}  // namespace magsim
