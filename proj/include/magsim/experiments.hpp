#pragma once

// Scans behind the spectroscopy, swap and state-preparation experiments,
// plus shot-noise sampling and the deterministic parallel runner.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "magsim/lindblad.hpp"
#include "magsim/schedule.hpp"

namespace magsim {

struct Axis {
  std::string name;
  std::string unit;
  std::vector<double> values;
  bool operator==(const Axis&) const = default;
};

struct ScanResult {
  std::string quantity;
  std::string unit;
  bool is_probability = false;
  std::vector<Axis> axes;
  std::vector<double> data;    // row-major over the axes, last axis fastest
  std::vector<double> errors;  // empty or same size as data
  // One-dimensional companions along the first axis (branch frequencies,
  // spectral peaks, ...).
  std::map<std::string, std::vector<double>> series;
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t size() const;
  double at(std::size_t i, std::size_t j = 0) const;
  // Shape matches the axes, probabilities inside [0, 1].
  void validate() const;
  bool operator==(const ScanResult&) const = default;
};

nlohmann::json to_json(const ScanResult& r);
ScanResult scan_from_json(const nlohmann::json& j);
// Axis columns, then value, then std_error when present.
std::string to_csv(const ScanResult& r);

std::vector<double> linspace(double first, double last, std::size_t n);
// first, first + step, ... up to last (inclusive within 1e-9 of a step).
std::vector<double> arange(double first, double last, double step);

// ---------------------------------------------------------------------------
// Shots

struct ShotModel {
  std::size_t shots = 82500;
  std::uint64_t seed = 0;
  AssignmentMatrix assignment = AssignmentMatrix::Identity();

  void validate() const;
};

struct ReadoutEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);
// Seed for scan point `index` derived from the master seed.
std::uint64_t point_seed(std::uint64_t master, std::uint64_t index);

// Binomial draw of the assigned excited-state probability. The stream for a
// given point is seeded by point_seed(shots.seed, index).
ReadoutEstimate sample_readout(double prob, const ShotModel& shots, std::uint64_t index = 0);

// ---------------------------------------------------------------------------
// Parallel runner

// Calls fn(i) for i in [0, n) on up to `workers` threads (0: hardware
// concurrency). Results must be written by index; the first exception by
// index order is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Spectroscopy

struct Transition {
  double freq_ghz = 0.0;
  double qubit_weight = 0.0;  // |<e, 0 | state>|^2
  double f_weight = 0.0;      // |<f, 0 | state>|^2
  double hwhm_ghz = 0.0;
};

// Single-excitation transitions of the undriven (or AT-driven) two-body
// system with the magnon at magnon_freq_ghz.
std::vector<Transition> transitions(const PhysicalParams& p, double magnon_freq_ghz, double at_amplitude_mhz = 0.0);

ScanResult run_avoided_crossing(const PhysicalParams& p, const std::vector<double>& coil_grid_ma,
                                const std::vector<double>& probe_grid_ghz, std::size_t workers = 0);

// Local maxima of a sampled line, refined by a parabola through the three
// highest samples, strongest first.
std::vector<double> find_peaks(const std::vector<double>& x, const std::vector<double>& y, std::size_t max_peaks);

// Splitting between the two strongest peaks of the column at coil_ma.
double anticrossing_splitting_mhz(const ScanResult& map, double coil_ma);

// Steady-state excited population under a weak qubit probe, full Lindblad
// dynamics. Validation path for the eigenvalue spectroscopy.
double weak_probe_response(const PhysicalParams& p, double magnon_freq_ghz, double probe_ghz,
                           double probe_rabi_mhz = 0.01);

ScanResult run_at_scan(const PhysicalParams& p, const std::vector<double>& amp_grid_mhz,
                       const std::vector<double>& probe_grid_ghz, std::size_t workers = 0);

// ---------------------------------------------------------------------------
// Time-domain experiments

struct SimulationOptions {
  EvolveOptions evolve;
  std::size_t workers = 0;
  std::optional<ShotModel> shots;
};

// P+ after the swap sequence on the (detuning, tau) grid.
ScanResult run_chevron(const PhysicalParams& p, const ProtocolCalibration& calib, const std::vector<double>& tau_grid_ns,
                       const std::vector<double>& detuning_grid_mhz, const SimulationOptions& options = {});

// Single resonant column with the first-minimum time in metadata.
ScanResult run_swap(const PhysicalParams& p, const ProtocolCalibration& calib, const std::vector<double>& tau_grid_ns,
                    const SimulationOptions& options = {});

// Lowest point of the first dip deeper than half the trace range, refined by
// a parabola. The dip must climb back by a quarter of the range inside the
// grid; noise on the slopes is ignored.
double first_minimum_time(const std::vector<double>& tau, const std::vector<double>& y);

struct OscillationFit {
  double frequency_mhz = 0.0;
  double rms_residual = 0.0;
};

// Dominant oscillation frequency of a uniformly sampled trace: the Hann
// windowed spectral peak, refined by a least-squares fit of an exponentially
// damped sinusoid on a quadratic background. Throws Resolution when the trace spans fewer than
// two periods of the peak.
OscillationFit dominant_frequency(const std::vector<double>& t_ns, const std::vector<double>& y);

struct DispersionFit {
  double g_mhz = 0.0;
  double rms_residual_mhz = 0.0;
};

// Least-squares fit of f(Delta) = sqrt(4 g^2 + Delta^2).
DispersionFit fit_dispersion(const std::vector<double>& detuning_mhz, const std::vector<double>& freq_mhz);

// Per-detuning magnitude spectra (axes: detuning, frequency), the peak series
// "peak_mhz" and the fitted g in metadata.
ScanResult fourier_analysis(const ScanResult& chevron, std::size_t n_freq = 400);

// ---------------------------------------------------------------------------
// State preparation

// Base calibration refined by simulation: single-magnon transfer efficiency,
// the superposition phase offset and the displacement gain and phase.
ProtocolCalibration calibrate_protocol(const PhysicalParams& p, const ProtocolSettings& settings = {},
                                       const EvolveOptions& evolve = {});

// Full qutrit-magnon state at the end of the preparation sequence.
DensityMatrix simulate_preparation(const PhysicalParams& p, const PrepTarget& target,
                                   const ProtocolCalibration& calib, std::size_t magnon_dim,
                                   const EvolveOptions& evolve = {});

// Reduced magnon state after the preparation sequence.
DensityMatrix prepare_magnon_state(const PhysicalParams& p, const PrepTarget& target,
                                   const ProtocolCalibration& calib, std::size_t magnon_dim,
                                   const EvolveOptions& evolve = {});

}  // namespace magsim
