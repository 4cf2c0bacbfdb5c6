#pragma once

// Multi-channel pulse programs: the swap sequence, state preparation and the
// Wigner-tomography point sequence, plus the pulse calibrations they need.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "magsim/model.hpp"

namespace magsim {

enum class EnvelopeKind { Rectangular, Gaussian, Linear };

struct Envelope {
  EnvelopeKind kind = EnvelopeKind::Rectangular;
  double sigma_ns = 0.0;             // Gaussian, centred on the segment
  double start_amplitude_mhz = 0.0;  // Linear: ramps from here to the segment amplitude

  static Envelope rectangular() { return {}; }
  static Envelope gaussian(double sigma_ns) { return {EnvelopeKind::Gaussian, sigma_ns, 0.0}; }
  static Envelope linear_from(double start_mhz) { return {EnvelopeKind::Linear, 0.0, start_mhz}; }

  bool is_constant() const { return kind == EnvelopeKind::Rectangular; }
  bool operator==(const Envelope&) const = default;
};

struct PulseSegment {
  Channel channel = Channel::QubitXY;
  double start_ns = 0.0;
  double duration_ns = 0.0;
  Envelope envelope;
  double amplitude_mhz = 0.0;
  double phase_rad = 0.0;
  double carrier_detuning_mhz = 0.0;

  double end_ns() const { return start_ns + duration_ns; }
  bool active_at(double t_ns) const { return t_ns >= start_ns && t_ns < end_ns(); }
  // Instantaneous Rabi frequency (MHz) at absolute time t inside the segment.
  double amplitude_at(double t_ns) const;
  bool operator==(const PulseSegment&) const = default;
};

struct PulseSchedule {
  std::vector<PulseSegment> segments;
  double total_duration_ns = 0.0;
  double readout_at_ns = 0.0;
  // Start of the qubit-magnon interaction window that precedes readout, when
  // the builder defines one.
  std::optional<double> window_start_ns;

  // Positive durations, non-negative amplitudes, no same-channel overlap,
  // readout after the last segment and inside the schedule.
  void validate() const;
  std::vector<DriveSample> drives_at(double t_ns) const;
  // Segment edges, sorted and de-duplicated.
  std::vector<double> edges() const;
  double last_segment_end() const;

  bool operator==(const PulseSchedule&) const = default;
};

std::string to_string(Channel c);
Channel channel_from_string(const std::string& s);

nlohmann::json to_json(const PulseSchedule& s);
PulseSchedule schedule_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Calibration

struct PiPulseSettings {
  Envelope envelope = Envelope::gaussian(12.0);
  double duration_ns = 48.0;
  // Also search the carrier to absorb the drive-induced Stark shift.
  bool calibrate_carrier = true;
  double max_infidelity = 1e-3;
};

struct PiPulse {
  double amplitude_mhz = 0.0;
  double duration_ns = 0.0;
  double carrier_detuning_mhz = 0.0;  // relative to the bare qubit line
  Envelope envelope;
  double infidelity = 1.0;
};

// Pulse that takes |g> to the excited qubit state (|+> of the doublet driven
// at at_amplitude_mhz, or |e> when it is zero), found on the isolated qutrit
// without decoherence. Throws Calibration when the residual infidelity stays
// above settings.max_infidelity.
PiPulse calibrate_pi_pulse_at(const PhysicalParams& p, double at_amplitude_mhz,
                              const PiPulseSettings& settings = {});

// Simulated population of the excited qubit state after applying `pulse`
// (scaled by amplitude_scale) to |g> on the isolated qutrit.
double qutrit_pulse_excitation(const PhysicalParams& p, double at_amplitude_mhz, const PiPulse& pulse,
                               double amplitude_scale = 1.0, int repetitions = 1);

struct ProtocolSettings {
  double work_point_ghz = 5.870;
  PiPulseSettings pi;
  std::optional<double> swap_duration_ns;  // default 1 / (4 g_mq)
  double displacement_duration_ns = 4.0;
  double at_ramp_ns = 0.0;
  bool loss_compensation = true;
  std::optional<double> overrotation_factor;
  std::size_t swap_magnon_dim = 6;
  std::size_t tomography_magnon_dim = 18;
  // Fitted drive amplitudes quoted for the experiment, carried as metadata.
  double reported_work_amplitude_mhz = 40.0;
  double reported_swap_amplitude_mhz = 131.0;
};

struct ProtocolCalibration {
  ProtocolSettings settings;
  double work_amplitude_mhz = 0.0;
  double swap_amplitude_mhz = 0.0;
  PiPulse pi;
  double swap_duration_ns = 0.0;
  // Amplitude (MHz) per unit |alpha| and the phase offset of the magnon drive.
  double displacement_mhz_per_alpha = 0.0;
  double displacement_phase_offset_rad = 0.0;
  // Magnon |1> population after the single-magnon preparation.
  double transfer_efficiency = 1.0;
  // arg <1|rho|0> of the prepared superposition when the prep pulse phase is 0.
  double superposition_phase_offset_rad = 0.0;
};

// Everything that follows from closed-form theory and the isolated-qutrit pi
// pulse search; simulation-based refinements live in experiments.
ProtocolCalibration base_calibration(const PhysicalParams& p, const ProtocolSettings& settings = {});

PiPulse calibrate_pi_pulse(const PhysicalParams& p, const ProtocolSettings& settings = {});

struct PrepTarget {
  enum class Kind { Vacuum, SingleMagnon, Superposition };
  Kind kind = Kind::Vacuum;
  Complex c{1.0, 0.0};

  static PrepTarget vacuum() { return {Kind::Vacuum, {0.0, 0.0}}; }
  static PrepTarget single_magnon() { return {Kind::SingleMagnon, {0.0, 0.0}}; }
  static PrepTarget superposition(Complex c) { return {Kind::Superposition, c}; }

  // (|0> + c|1>)/sqrt(1 + |c|^2) style ideal magnon state.
  ComplexVector ideal_state(std::size_t dim) const;
  std::string name() const;
};

PrepTarget prep_target_from_string(const std::string& s);

// Qubit rotation angle used for the target, after optional loss compensation.
double prep_rotation_angle(const PrepTarget& target, const ProtocolCalibration& calib);

PulseSchedule seq_swap(const PhysicalParams& p, double tau_ns, double magnon_detuning_mhz,
                       const ProtocolCalibration& calib);
PulseSchedule seq_state_prep(const PhysicalParams& p, const PrepTarget& target,
                             const ProtocolCalibration& calib);
PulseSchedule seq_wigner_point(const PulseSchedule& prep, Complex alpha, double tau_ns,
                               const ProtocolCalibration& calib);


}  // namespace magsim
