#pragma once

// Physical parameters of the qutrit-magnon-cavity system and the closed-form
// theory built on them: cavity-mediated exchange coupling, Autler-Townes
// dressed states, and rotating-frame Hamiltonians.
//
// Units: frequencies are stored in GHz or MHz as the field names say, times
// in ns or us likewise. Hamiltonians are angular, in rad/ns.

#include <optional>
#include <vector>

#include "magsim/operators.hpp"

namespace magsim {

// Affine map from electromagnet coil current to Kittel-mode frequency.
struct CoilMap {
  double reference_current_ma = -4.5;
  double freq_at_reference_ghz = 5.846;
  double slope_ghz_per_ma = 0.028;

  double magnon_freq_ghz(double current_ma) const {
    return freq_at_reference_ghz + slope_ghz_per_ma * (current_ma - reference_current_ma);
  }
  double current_for(double magnon_freq_ghz) const {
    return reference_current_ma + (magnon_freq_ghz - freq_at_reference_ghz) / slope_ghz_per_ma;
  }
};

// How the magnon couples to the qutrit while the Autler-Townes drive is on.
//   DressedQubit: the magnon exchanges with the {|g>, |+>} qubit at the full
//     fitted rate g_mq (and with |g>-|e> when the drive is off).
//   Bare: the magnon couples to |g>-|e> only, so the dressed rate is
//     g_mq cos(theta).
enum class ExchangeModel { DressedQubit, Bare };

struct PhysicalParams {
  double cavity_freq_ghz = 6.388;
  double qubit_freq_ghz = 5.846;
  double anharmonicity_ghz = -0.354;
  double magnon_idle_freq_ghz = 5.928;
  double qubit_cavity_coupling_mhz = 52.6;
  double magnon_cavity_coupling_mhz = 52.6;
  std::optional<double> effective_coupling_override_mhz;

  double t1_qubit_us = 3.65;
  double t_phi_qubit_us = 9.20;
  double t1_magnon_ns = 128.0;
  // Extra hooks; zero by default.
  double magnon_dephasing_per_us = 0.0;
  double qubit_thermal_occupation = 0.0;
  double magnon_thermal_occupation = 0.0;
  double cavity_linewidth_mhz = 0.5;
  bool dissipation = true;

  // Delta_d = omega_ef - omega_d of the Autler-Townes control drive.
  double at_drive_detuning_mhz = 3.0;
  ExchangeModel exchange_model = ExchangeModel::DressedQubit;
  // Minimum |mode - cavity| detuning, in units of the largest bare coupling.
  double dispersive_guard_ratio = 5.0;

  CoilMap coil_map;

  double ef_freq_ghz() const { return qubit_freq_ghz + anharmonicity_ghz; }

  // Positive T-times, non-negative couplings and rates.
  void validate() const;
  bool dispersive_guard_holds() const;
  PhysicalParams without_dissipation() const {
    PhysicalParams q = *this;
    q.dissipation = false;
    return q;
  }
};

// g_mq / 2pi in MHz: the override when present, otherwise the second-order
// virtual-photon result |g_mc g_qc / 2 (1/Delta_m + 1/Delta_q)|.
double effective_coupling(const PhysicalParams& p);

struct ATDoublet {
  double theta = 0.0;
  double omega_plus_ghz = 0.0;
  double omega_minus_ghz = 0.0;
  // Components on (|e,N>, |f,N-1>).
  Eigen::Vector2d plus_coeffs;
  Eigen::Vector2d minus_coeffs;
};

ATDoublet at_doublet(double drive_rabi_mhz, double detuning_mhz, const PhysicalParams& p);

// Rabi frequency that places the upper AT branch target_shift_mhz above the
// bare qubit line.
double required_drive_amplitude(double target_shift_mhz, double detuning_mhz);

enum class Channel { QubitXY, ATControl, MagnonDrive };

// Instantaneous drive on one channel. Carrier detuning is relative to the
// channel frame: bare qubit line for QubitXY, omega_ef - Delta_d for
// ATControl, idle magnon line for MagnonDrive.
struct DriveSample {
  Channel channel = Channel::QubitXY;
  double amplitude_mhz = 0.0;
  double phase_rad = 0.0;
  double carrier_detuning_mhz = 0.0;
};

// Extra co-rotation of every excitation quantum by offset_ghz, with phases
// referenced to reference_time_ns. Lets a single off-resonant carrier be
// removed from the Hamiltonian.
struct RotatingFrame {
  double offset_ghz = 0.0;
  double reference_time_ns = 0.0;
};

struct HamiltonianOptions {
  RotatingFrame frame;
  // Magnon line for this evaluation; the idle frequency when unset. The
  // coupling g_mq always comes from the idle-point parameters.
  std::optional<double> magnon_freq_ghz;
  // Qubit-magnon exchange (or the cavity couplings in the three-body model).
  bool exchange = true;
};

// Carrier of a QubitXY or MagnonDrive sample in the common frame, GHz.
double drive_carrier_ghz(const PhysicalParams& p, const DriveSample& d);

// Hermitian Hamiltonian (rad/ns) in the frame where every excitation rotates
// at the idle magnon frequency and |f> additionally co-rotates with the AT
// drive. Rotating-wave approximation throughout.
ComplexMatrix build_hamiltonian(const PhysicalParams& p, const HilbertLayout& layout,
                                const std::vector<DriveSample>& drives, double t_ns,
                                const HamiltonianOptions& options = {});

// Excitation-number operator diagonal: |e> and |f> count one (f trades a
// second quantum for an AT drive photon), plus magnon and cavity quanta.
RealVector excitation_numbers(const HilbertLayout& layout);

// Qutrit state playing the role of the excited qubit: |+> of the AT doublet
// with the given drive, or |e> when the drive is off.
Eigen::Vector3cd qubit_excited_state(const PhysicalParams& p, double at_amplitude_mhz,
                                     double at_phase_rad = 0.0, double at_carrier_detuning_mhz = 0.0);

}  // namespace magsim
