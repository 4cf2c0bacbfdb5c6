#include "magsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "magsim/errors.hpp"

namespace magsim {

namespace {

constexpr double kMHz = 1e-3;  // MHz -> GHz

double angular(double ghz) { return kTwoPi * ghz; }

}  // namespace

void PhysicalParams::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::Config, what); };
  if (!(t1_qubit_us > 0.0)) fail("t1_qubit_us must be positive");
  if (!(t_phi_qubit_us > 0.0)) fail("t_phi_qubit_us must be positive");
  if (!(t1_magnon_ns > 0.0)) fail("t1_magnon_ns must be positive");
  if (qubit_cavity_coupling_mhz < 0.0) fail("qubit_cavity_coupling_mhz must be non-negative");
  if (magnon_cavity_coupling_mhz < 0.0) fail("magnon_cavity_coupling_mhz must be non-negative");
  if (effective_coupling_override_mhz && *effective_coupling_override_mhz < 0.0) {
    fail("effective_coupling_override_mhz must be non-negative");
  }
  if (magnon_dephasing_per_us < 0.0) fail("magnon_dephasing_per_us must be non-negative");
  if (qubit_thermal_occupation < 0.0 || magnon_thermal_occupation < 0.0) {
    fail("thermal occupations must be non-negative");
  }
  if (cavity_linewidth_mhz < 0.0) fail("cavity_linewidth_mhz must be non-negative");
  if (coil_map.slope_ghz_per_ma == 0.0) fail("coil_map.slope_ghz_per_ma must be non-zero");
}

bool PhysicalParams::dispersive_guard_holds() const {
  const double g_max = std::max(qubit_cavity_coupling_mhz, magnon_cavity_coupling_mhz) * kMHz;
  const double limit = dispersive_guard_ratio * g_max;
  return std::abs(qubit_freq_ghz - cavity_freq_ghz) >= limit &&
         std::abs(magnon_idle_freq_ghz - cavity_freq_ghz) >= limit;
}

double effective_coupling(const PhysicalParams& p) {
  if (p.effective_coupling_override_mhz) return *p.effective_coupling_override_mhz;
  if (!p.dispersive_guard_holds()) {
    std::ostringstream msg;
    msg << "qubit or magnon is within " << p.dispersive_guard_ratio
        << " bare couplings of the cavity; the virtual-photon coupling formula does not apply";
    throw Error(ErrorKind::DispersiveRegime, msg.str());
  }
  const double delta_m = (p.magnon_idle_freq_ghz - p.cavity_freq_ghz) / kMHz;
  const double delta_q = (p.qubit_freq_ghz - p.cavity_freq_ghz) / kMHz;
  const double g = 0.5 * p.magnon_cavity_coupling_mhz * p.qubit_cavity_coupling_mhz *
                   (1.0 / delta_m + 1.0 / delta_q);
  return std::abs(g);
}

ATDoublet at_doublet(double drive_rabi_mhz, double detuning_mhz, const PhysicalParams& p) {
  if (drive_rabi_mhz < 0.0) {
    throw Error(ErrorKind::DegenerateInput, "at_doublet: drive amplitude must be non-negative");
  }
  if (drive_rabi_mhz == 0.0 && detuning_mhz == 0.0) {
    throw Error(ErrorKind::DegenerateInput, "at_doublet: undriven and resonant, doublet undefined");
  }
  const double root = std::hypot(detuning_mhz, drive_rabi_mhz);
  ATDoublet d;
  // tan(theta) = Omega / (root - Delta). At Omega = 0 the limit is pi/2 for
  // Delta > 0 (|+> becomes |f>) and 0 for Delta < 0 (|+> stays |e>).
  d.theta = std::atan2(drive_rabi_mhz, root - detuning_mhz);
  if (drive_rabi_mhz == 0.0) d.theta = detuning_mhz > 0.0 ? kPi / 2.0 : 0.0;
  d.omega_plus_ghz = p.qubit_freq_ghz + 0.5 * (detuning_mhz + root) * kMHz;
  d.omega_minus_ghz = p.qubit_freq_ghz + 0.5 * (detuning_mhz - root) * kMHz;
  const double c = std::cos(d.theta);
  const double s = std::sin(d.theta);
  d.plus_coeffs = {c, s};
  d.minus_coeffs = {s, -c};
  return d;
}

double required_drive_amplitude(double target_shift_mhz, double detuning_mhz) {
  const double root = 2.0 * target_shift_mhz - detuning_mhz;
  if (!(root >= std::abs(detuning_mhz))) {
    std::ostringstream msg;
    msg << "no drive amplitude puts the upper AT branch " << target_shift_mhz
        << " MHz above the qubit at Delta_d = " << detuning_mhz << " MHz";
    throw Error(ErrorKind::NoSolution, msg.str());
  }
  return std::sqrt(std::max(0.0, root * root - detuning_mhz * detuning_mhz));
}

RealVector excitation_numbers(const HilbertLayout& layout) {
  const std::size_t dq = layout.qutrit_dim == 0 ? 1 : layout.qutrit_dim;
  const std::size_t dm = layout.magnon_dim == 0 ? 1 : layout.magnon_dim;
  const std::size_t dc = layout.cavity_dim == 0 ? 1 : layout.cavity_dim;
  RealVector n(layout.dimension());
  std::size_t idx = 0;
  for (std::size_t q = 0; q < dq; ++q) {
    const double nq = (layout.qutrit_dim != 0 && q > 0) ? 1.0 : 0.0;
    for (std::size_t m = 0; m < dm; ++m) {
      for (std::size_t c = 0; c < dc; ++c) {
        n(static_cast<Eigen::Index>(idx++)) = nq + static_cast<double>(layout.magnon_dim ? m : 0) +
                                              static_cast<double>(layout.cavity_dim ? c : 0);
      }
    }
  }
  return n;
}

namespace {

// 3x3 qutrit block carrying the AT drive: diagonal (g, e, f) energies and the
// e<->f coupling.
Eigen::Matrix3cd at_block(const PhysicalParams& p, double at_amp_mhz, double at_phase,
                          double at_carrier_mhz) {
  const double frame = p.magnon_idle_freq_ghz;
  const double delta_d = (p.at_drive_detuning_mhz - at_carrier_mhz) * kMHz;
  Eigen::Matrix3cd h = Eigen::Matrix3cd::Zero();
  h(1, 1) = angular(p.qubit_freq_ghz - frame);
  h(2, 2) = angular(p.qubit_freq_ghz - frame + delta_d);
  const Complex c = 0.5 * angular(at_amp_mhz * kMHz) * std::exp(kI * at_phase);
  h(1, 2) = c;
  h(2, 1) = std::conj(c);
  return h;
}

}  // namespace

Eigen::Vector3cd qubit_excited_state(const PhysicalParams& p, double at_amplitude_mhz, double at_phase_rad,
                                     double at_carrier_detuning_mhz) {
  Eigen::Vector3cd v = Eigen::Vector3cd::Zero();
  if (at_amplitude_mhz <= 0.0) {
    v(1) = 1.0;
    return v;
  }
  const double delta = p.at_drive_detuning_mhz - at_carrier_detuning_mhz;
  const ATDoublet d = at_doublet(at_amplitude_mhz, delta, p);
  v(1) = d.plus_coeffs(0);
  v(2) = d.plus_coeffs(1) * std::exp(-kI * at_phase_rad);
  return v;
}

double drive_carrier_ghz(const PhysicalParams& p, const DriveSample& d) {
  switch (d.channel) {
    case Channel::QubitXY: return p.qubit_freq_ghz - p.magnon_idle_freq_ghz + d.carrier_detuning_mhz * kMHz;
    case Channel::MagnonDrive: return d.carrier_detuning_mhz * kMHz;
    case Channel::ATControl: break;
  }
  return 0.0;
}

ComplexMatrix build_hamiltonian(const PhysicalParams& p, const HilbertLayout& layout,
                                const std::vector<DriveSample>& drives, double t_ns,
                                const HamiltonianOptions& options) {
  layout.validate();
  if (layout.qutrit_dim != 3) {
    throw Error(ErrorKind::InvalidDimension, "build_hamiltonian: layout must include the qutrit");
  }
  const bool three_body = layout.cavity_dim != 0;
  const std::size_t dm = layout.magnon_dim;
  const double frame = p.magnon_idle_freq_ghz;
  const double magnon_freq = options.magnon_freq_ghz.value_or(p.magnon_idle_freq_ghz);
  const double nu = options.frame.offset_ghz;
  const double t_ref = options.frame.reference_time_ns;

  double at_amp = 0.0, at_phase = 0.0, at_carrier = 0.0;
  bool at_seen = false;
  for (const auto& d : drives) {
    if (d.channel != Channel::ATControl) continue;
    if (at_seen) throw Error(ErrorKind::Assembly, "build_hamiltonian: two AT drives active at once");
    at_seen = true;
    at_amp = d.amplitude_mhz;
    at_phase = d.phase_rad;
    at_carrier = d.carrier_detuning_mhz;
  }

  const Eigen::Matrix3cd qutrit_block = at_block(p, at_amp, at_phase, at_carrier);
  const ComplexMatrix b = fock_annihilation(dm);
  const ComplexMatrix bdag = b.adjoint();

  ComplexMatrix h = embed(layout, Factor::Qutrit, ComplexMatrix(qutrit_block));
  h += angular(magnon_freq - frame) * embed(layout, Factor::Magnon, number_operator(dm));

  const auto ops = qutrit_operators();
  if (!options.exchange) {
    if (three_body) {
      h += angular(p.cavity_freq_ghz - frame) *
           embed(layout, Factor::Cavity, number_operator(layout.cavity_dim));
    }
  } else if (!three_body) {
    ComplexMatrix lower = ops.lower_ge;  // |g><e|
    if (p.exchange_model == ExchangeModel::DressedQubit && at_amp > 0.0) {
      const Eigen::Vector3cd plus = qubit_excited_state(p, at_amp, at_phase, at_carrier);
      lower = ComplexMatrix::Zero(3, 3);
      lower.row(0) = plus.adjoint();  // |g><+|
    }
    const double g = angular(effective_coupling(p) * kMHz);
    const ComplexMatrix term = tensor(lower.adjoint(), b);  // sigma_+ b
    h += g * (term + term.adjoint());
  } else {
    const std::size_t dc = layout.cavity_dim;
    const ComplexMatrix a = fock_annihilation(dc);
    const ComplexMatrix idm = ComplexMatrix::Identity(dm, dm);
    const ComplexMatrix idc = ComplexMatrix::Identity(dc, dc);
    const ComplexMatrix id3 = ComplexMatrix::Identity(3, 3);
    h += angular(p.cavity_freq_ghz - frame) * embed(layout, Factor::Cavity, number_operator(dc));
    const double gq = angular(p.qubit_cavity_coupling_mhz * kMHz);
    const double gm = angular(p.magnon_cavity_coupling_mhz * kMHz);
    const ComplexMatrix qc = tensor(tensor(ops.lower_ge.adjoint(), idm), a);
    const ComplexMatrix mc = tensor(tensor(id3, bdag), a);
    h += gq * (qc + qc.adjoint()) + gm * (mc + mc.adjoint());
  }

  for (const auto& d : drives) {
    if (d.channel == Channel::ATControl || d.amplitude_mhz == 0.0) continue;
    const double carrier_ghz = drive_carrier_ghz(p, d);
    const ComplexMatrix raise = d.channel == Channel::QubitXY
                                    ? embed(layout, Factor::Qutrit, ops.lower_ge.adjoint())
                                    : embed(layout, Factor::Magnon, bdag);
    const double phi = angular(carrier_ghz - nu) * t_ns + angular(nu) * t_ref + d.phase_rad;
    const Complex c = 0.5 * angular(d.amplitude_mhz * kMHz) * std::exp(-kI * phi);
    h += c * raise + std::conj(c) * raise.adjoint();
  }

  if (nu != 0.0) {
    const RealVector n = excitation_numbers(layout);
    h.diagonal() -= (angular(nu) * n).cast<Complex>();
  }

  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (hermiticity_residual(h) > 1e-12 * scale) {
    throw Error(ErrorKind::Assembly, "build_hamiltonian: assembled matrix is not Hermitian");
  }
  return 0.5 * (h + h.adjoint());
}

}  // namespace magsim
