#include <gtest/gtest.h>

#include <cmath>

#include "magsim/errors.hpp"
#include "magsim/schedule.hpp"

using namespace magsim;

TEST(Segment, EnvelopesAtTime) {
  PulseSegment r{Channel::QubitXY, 10.0, 20.0, Envelope::rectangular(), 5.0};
  EXPECT_DOUBLE_EQ(r.amplitude_at(15.0), 5.0);
  EXPECT_TRUE(r.active_at(10.0));
  EXPECT_FALSE(r.active_at(30.0));
  PulseSegment g{Channel::QubitXY, 0.0, 48.0, Envelope::gaussian(12.0), 8.0};
  EXPECT_NEAR(g.amplitude_at(24.0) / g.amplitude_at(12.0), std::exp(0.5), 1e-9);
  PulseSegment lin{Channel::ATControl, 0.0, 10.0, Envelope::linear_from(40.0), 160.0};
  EXPECT_NEAR(lin.amplitude_at(5.0), 100.0, 1e-12);
}

TEST(Schedule, ValidationRejectsOverlapAndBadValues) {
  PulseSchedule s;
  s.segments = {{Channel::QubitXY, 0.0, 20.0, Envelope::rectangular(), 1.0},
                {Channel::QubitXY, 10.0, 20.0, Envelope::rectangular(), 1.0}};
  s.total_duration_ns = s.readout_at_ns = 40.0;
  EXPECT_THROW(s.validate(), Error);
  s.segments[1].channel = Channel::ATControl;
  EXPECT_NO_THROW(s.validate());
  s.segments[0].amplitude_mhz = -1.0;
  EXPECT_THROW(s.validate(), Error);
  s.segments[0].amplitude_mhz = 1.0;
  s.readout_at_ns = 25.0;
  EXPECT_THROW(s.validate(), Error);
}

TEST(Schedule, JsonRoundTrip) {
  const PhysicalParams p;
  const ProtocolCalibration c = base_calibration(p);
  const PulseSchedule s = seq_wigner_point(seq_state_prep(p, PrepTarget::superposition({0.0, 1.0}), c),
                                           Complex(0.3, -0.4), 60.0, c);
  EXPECT_EQ(schedule_from_json(to_json(s)), s);
  EXPECT_EQ(channel_from_string(to_string(Channel::MagnonDrive)), Channel::MagnonDrive);
}

TEST(PiPulse, RectangularTwoLevelAmplitude) {
  // Undressed qubit, 20 ns rectangular pulse: Omega t = pi, Omega = 2 pi x 25 MHz.
  PhysicalParams p;
  p.dissipation = false;
  PiPulseSettings s;
  s.envelope = Envelope::rectangular();
  s.duration_ns = 20.0;
  s.calibrate_carrier = false;
  const PiPulse pi = calibrate_pi_pulse_at(p, 0.0, s);
  EXPECT_NEAR(pi.amplitude_mhz, 25.0, 1e-3);
  EXPECT_LT(pi.infidelity, 1e-6);
}

TEST(PiPulse, DressedGaussianReachesPlus) {
  const PhysicalParams p;
  const ProtocolCalibration c = base_calibration(p);
  EXPECT_LT(c.pi.infidelity, 1e-3);
  EXPECT_NEAR(qutrit_pulse_excitation(p, c.work_amplitude_mhz, c.pi), 1.0, 1e-3);
  // Two pi pulses return to ground.
  EXPECT_LT(qutrit_pulse_excitation(p, c.work_amplitude_mhz, c.pi, 1.0, 2), 2e-3);
}

TEST(Calibration, DriveAmplitudesAndSwapTime) {
  const PhysicalParams p;
  const ProtocolCalibration c = base_calibration(p);
  // Upper branch at the magnon (82 MHz above the qubit) and at the work point (24 MHz).
  EXPECT_NEAR(c.swap_amplitude_mhz, required_drive_amplitude(82.0, 3.0), 1e-6);
  EXPECT_NEAR(c.work_amplitude_mhz, required_drive_amplitude(24.0, 3.0), 1e-6);
  EXPECT_NEAR(c.swap_amplitude_mhz, 161.0, 0.1);
  EXPECT_NEAR(c.work_amplitude_mhz, 44.9, 0.1);
  EXPECT_NEAR(c.swap_duration_ns, 1.0 / (4.0 * effective_coupling(p) * 1e-3), 1e-9);
  ProtocolSettings fixed;
  fixed.swap_duration_ns = 40.0;
  EXPECT_DOUBLE_EQ(base_calibration(p, fixed).swap_duration_ns, 40.0);
}

TEST(Sequences, WignerPointLayout) {
  const PhysicalParams p;
  const ProtocolCalibration c = base_calibration(p);
  const PulseSchedule prep = seq_state_prep(p, PrepTarget::single_magnon(), c);
  EXPECT_NEAR(prep.total_duration_ns, c.pi.duration_ns + c.swap_duration_ns, 1e-12);
  const PulseSchedule w = seq_wigner_point(prep, Complex(0.5, 0.0), 30.0, c);
  ASSERT_TRUE(w.window_start_ns.has_value());
  EXPECT_NEAR(*w.window_start_ns, prep.total_duration_ns + c.settings.displacement_duration_ns, 1e-12);
  EXPECT_NEAR(w.readout_at_ns, *w.window_start_ns + 30.0, 1e-12);
  const auto drives = w.drives_at(prep.total_duration_ns + 1.0);
  ASSERT_EQ(drives.size(), 1u);
  EXPECT_EQ(drives[0].channel, Channel::MagnonDrive);
  EXPECT_NEAR(drives[0].amplitude_mhz, 0.5 * c.displacement_mhz_per_alpha, 1e-12);
}

TEST(Sequences, SwapDetuningMovesTheBranch) {
  const PhysicalParams p;
  const ProtocolCalibration c = base_calibration(p);
  const PulseSchedule s = seq_swap(p, 50.0, 10.0, c);
  const auto d = s.drives_at(*s.window_start_ns + 1.0);
  ASSERT_EQ(d.size(), 1u);
  const ATDoublet at = at_doublet(d[0].amplitude_mhz, p.at_drive_detuning_mhz, p);
  EXPECT_NEAR((at.omega_plus_ghz - p.magnon_idle_freq_ghz) * 1e3, 10.0, 1e-9);
  EXPECT_THROW(seq_swap(p, -1.0, 0.0, c), Error);
}

TEST(Targets, NamesAndIdealStates) {
  const PrepTarget s = prep_target_from_string("superposition");
  const ComplexVector v = s.ideal_state(4);
  EXPECT_NEAR(std::abs(v(0)), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(std::abs(v(1)), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(prep_target_from_string("single_magnon").kind, PrepTarget::Kind::SingleMagnon);
  EXPECT_THROW(prep_target_from_string("cat"), Error);
}
