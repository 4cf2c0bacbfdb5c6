#include <gtest/gtest.h>

#include <cmath>

#include "magsim/errors.hpp"
#include "magsim/lindblad.hpp"

using namespace magsim;

namespace {

PulseSchedule idle(double duration) {
  PulseSchedule s;
  s.total_duration_ns = s.readout_at_ns = duration;
  return s;
}

PulseSchedule at_only(double amplitude, double duration) {
  PulseSchedule s = idle(duration);
  s.segments.push_back({Channel::ATControl, 0.0, duration, Envelope::rectangular(), amplitude});
  return s;
}

// |q, n> in the two-body layout.
ComplexVector ket(const HilbertLayout& l, const ComplexVector& q, std::size_t n) {
  ComplexVector v = ComplexVector::Zero(Eigen::Index(l.dimension()));
  for (Eigen::Index k = 0; k < 3; ++k) v(k * Eigen::Index(l.magnon_dim) + Eigen::Index(n)) = q(k);
  return v;
}

ComplexVector qutrit(int level) {
  ComplexVector q = ComplexVector::Zero(3);
  q(level) = 1.0;
  return q;
}

PhysicalParams uncoupled() {
  PhysicalParams p;
  p.effective_coupling_override_mhz = 0.0;
  return p;
}

}  // namespace

TEST(Dissipator, RatesAndTraceFreedom) {
  const PhysicalParams p;
  const HilbertLayout l = HilbertLayout::two_body(4);
  const auto ops = collapse_set(p, l);
  EXPECT_EQ(ops.size(), 4u);  // eg, fe relaxation, qubit dephasing, magnon decay
  const std::size_t d = l.dimension();
  const SparseMatrix lind = dissipator_superoperator(ops, d);
  // Trace preservation: vec(I)^dagger L = 0.
  ComplexVector id = ComplexVector::Zero(Eigen::Index(d * d));
  for (std::size_t i = 0; i < d; ++i) id(Eigen::Index(i * d + i)) = 1.0;
  EXPECT_LT((lind.adjoint() * id).norm(), 1e-14);
  EXPECT_TRUE(collapse_set(p.without_dissipation(), l).empty());
}

TEST(ExpmAction, MatchesDenseExponential) {
  const PhysicalParams p;
  const HilbertLayout l = HilbertLayout::two_body(2);
  const ComplexMatrix h = build_hamiltonian(p, l, {{Channel::ATControl, 100.0, 0.0, 0.0}}, 0.0);
  const std::size_t d = l.dimension();
  const SparseMatrix lv = hamiltonian_superoperator(h) + dissipator_superoperator(collapse_set(p, l), d);
  ComplexVector v = ComplexVector::Random(Eigen::Index(d * d));
  const ComplexMatrix dense = ComplexMatrix(lv);
  for (double t : {0.1, 7.3, 60.0}) {
    EXPECT_LT((expm_action(lv, t, v) - matrix_exp(dense * t) * v).norm(), 1e-10 * v.norm());
  }
}

TEST(Evolve, MagnonEnergyDecay) {
  const PhysicalParams p = uncoupled();
  const HilbertLayout l = HilbertLayout::two_body(4);
  const std::vector<double> times = {0.0, 50.0, 128.0, 300.0};
  const auto states = evolve(p, l, idle(300.0), DensityMatrix::ground(l, 1), times);
  const ComplexMatrix n = embed(l, Factor::Magnon, number_operator(4));
  for (std::size_t k = 0; k < times.size(); ++k)
    EXPECT_NEAR(expectation(states[k], n), std::exp(-times[k] / p.t1_magnon_ns), 1e-9);
}

TEST(Evolve, ThermalSteadyState) {
  PhysicalParams p = uncoupled();
  p.magnon_thermal_occupation = 0.05;
  const HilbertLayout l = HilbertLayout::two_body(6);
  const auto s = evolve(p, l, idle(4000.0), DensityMatrix::ground(l), {4000.0}).front();
  EXPECT_NEAR(expectation(s, embed(l, Factor::Magnon, number_operator(6))), 0.05, 1e-5);
}

TEST(Evolve, QubitRelaxationAndDephasing) {
  const PhysicalParams p = uncoupled();
  const HilbertLayout l = HilbertLayout::two_body(2);
  const ComplexVector plus = (ket(l, qutrit(0), 0) + ket(l, qutrit(1), 0)) / std::sqrt(2.0);
  const double t = 2000.0;
  const auto s = evolve(p, l, idle(t), DensityMatrix::pure(l, plus), {t}).front();
  const double t1 = p.t1_qubit_us * 1e3, tphi = p.t_phi_qubit_us * 1e3;
  EXPECT_NEAR(readout_qubit_excited(s), 0.5 * std::exp(-t / t1), 1e-9);
  // |g,0> = 0, |e,0> = 2.
  EXPECT_NEAR(std::abs(s.rho(0, 2)), 0.5 * std::exp(-t / (2.0 * t1) - t / tphi), 1e-9);
}

TEST(Evolve, DampedSwapFirstMinimumClosedForm) {
  // Only magnon loss: c+(t) = exp(-k t / 4) [cos w t + k / (4 w) sin w t] with
  // w = sqrt(g^2 - k^2 / 16); the first zero is (pi/2 + atan(k / 4w)) / w.
  PhysicalParams p;
  p.t1_qubit_us = 1e9;
  p.t_phi_qubit_us = 1e9;
  const ProtocolCalibration c = base_calibration(p);
  const double g = kTwoPi * effective_coupling(p) * 1e-3, k = 1.0 / p.t1_magnon_ns;
  const double w = std::sqrt(g * g - k * k / 16.0);
  const double t_star = (kPi / 2.0 + std::atan(k / (4.0 * w))) / w;

  const HilbertLayout l = HilbertLayout::two_body(3);
  const ComplexVector plus = qubit_excited_state(p, c.swap_amplitude_mhz);
  std::vector<double> times;
  for (double t = t_star - 1.0; t <= t_star + 1.0; t += 0.01) times.push_back(t);
  const auto states = evolve(p, l, at_only(c.swap_amplitude_mhz, 60.0), DensityMatrix::pure(l, ket(l, plus, 0)), times);
  std::size_t best = 0;
  for (std::size_t i = 0; i < states.size(); ++i)
    if (readout_qubit_excited(states[i]) < readout_qubit_excited(states[best])) best = i;
  EXPECT_NEAR(times[best], t_star, 0.011);
  EXPECT_LT(readout_qubit_excited(states[best]), 1e-5);
  // Magnon loss alone moves the minimum beyond 1 / (4 g).
  EXPECT_GT(t_star, 1.0 / (4.0 * effective_coupling(p) * 1e-3) + 1.5);
}

TEST(Physicality, WignerSequenceTrajectory) {
  const PhysicalParams p;
  const ProtocolCalibration c = base_calibration(p);
  const HilbertLayout l = HilbertLayout::two_body(8);
  const PulseSchedule s =
      seq_wigner_point(seq_state_prep(p, PrepTarget::superposition(1.0), c), Complex(0.5, 0.3), 40.0, c);
  std::vector<double> times;
  for (double t = 0.0; t <= s.total_duration_ns; t += 2.5) times.push_back(t);
  EvolveDiagnostics diag;
  const auto states = evolve(p, l, s, DensityMatrix::ground(l), times, {}, &diag);
  EXPECT_LE(diag.max_trace_drift, 1e-7);
  EXPECT_LE(diag.max_hermiticity_residual, 1e-9);
  EXPECT_GE(diag.min_eigenvalue, -1e-8);
  for (const auto& st : states) EXPECT_NO_THROW(st.validate());

  EvolveOptions fine;
  fine.rk4_step_ns = 0.025;
  const auto halved = evolve(p, l, s, DensityMatrix::ground(l), times, fine);
  double worst = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i)
    worst = std::max(worst, std::abs(readout_qubit_excited(states[i]) - readout_qubit_excited(halved[i])));
  EXPECT_LE(worst, 1e-6);
}

TEST(Evolve, StartTimeContinuation) {
  const PhysicalParams p;
  const ProtocolCalibration c = base_calibration(p);
  const HilbertLayout l = HilbertLayout::two_body(4);
  const PulseSchedule s = seq_swap(p, 30.0, 0.0, c);
  const auto direct = evolve(p, l, s, DensityMatrix::ground(l), {s.total_duration_ns}).front();
  const auto mid = evolve(p, l, s, DensityMatrix::ground(l), {c.pi.duration_ns}).front();
  EvolveOptions o;
  o.start_time_ns = c.pi.duration_ns;
  const auto resumed = evolve(p, l, s, mid, {s.total_duration_ns}, o).front();
  EXPECT_LT((direct.rho - resumed.rho).norm(), 1e-9);
}

TEST(WindowReadout, AgreesWithForwardEvolution) {
  const PhysicalParams p;
  const ProtocolCalibration c = base_calibration(p);
  const HilbertLayout l = HilbertLayout::two_body(5);
  const std::vector<double> taus = {0.0, 10.0, 33.3, 80.0};
  const WindowReadout w(p, l, {{Channel::ATControl, c.swap_amplitude_mhz, 0.0, 0.0}}, taus);
  ComplexVector psi = ket(l, qutrit(0), 1) + 0.5 * ket(l, qutrit(1), 0) + 0.3 * ket(l, qutrit(0), 2);
  psi.normalize();
  const DensityMatrix rho = DensityMatrix::pure(l, psi);
  const RealVector curve = w.curve(rho);
  const auto states = evolve(p, l, at_only(c.swap_amplitude_mhz, 80.0), rho, taus);
  for (std::size_t k = 0; k < taus.size(); ++k)
    EXPECT_NEAR(curve(Eigen::Index(k)), readout_qubit_excited(states[k]), 1e-9);
  EXPECT_NEAR(w.fock_curve(2)(2), w.curve(DensityMatrix::ground(l, 2))(2), 1e-12);
}

TEST(Readout, AssignmentMatrix) {
  const HilbertLayout l = HilbertLayout::two_body(2);
  const DensityMatrix e = DensityMatrix::pure(l, ket(l, qutrit(1), 0));
  AssignmentMatrix a;
  a << 0.95, 0.1, 0.05, 0.9;
  EXPECT_NEAR(readout_qubit_excited(e, a), 0.9, 1e-15);
  EXPECT_NEAR(readout_qubit_excited(DensityMatrix::ground(l), a), 0.05, 1e-15);
}

TEST(States, PartialTraceAndValidation) {
  const HilbertLayout l = HilbertLayout::two_body(3);
  const ComplexVector psi = (ket(l, qutrit(1), 0) + ket(l, qutrit(0), 1)) / std::sqrt(2.0);
  const DensityMatrix r = partial_trace(DensityMatrix::pure(l, psi), {Factor::Magnon});
  EXPECT_EQ(r.layout.magnon_dim, 3u);
  EXPECT_NEAR(r.rho(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(std::abs(r.rho(0, 1)), 0.0, 1e-15);
  EXPECT_NEAR(r.purity(), 0.5, 1e-15);

  DensityMatrix bad = DensityMatrix::ground(l);
  bad.rho(0, 1) = 0.1;
  try {
    bad.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidState);
  }
}
