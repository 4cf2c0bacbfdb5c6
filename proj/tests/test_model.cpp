#include <gtest/gtest.h>

#include <cmath>

#include "magsim/errors.hpp"
#include "magsim/model.hpp"

using namespace magsim;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no magsim::Error thrown";
  return ErrorKind::Config;
}

}  // namespace

TEST(Coupling, SecondOrderFormula) {
  const PhysicalParams p;
  const double dm = (5.928 - 6.388) * 1e3, dq = (5.846 - 6.388) * 1e3;
  const double expected = std::abs(0.5 * 52.6 * 52.6 * (1.0 / dm + 1.0 / dq));
  EXPECT_NEAR(effective_coupling(p), expected, 1e-12);
  // Quoted coupling 5.55 MHz.
  EXPECT_NEAR(effective_coupling(p), 5.55, 0.02);
}

TEST(Coupling, OverrideAndGuard) {
  PhysicalParams p;
  p.effective_coupling_override_mhz = 4.0;
  EXPECT_DOUBLE_EQ(effective_coupling(p), 4.0);
  PhysicalParams near;
  near.cavity_freq_ghz = 6.0;
  EXPECT_FALSE(near.dispersive_guard_holds());
  EXPECT_EQ(kind_of([&] { effective_coupling(near); }), ErrorKind::DispersiveRegime);
}

TEST(Params, ValidationNamesTheField) {
  PhysicalParams p;
  p.t1_magnon_ns = 0.0;
  try {
    p.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find("t1_magnon_ns"), std::string::npos);
  }
}

TEST(CoilMap, ResonanceAndInverse) {
  const CoilMap c;
  EXPECT_DOUBLE_EQ(c.magnon_freq_ghz(-4.5), 5.846);
  EXPECT_NEAR(c.current_for(c.magnon_freq_ghz(-3.7)), -3.7, 1e-12);
}

TEST(ATDoublet, BranchSeparationLaw) {
  const PhysicalParams p;
  for (double delta : {-7.0, 0.0, 3.0, 12.5}) {
    for (double omega : {0.5, 20.0, 44.9, 161.0}) {
      const ATDoublet d = at_doublet(omega, delta, p);
      EXPECT_NEAR((d.omega_plus_ghz - d.omega_minus_ghz) * 1e3, std::hypot(delta, omega), 1e-9);
      // Eigenvectors of [[0, W/2], [W/2, D]] in the (|e>, |f>) basis.
      Eigen::Matrix2d h;
      h << 0.0, 0.5 * omega, 0.5 * omega, delta;
      const double lp = 0.5 * (delta + std::hypot(delta, omega));
      EXPECT_LT((h * d.plus_coeffs - lp * d.plus_coeffs).norm(), 1e-9);
      EXPECT_NEAR(d.plus_coeffs.dot(d.minus_coeffs), 0.0, 1e-15);
    }
  }
}

TEST(ATDoublet, HamiltonianBlockEigenvalues) {
  const PhysicalParams p;
  const HilbertLayout l = HilbertLayout::two_body(2);
  for (double omega : {10.0, 44.9, 161.0}) {
    const ComplexMatrix h = build_hamiltonian(p, l, {{Channel::ATControl, omega, 0.0, 0.0}}, 0.0);
    // Rows (q, m) -> 2 q + m: |e,0> = 2, |f,0> = 4.
    Eigen::Matrix2cd block;
    block << h(2, 2), h(2, 4), h(4, 2), h(4, 4);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(block);
    const double sep_mhz = (es.eigenvalues()(1) - es.eigenvalues()(0)) / kTwoPi * 1e3;
    const ATDoublet d = at_doublet(omega, p.at_drive_detuning_mhz, p);
    EXPECT_NEAR(sep_mhz, (d.omega_plus_ghz - d.omega_minus_ghz) * 1e3, 1e-9);
    EXPECT_NEAR(p.magnon_idle_freq_ghz + es.eigenvalues()(1) / kTwoPi, d.omega_plus_ghz, 1e-12);
  }
}

TEST(ATDoublet, RequiredAmplitudeInvertsTheBranch) {
  const PhysicalParams p;
  for (double shift : {24.0, 82.0, 100.0}) {
    const double amp = required_drive_amplitude(shift, p.at_drive_detuning_mhz);
    const ATDoublet d = at_doublet(amp, p.at_drive_detuning_mhz, p);
    EXPECT_NEAR((d.omega_plus_ghz - p.qubit_freq_ghz) * 1e3, shift, 1e-9);
  }
  EXPECT_EQ(kind_of([] { required_drive_amplitude(1.0, 3.0); }), ErrorKind::NoSolution);
  EXPECT_EQ(kind_of([&] { at_doublet(0.0, 0.0, p); }), ErrorKind::DegenerateInput);
}

TEST(Hamiltonian, HermitianAndExcitationConserving) {
  const PhysicalParams p;
  for (const HilbertLayout& l : {HilbertLayout::two_body(5), HilbertLayout::three_body(3, 3)}) {
    const ComplexMatrix h = build_hamiltonian(p, l, {{Channel::ATControl, 161.0, 0.3, 0.0}}, 12.0);
    EXPECT_TRUE(is_hermitian(h, 1e-12));
    const ComplexMatrix n = excitation_numbers(l).cast<Complex>().asDiagonal();
    EXPECT_LT((h * n - n * h).norm(), 1e-12);
  }
  // A qubit drive changes the excitation number.
  const HilbertLayout l = HilbertLayout::two_body(3);
  const ComplexMatrix h = build_hamiltonian(p, l, {{Channel::QubitXY, 10.0, 0.0, 0.0}}, 0.0);
  const ComplexMatrix n = excitation_numbers(l).cast<Complex>().asDiagonal();
  EXPECT_GT((h * n - n * h).norm(), 1e-3);
}

TEST(Hamiltonian, ExchangeSwitch) {
  const PhysicalParams p;
  const HilbertLayout l = HilbertLayout::two_body(3);
  HamiltonianOptions off;
  off.exchange = false;
  const ComplexMatrix h = build_hamiltonian(p, l, {}, 0.0, off);
  // Without exchange and drives the Hamiltonian is diagonal.
  EXPECT_LT((h - ComplexMatrix(h.diagonal().asDiagonal())).norm(), 1e-15);
  const ComplexMatrix hx = build_hamiltonian(p, l, {}, 0.0);
  // |g,1> = 1 couples to |e,0> = 3 at g (rad/ns).
  EXPECT_NEAR(std::abs(hx(1, 3)), kTwoPi * effective_coupling(p) * 1e-3, 1e-12);
}

TEST(ExcitedState, DressedAndBare) {
  const PhysicalParams p;
  const Eigen::Vector3cd bare = qubit_excited_state(p, 0.0);
  EXPECT_NEAR(std::abs(bare(1)), 1.0, 1e-15);
  const Eigen::Vector3cd dressed = qubit_excited_state(p, 161.0);
  const ATDoublet d = at_doublet(161.0, p.at_drive_detuning_mhz, p);
  EXPECT_NEAR(dressed.norm(), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(dressed(1)), std::abs(d.plus_coeffs(0)), 1e-12);
  EXPECT_NEAR(std::abs(dressed(2)), std::abs(d.plus_coeffs(1)), 1e-12);
}
