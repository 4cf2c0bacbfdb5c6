#pragma once

// Lindblad evolution of the qutrit-magnon(-cavity) density matrix under a
// pulse schedule.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "magsim/model.hpp"
#include "magsim/schedule.hpp"

namespace magsim {

using SparseMatrix = Eigen::SparseMatrix<Complex>;

struct DensityMatrix {
  HilbertLayout layout;
  ComplexMatrix rho;

  static DensityMatrix pure(const HilbertLayout& layout, const ComplexVector& psi);
  // |g> (x) |n> (x) |0>.
  static DensityMatrix ground(const HilbertLayout& layout, std::size_t magnon_n = 0);

  // Hermitian to 1e-9, unit trace to 1e-9, eigenvalues >= -1e-8; throws
  // InvalidState otherwise.
  void validate() const;
  double min_eigenvalue() const;
  double purity() const;
};

struct CollapseOperator {
  std::string name;
  ComplexMatrix op;
  double rate = 0.0;  // 1/ns
};

std::vector<CollapseOperator> collapse_set(const PhysicalParams& p, const HilbertLayout& layout);

// Column-stacked superoperators: vec(A rho B) = (B^T (x) A) vec(rho).
SparseMatrix hamiltonian_superoperator(const ComplexMatrix& h);
SparseMatrix dissipator_superoperator(const std::vector<CollapseOperator>& ops, std::size_t dim);

// exp(h L) v by a truncated Taylor series over sub-steps of 1-norm <= 3.5.
ComplexVector expm_action(const SparseMatrix& l, double h, const ComplexVector& v);

struct EvolveOptions {
  double rk4_step_ns = 0.05;
  // Time at which rho0 is given; the schedule is followed from there.
  double start_time_ns = 0.0;
  // Ideal pulses: the qubit-magnon exchange is off while a qubit or magnon
  // drive segment is active.
  bool isolate_pulses = false;
  std::optional<double> magnon_freq_ghz;
  // Compute the minimum eigenvalue of every returned state.
  bool track_positivity = true;
};

struct EvolveDiagnostics {
  double max_trace_drift = 0.0;
  double max_hermiticity_residual = 0.0;
  double min_eigenvalue = 0.0;
  std::size_t exact_intervals = 0;
  std::size_t rk4_steps = 0;
};

// States at each sample time. Piecewise-constant stretches (in the frame of
// their single carrier) use the exact exponential action; shaped envelopes
// or mixed carriers use fixed-step RK4. Trace drift up to 1e-7 is
// renormalized, larger drift throws IntegratorAccuracy.
std::vector<DensityMatrix> evolve(const PhysicalParams& p, const HilbertLayout& layout, const PulseSchedule& sched,
                                  const DensityMatrix& rho0, const std::vector<double>& sample_times,
                                  const EvolveOptions& options = {}, EvolveDiagnostics* diagnostics = nullptr);

double expectation(const DensityMatrix& rho, const ComplexMatrix& obs);

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<Factor>& keep);

// Rows: measured (ground, excited); columns: true (ground, excited).
using AssignmentMatrix = Eigen::Matrix2d;

// P_e + P_f, optionally passed through an assignment matrix.
double readout_qubit_excited(const DensityMatrix& rho, const std::optional<AssignmentMatrix>& assignment = {});
double readout_qubit_excited(const DensityMatrix& rho, const AssignmentMatrix& assignment);

// Excited-qubit probability after each window length tau for a fixed,
// time-independent window Hamiltonian, computed by propagating the readout
// observable backwards once. curve(rho) then costs one inner product per tau.
// Undriven interval played before the window starts.
struct WindowLead {
  double duration_ns = 0.0;
  bool exchange = true;
};

class WindowReadout {
 public:
  WindowReadout(const PhysicalParams& p, const HilbertLayout& layout, const std::vector<DriveSample>& drives,
                std::vector<double> tau_grid, const HamiltonianOptions& options = {}, const WindowLead& lead = {});

  RealVector curve(const DensityMatrix& start) const;
  // Curve for the product state |g, n> as the start.
  RealVector fock_curve(std::size_t n) const;
  const std::vector<double>& tau_grid() const { return taus_; }
  const HilbertLayout& layout() const { return layout_; }

 private:
  HilbertLayout layout_;
  std::vector<double> taus_;
  ComplexMatrix weights_;  // row k: conj of the back-propagated observable at tau_k
};

}  // namespace magsim
