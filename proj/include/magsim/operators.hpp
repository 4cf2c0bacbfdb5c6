#pragma once

// Finite-dimensional operator algebra for the qutrit (g, e, f) x magnon
// (x cavity) Hilbert space. All matrices are dense Eigen types.

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace magsim {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr Complex kI{0.0, 1.0};

enum class Factor { Qutrit, Magnon, Cavity };

// Factor order is fixed: qutrit (x) magnon (x) cavity. A zero dimension means
// the factor is absent (cavity adiabatically eliminated, or a reduced state
// that no longer carries the qutrit).
struct HilbertLayout {
  std::size_t qutrit_dim = 3;
  std::size_t magnon_dim = 6;
  std::size_t cavity_dim = 0;

  static HilbertLayout two_body(std::size_t magnon_dim) { return {3, magnon_dim, 0}; }
  static HilbertLayout three_body(std::size_t magnon_dim, std::size_t cavity_dim) {
    return {3, magnon_dim, cavity_dim};
  }
  static HilbertLayout magnon_only(std::size_t magnon_dim) { return {0, magnon_dim, 0}; }

  std::size_t dimension() const;
  bool has(Factor f) const;
  std::size_t dim_of(Factor f) const;
  // Throws InvalidDimension unless magnon_dim >= 2, cavity_dim is 0 or >= 2
  // and qutrit_dim is 0 or 3.
  void validate() const;

  bool operator==(const HilbertLayout&) const = default;
};

ComplexMatrix fock_annihilation(std::size_t dim);
ComplexMatrix number_operator(std::size_t dim);

struct QutritOperators {
  ComplexMatrix proj_g;
  ComplexMatrix proj_e;
  ComplexMatrix proj_f;
  ComplexMatrix lower_ge;  // |g><e|
  ComplexMatrix lower_ef;  // |e><f|
};

QutritOperators qutrit_operators();

// Kronecker product, left factor varies slowest.
ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b);

// Lift a single-factor operator into the full layout (identity elsewhere).
ComplexMatrix embed(const HilbertLayout& layout, Factor factor, const ComplexMatrix& op);

// Scaling and squaring with diagonal Pade approximants of degree 3..13
// (Higham 2005 thresholds). Relative error is at the unit-roundoff level for
// the matrices used here; the test suite checks 1e-10 against independent
// oracles.
ComplexMatrix matrix_exp(const ComplexMatrix& m);

// exp(alpha b^dagger - conj(alpha) b) in a Fock space of size dim. Emits a
// truncation warning when |alpha|^2 + 4|alpha| exceeds dim.
ComplexMatrix displacement(Complex alpha, std::size_t dim);
bool displacement_fits(Complex alpha, std::size_t dim);

// exp(i pi b^dagger b).
ComplexMatrix parity(std::size_t dim);

ComplexVector fock_state(std::size_t n, std::size_t dim);
// Truncated coherent state from the Poisson amplitudes, renormalized.
ComplexVector coherent_state(Complex alpha, std::size_t dim);

bool is_hermitian(const ComplexMatrix& m, double tol = 1e-12);
bool is_unitary(const ComplexMatrix& m, double tol = 1e-9);
double hermiticity_residual(const ComplexMatrix& m);

}  // namespace magsim
