#include "magsim/operators.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "magsim/errors.hpp"

namespace magsim {

std::size_t HilbertLayout::dimension() const {
  std::size_t d = 1;
  for (std::size_t f : {qutrit_dim, magnon_dim, cavity_dim}) {
    if (f != 0) d *= f;
  }
  return d;
}

bool HilbertLayout::has(Factor f) const { return dim_of(f) != 0; }

std::size_t HilbertLayout::dim_of(Factor f) const {
  switch (f) {
    case Factor::Qutrit: return qutrit_dim;
    case Factor::Magnon: return magnon_dim;
    case Factor::Cavity: return cavity_dim;
  }
  return 0;
}

void HilbertLayout::validate() const {
  if (qutrit_dim != 0 && qutrit_dim != 3) {
    throw Error(ErrorKind::InvalidDimension, "qutrit_dim must be 3 (g, e, f) or 0");
  }
  if (magnon_dim < 2) {
    throw Error(ErrorKind::InvalidDimension, "magnon_dim must be at least 2");
  }
  if (cavity_dim == 1) {
    throw Error(ErrorKind::InvalidDimension, "cavity_dim must be 0 (eliminated) or at least 2");
  }
}

ComplexMatrix fock_annihilation(std::size_t dim) {
  if (dim < 2) {
    throw Error(ErrorKind::InvalidDimension, "fock_annihilation: dim must be >= 2");
  }
  ComplexMatrix a = ComplexMatrix::Zero(dim, dim);
  for (std::size_t n = 1; n < dim; ++n) {
    a(n - 1, n) = std::sqrt(static_cast<double>(n));
  }
  return a;
}

ComplexMatrix number_operator(std::size_t dim) {
  ComplexMatrix n = ComplexMatrix::Zero(dim, dim);
  for (std::size_t k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
  return n;
}

QutritOperators qutrit_operators() {
  QutritOperators ops;
  ops.proj_g = ComplexMatrix::Zero(3, 3);
  ops.proj_e = ComplexMatrix::Zero(3, 3);
  ops.proj_f = ComplexMatrix::Zero(3, 3);
  ops.lower_ge = ComplexMatrix::Zero(3, 3);
  ops.lower_ef = ComplexMatrix::Zero(3, 3);
  ops.proj_g(0, 0) = 1.0;
  ops.proj_e(1, 1) = 1.0;
  ops.proj_f(2, 2) = 1.0;
  ops.lower_ge(0, 1) = 1.0;
  ops.lower_ef(1, 2) = 1.0;
  return ops;
}

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

ComplexMatrix embed(const HilbertLayout& layout, Factor factor, const ComplexMatrix& op) {
  if (!layout.has(factor) || static_cast<std::size_t>(op.rows()) != layout.dim_of(factor) ||
      op.rows() != op.cols()) {
    throw Error(ErrorKind::InvalidDimension, "embed: operator does not match the layout factor");
  }
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (Factor f : {Factor::Qutrit, Factor::Magnon, Factor::Cavity}) {
    if (!layout.has(f)) continue;
    const auto d = static_cast<Eigen::Index>(layout.dim_of(f));
    out = tensor(out, f == factor ? op : ComplexMatrix::Identity(d, d));
  }
  return out;
}

namespace {

constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                          25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                           30270240.0,    2162160.0,    110880.0,     3960.0,
                                           90.0,          1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

// 1-norm thresholds below which the degree-m approximant is accurate to
// double precision without scaling.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

double one_norm(const ComplexMatrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

template <std::size_t N>
ComplexMatrix pade_low(const ComplexMatrix& a, const std::array<double, N>& b) {
  const auto n = a.rows();
  const ComplexMatrix ident = ComplexMatrix::Identity(n, n);
  const ComplexMatrix a2 = a * a;
  ComplexMatrix odd = b[1] * ident;
  ComplexMatrix even = b[0] * ident;
  ComplexMatrix power = ident;
  for (std::size_t k = 2; k < N; k += 2) {
    power = power * a2;
    even += b[k] * power;
    if (k + 1 < N) odd += b[k + 1] * power;
  }
  const ComplexMatrix u = a * odd;
  return (even - u).partialPivLu().solve(even + u);
}

ComplexMatrix pade13(const ComplexMatrix& a) {
  const auto n = a.rows();
  const auto& b = kPade13;
  const ComplexMatrix ident = ComplexMatrix::Identity(n, n);
  const ComplexMatrix a2 = a * a;
  const ComplexMatrix a4 = a2 * a2;
  const ComplexMatrix a6 = a4 * a2;
  ComplexMatrix tmp = b[13] * a6 + b[11] * a4 + b[9] * a2;
  const ComplexMatrix u = a * (a6 * tmp + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
  tmp = b[12] * a6 + b[10] * a4 + b[8] * a2;
  const ComplexMatrix v = a6 * tmp + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

ComplexMatrix matrix_exp(const ComplexMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorKind::InvalidDimension, "matrix_exp: input must be square and non-empty");
  }
  const double norm = one_norm(m);
  if (norm <= kTheta3) return pade_low(m, kPade3);
  if (norm <= kTheta5) return pade_low(m, kPade5);
  if (norm <= kTheta7) return pade_low(m, kPade7);
  if (norm <= kTheta9) return pade_low(m, kPade9);

  int squarings = 0;
  if (norm > kTheta13) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / kTheta13))));
  }
  ComplexMatrix result = pade13(m / std::ldexp(1.0, squarings));
  for (int k = 0; k < squarings; ++k) result = result * result;
  return result;
}

bool displacement_fits(Complex alpha, std::size_t dim) {
  const double r = std::abs(alpha);
  return r * r + 4.0 * r <= static_cast<double>(dim);
}

ComplexMatrix displacement(Complex alpha, std::size_t dim) {
  if (dim < 2) {
    throw Error(ErrorKind::InvalidDimension, "displacement: dim must be >= 2");
  }
  if (!displacement_fits(alpha, dim)) {
    std::ostringstream msg;
    msg << "displacement |alpha|=" << std::abs(alpha) << " is large for Fock truncation " << dim;
    warn(msg.str());
  }
  const ComplexMatrix b = fock_annihilation(dim);
  const ComplexMatrix gen = alpha * b.adjoint() - std::conj(alpha) * b;
  return matrix_exp(gen);
}

ComplexMatrix parity(std::size_t dim) {
  ComplexMatrix p = ComplexMatrix::Zero(dim, dim);
  for (std::size_t n = 0; n < dim; ++n) p(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
  return p;
}

ComplexVector fock_state(std::size_t n, std::size_t dim) {
  if (n >= dim) {
    throw Error(ErrorKind::InvalidDimension, "fock_state: n must be below the truncation");
  }
  ComplexVector v = ComplexVector::Zero(dim);
  v(n) = 1.0;
  return v;
}

ComplexVector coherent_state(Complex alpha, std::size_t dim) {
  ComplexVector v(dim);
  Complex c = std::exp(-0.5 * std::norm(alpha));
  for (std::size_t n = 0; n < dim; ++n) {
    v(n) = c;
    c *= alpha / std::sqrt(static_cast<double>(n + 1));
  }
  return v / v.norm();
}

double hermiticity_residual(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const ComplexMatrix& m, double tol) { return hermiticity_residual(m) <= tol; }

bool is_unitary(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const auto n = m.rows();
  return (m * m.adjoint() - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace magsim
