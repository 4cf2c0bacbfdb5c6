#include "magsim/tomography.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "magsim/errors.hpp"

namespace magsim {

namespace {

using nlohmann::json;

constexpr double kTwoOverPi = 2.0 / kPi;

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double max_abs(const std::vector<Complex>& alphas) {
  double r = 0.0;
  for (const auto& a : alphas) r = std::max(r, std::abs(a));
  return r;
}

// Level count at which D(alpha) acting on the first `dim` levels is accurate.
std::size_t safe_work_dim(std::size_t dim, double r) {
  return dim + static_cast<std::size_t>(std::ceil(r * r + 6.0 * r)) + 12;
}

// D(alpha) P D(-alpha) restricted to the first dim levels.
ComplexMatrix displaced_parity(Complex alpha, std::size_t dim, std::size_t work_dim) {
  const ComplexMatrix d = displacement(alpha, work_dim);
  const ComplexMatrix q = d * parity(work_dim) * d.adjoint();
  return q.topLeftCorner(idx(dim), idx(dim));
}

// Populations of D(-alpha) rho D(alpha), all work_dim levels.
RealVector displaced_populations(const ComplexMatrix& rho, Complex alpha, std::size_t work_dim) {
  const auto n = rho.rows();
  ComplexMatrix big = ComplexMatrix::Zero(idx(work_dim), idx(work_dim));
  big.topLeftCorner(n, n) = rho;
  const ComplexMatrix d = displacement(-alpha, work_dim);
  return (d * big * d.adjoint()).diagonal().real();
}

std::vector<double> to_std(const RealVector& v) { return {v.data(), v.data() + v.size()}; }

json matrix_json(const RealMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// Templates

RealMatrix SwapTemplateSet::matrix() const {
  RealMatrix a(idx(tau_grid.size()), idx(templates.size()));
  for (std::size_t n = 0; n < templates.size(); ++n) a.col(idx(n)) = templates[n];
  return a;
}

SwapTemplateSet swap_templates(const WindowReadout& window, std::size_t n_max) {
  if (n_max < 1) throw Error(ErrorKind::InvalidDimension, "swap_templates: n_max must be >= 1");
  const std::size_t dim = window.layout().magnon_dim;
  if (dim < n_max + 2) {
    throw Error(ErrorKind::InvalidDimension, "swap_templates: magnon_dim " + std::to_string(dim) +
                                                 " is below n_max + 2 = " + std::to_string(n_max + 2));
  }
  SwapTemplateSet set;
  set.tau_grid = window.tau_grid();
  set.n_max = n_max;
  set.magnon_dim = dim;
  for (std::size_t n = 0; n <= n_max; ++n) set.templates.push_back(window.fock_curve(n));
  return set;
}

SwapTemplateSet swap_templates(const PhysicalParams& p, const ProtocolCalibration& calib, std::size_t n_max,
                               const std::vector<double>& tau_grid, std::size_t magnon_dim,
                               const EvolveOptions& evolve) {
  if (magnon_dim == 0) magnon_dim = std::max(n_max + 2, calib.settings.tomography_magnon_dim);
  if (n_max < 1 || magnon_dim < n_max + 2) {
    throw Error(ErrorKind::InvalidDimension, "swap_templates: need n_max >= 1 and magnon_dim >= n_max + 2");
  }
  HamiltonianOptions ho;
  ho.magnon_freq_ghz = evolve.magnon_freq_ghz;
  const WindowReadout window(p, HilbertLayout::two_body(magnon_dim),
                             {{Channel::ATControl, calib.swap_amplitude_mhz, 0.0, 0.0}}, tau_grid, ho);
  return swap_templates(window, n_max);
}

// ---------------------------------------------------------------------------
// Constrained regression

RealVector nnls(const RealMatrix& a, const RealVector& b, int max_iterations) {
  const Eigen::Index m = a.rows(), n = a.cols();
  if (b.size() != m) throw Error(ErrorKind::InvalidDimension, "nnls: size mismatch");
  if (max_iterations <= 0) max_iterations = static_cast<int>(30 * n + 30);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * a.cwiseAbs().colwise().sum().maxCoeff() *
                     static_cast<double>(std::max(m, n));

  RealVector x = RealVector::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);

  auto solve_passive = [&](RealVector& z) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
    RealMatrix sub(m, idx(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(idx(k)) = a.col(cols[k]);
    const RealVector zs = sub.colPivHouseholderQr().solve(b);
    z = RealVector::Zero(n);
    for (std::size_t k = 0; k < cols.size(); ++k) z(cols[k]) = zs(idx(k));
  };

  RealVector w = a.transpose() * (b - a * x);
  int iterations = 0;
  while (iterations < max_iterations) {
    Eigen::Index best = -1;
    double wmax = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > wmax) {
        wmax = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    RealVector z;
    while (true) {
      ++iterations;
      solve_passive(z);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) feasible = false;
      if (feasible) {
        x = z;
        break;
      }
      double step = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) step = std::min(step, x(j) / (x(j) - z(j)));
      }
      x += step * (z - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && std::abs(x(j)) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
      if (iterations >= max_iterations) break;
    }
    w = a.transpose() * (b - a * x);
  }
  return x.cwiseMax(0.0);
}

RealVector project_to_simplex(const RealVector& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw Error(ErrorKind::InvalidDimension, "project_to_simplex: empty vector");
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += u[static_cast<std::size_t>(k)];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[static_cast<std::size_t>(k)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

PopulationFit fit_populations(const RealVector& measured, const SwapTemplateSet& templates, const RealVector& errors,
                              double max_condition) {
  const RealMatrix a0 = templates.matrix();
  const Eigen::Index m = a0.rows(), n = a0.cols();
  if (measured.size() != m) {
    throw Error(ErrorKind::InvalidDimension, "fit_populations: measured curve and templates differ in length");
  }
  if (errors.size() != 0 && errors.size() != m) {
    throw Error(ErrorKind::InvalidDimension, "fit_populations: errors and measured curve differ in length");
  }
  RealVector weight = RealVector::Ones(m);
  if (errors.size() == m) {
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!(errors(i) > 0.0)) throw Error(ErrorKind::InvalidState, "fit_populations: errors must be positive");
      weight(i) = 1.0 / errors(i);
    }
  }
  const RealMatrix a = weight.asDiagonal() * a0;
  const RealVector y = weight.asDiagonal() * measured;

  // The sum rule carries the n = 0 information (its template is nearly flat),
  // so it is part of the design whose conditioning we check.
  const double scale = a.norm() / std::sqrt(static_cast<double>(n));
  RealMatrix design(m + 1, n);
  design.topRows(m) = a;
  design.row(m).setConstant(scale);
  const Eigen::JacobiSVD<RealMatrix> svd(design);
  const RealVector sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(cond <= max_condition)) {
    std::ostringstream msg;
    msg << "template matrix condition number " << cond << " exceeds " << max_condition
        << "; use a longer tau grid or a smaller n_max";
    throw Error(ErrorKind::Conditioning, msg.str());
  }

  const double heavy = 1e4 * scale;
  RealMatrix aug(m + 1, n);
  aug.topRows(m) = a;
  aug.row(m).setConstant(heavy);
  RealVector rhs(m + 1);
  rhs.head(m) = y;
  rhs(m) = heavy;

  PopulationFit fit;
  fit.populations = project_to_simplex(nnls(aug, rhs));
  fit.condition_number = cond;
  const RealVector resid = a * fit.populations - y;
  fit.residual_norm = resid.norm();

  // Linearized covariance on the face of the simplex where populations are
  // positive: p = p0 + Z u with Z spanning the sum-zero directions.
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < n; ++j)
    if (fit.populations(j) > 1e-9) active.push_back(j);
  fit.covariance = RealMatrix::Zero(n, n);
  const Eigen::Index k = idx(active.size());
  if (k >= 2) {
    RealMatrix z = RealMatrix::Zero(n, k - 1);
    for (Eigen::Index c = 1; c < k; ++c) {
      z(active[static_cast<std::size_t>(c)], c - 1) = 1.0;
      z(active[0], c - 1) = -1.0;
    }
    const RealMatrix az = a * z;
    const RealMatrix info = az.transpose() * az;
    const Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(info);
    RealMatrix cov = z * cod.pseudoInverse() * z.transpose();
    if (errors.size() == 0) {
      const double dof = std::max<double>(1.0, static_cast<double>(m - (k - 1)));
      cov *= resid.squaredNorm() / dof;
    }
    fit.covariance = cov;
  }
  return fit;
}

double wigner_point(const RealVector& populations) {
  double s = 0.0;
  for (Eigen::Index n = 0; n < populations.size(); ++n) s += (n % 2 == 0 ? 1.0 : -1.0) * populations(n);
  return kTwoOverPi * s;
}

double wigner_point_error(const RealMatrix& covariance) {
  RealVector sign(covariance.rows());
  for (Eigen::Index n = 0; n < sign.size(); ++n) sign(n) = n % 2 == 0 ? 1.0 : -1.0;
  return kTwoOverPi * std::sqrt(std::max(0.0, sign.dot(covariance * sign)));
}

// ---------------------------------------------------------------------------
// Analytic Wigner function

double wigner_analytic(const DensityMatrix& rho, Complex alpha, std::size_t work_dim) {
  const HilbertLayout& l = rho.layout;
  if (l.qutrit_dim != 0 || l.cavity_dim != 0) {
    throw Error(ErrorKind::InvalidDimension, "wigner_analytic expects a magnon-only state");
  }
  const std::size_t dim = l.magnon_dim;
  if (work_dim == 0) work_dim = safe_work_dim(dim, std::abs(alpha));
  if (work_dim < dim) throw Error(ErrorKind::InvalidDimension, "wigner_analytic: work_dim below the state dimension");
  return wigner_point(displaced_populations(rho.rho, alpha, work_dim));
}

std::vector<Complex> alpha_grid_square(std::size_t n, double half_width) {
  if (n == 0) throw Error(ErrorKind::Config, "alpha grid needs at least one point per axis");
  const std::vector<double> axis = n == 1 ? std::vector<double>{0.0} : linspace(-half_width, half_width, n);
  std::vector<Complex> out;
  for (double re : axis)
    for (double im : axis) out.emplace_back(re, im);
  return out;
}

// ---------------------------------------------------------------------------
// Maps

void WignerMap::validate() const {
  const std::size_t n = alphas.size();
  if (values.size() != n || errors.size() != n || populations.size() != n || residuals.size() != n) {
    throw Error(ErrorKind::InvalidDimension, "WignerMap: field sizes differ");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(values[i]) || std::abs(values[i]) > kTwoOverPi + 3.0 * errors[i] + 1e-9) {
      throw Error(ErrorKind::InvalidState, "WignerMap: value outside the parity bound");
    }
  }
}

WignerMap wigner_map(const PhysicalParams& p, const PrepTarget& target, const ProtocolCalibration& calib,
                     const std::vector<Complex>& alphas, const WignerOptions& options) {
  if (alphas.empty()) throw Error(ErrorKind::Config, "wigner_map: empty alpha grid");
  if (!options.exact_populations && options.tau_grid_ns.size() < 2) {
    throw Error(ErrorKind::Config, "wigner_map: tau grid needs at least two points");
  }
  const std::size_t dim = calib.settings.tomography_magnon_dim;
  if (dim < options.n_max + 2) {
    throw Error(ErrorKind::InvalidDimension, "wigner_map: tomography magnon_dim " + std::to_string(dim) +
                                                 " is below n_max + 2");
  }
  const HilbertLayout layout = HilbertLayout::two_body(dim);
  const PulseSchedule prep = seq_state_prep(p, target, calib);
  EvolveOptions eo = options.evolve;
  eo.start_time_ns = 0.0;
  const DensityMatrix prepared =
      evolve(p, layout, prep, DensityMatrix::ground(layout), {prep.total_duration_ns}, eo).front();

  WignerMap map;
  map.target = target.name();
  map.alphas = alphas;
  const std::size_t na = alphas.size();
  map.values.assign(na, 0.0);
  map.errors.assign(na, 0.0);
  map.populations.assign(na, RealVector());
  map.residuals.assign(na, 0.0);
  map.metadata = {{"target", map.target},
                  {"n_max", options.n_max},
                  {"magnon_dim", dim},
                  {"exact_populations", options.exact_populations},
                  {"prep_duration_ns", prep.total_duration_ns}};

  if (options.exact_populations) {
    const DensityMatrix reduced = partial_trace(prepared, {Factor::Magnon});
    const std::size_t work = safe_work_dim(dim, max_abs(alphas));
    parallel_for(na, options.workers, [&](std::size_t i) {
      map.populations[i] = displaced_populations(reduced.rho, alphas[i], work);
      map.values[i] = wigner_point(map.populations[i]);
    });
    map.validate();
    return map;
  }

  const double tau_max = options.tau_grid_ns.back();
  std::vector<PulseSchedule> schedules;
  schedules.reserve(na);
  for (const auto& a : alphas) schedules.push_back(seq_wigner_point(prep, -a, std::max(tau_max, 1.0), calib));

  HamiltonianOptions ho;
  ho.magnon_freq_ghz = options.evolve.magnon_freq_ghz;
  const std::vector<DriveSample> at_swap{{Channel::ATControl, calib.swap_amplitude_mhz, 0.0, 0.0}};
  const WindowReadout window(p, layout, at_swap, options.tau_grid_ns, ho);
  // Templates start at the displacement slot, so the undriven dynamics of
  // that slot is part of every reference curve.
  const WindowReadout template_window(
      p, layout, at_swap, options.tau_grid_ns, ho,
      {calib.settings.displacement_duration_ns, !options.evolve.isolate_pulses});
  SwapTemplateSet templates = swap_templates(template_window, options.n_max);
  if (options.shots) {
    const auto& am = options.shots->assignment;
    for (auto& t : templates.templates) t = (am(1, 0) + (am(1, 1) - am(1, 0)) * t.array()).matrix();
  }
  const std::size_t nt = options.tau_grid_ns.size();

  parallel_for(na, options.workers, [&](std::size_t i) {
    const PulseSchedule& s = schedules[i];
    EvolveOptions o = options.evolve;
    o.start_time_ns = prep.total_duration_ns;
    const DensityMatrix at_window = evolve(p, layout, s, prepared, {*s.window_start_ns}, o).front();
    RealVector curve = window.curve(at_window);
    RealVector err;
    if (options.shots) {
      const double shots = static_cast<double>(options.shots->shots);
      err.resize(idx(nt));
      for (std::size_t k = 0; k < nt; ++k) {
        const auto e = sample_readout(std::clamp(curve(idx(k)), 0.0, 1.0), *options.shots, i * nt + k);
        curve(idx(k)) = e.estimate;
        err(idx(k)) = std::sqrt(std::max(e.estimate * (1.0 - e.estimate), 1.0 / shots) / shots);
      }
    }
    const PopulationFit fit = fit_populations(curve, templates, err);
    map.populations[i] = fit.populations;
    map.values[i] = wigner_point(fit.populations);
    map.errors[i] = wigner_point_error(fit.covariance);
    map.residuals[i] = fit.residual_norm;
  });

  map.metadata["tau_ns"] = {options.tau_grid_ns.front(), options.tau_grid_ns.back(), nt};
  if (options.shots) map.metadata["shots"] = options.shots->shots;
  map.validate();
  return map;
}

WignerMap analytic_map(const DensityMatrix& rho, const std::vector<Complex>& alphas, double noise_sigma,
                       std::uint64_t seed) {
  WignerMap map;
  map.target = "analytic";
  map.alphas = alphas;
  const std::size_t work = safe_work_dim(rho.layout.magnon_dim, max_abs(alphas));
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    RealVector pops = displaced_populations(rho.rho, alphas[i], work);
    double w = wigner_point(pops);
    if (noise_sigma > 0.0) {
      std::mt19937_64 rng(point_seed(seed, i));
      w += std::normal_distribution<double>(0.0, noise_sigma)(rng);
    }
    map.values.push_back(w);
    map.errors.push_back(noise_sigma);
    map.populations.push_back(std::move(pops));
    map.residuals.push_back(0.0);
  }
  map.metadata = {{"target", "analytic"}, {"noise_sigma", noise_sigma}};
  return map;
}

// ---------------------------------------------------------------------------
// Reconstruction

double fidelity(const DensityMatrix& rho, const ComplexVector& target) {
  if (target.size() != rho.rho.rows()) {
    throw Error(ErrorKind::InvalidDimension, "fidelity: target and state dimensions differ");
  }
  if (std::abs(target.norm() - 1.0) > 1e-9) throw Error(ErrorKind::InvalidState, "fidelity: target is not normalized");
  const double overlap = (target.adjoint() * rho.rho * target)(0, 0).real();
  return std::clamp(std::sqrt(std::max(0.0, overlap)), 0.0, 1.0);
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::InvalidDimension, "trace_distance: dimensions differ");
  }
  const ComplexMatrix diff = a - b;
  const Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (diff + diff.adjoint()));
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

namespace {

struct Kernel {
  RealMatrix k;  // alpha rows, real parameters of a Hermitian d x d matrix
  std::size_t d = 0;
};

// Parameters: d diagonal entries, then (Re, Im) of rho_mn for m < n.
Kernel build_kernel(const std::vector<Complex>& alphas, std::size_t d, std::size_t work_dim) {
  Kernel out;
  out.d = d;
  out.k.resize(idx(alphas.size()), idx(d * d));
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const ComplexMatrix q = displaced_parity(alphas[i], d, work_dim);
    Eigen::Index c = 0;
    for (std::size_t m = 0; m < d; ++m) out.k(idx(i), c++) = kTwoOverPi * q(idx(m), idx(m)).real();
    for (std::size_t m = 0; m < d; ++m) {
      for (std::size_t n = m + 1; n < d; ++n) {
        const Complex qnm = q(idx(n), idx(m));
        out.k(idx(i), c++) = 2.0 * kTwoOverPi * qnm.real();
        out.k(idx(i), c++) = -2.0 * kTwoOverPi * qnm.imag();
      }
    }
  }
  return out;
}

ComplexMatrix unpack(const RealVector& x, std::size_t d) {
  ComplexMatrix rho = ComplexMatrix::Zero(idx(d), idx(d));
  Eigen::Index c = 0;
  for (std::size_t m = 0; m < d; ++m) rho(idx(m), idx(m)) = x(c++);
  for (std::size_t m = 0; m < d; ++m) {
    for (std::size_t n = m + 1; n < d; ++n) {
      const Complex v(x(c), x(c + 1));
      c += 2;
      rho(idx(m), idx(n)) = v;
      rho(idx(n), idx(m)) = std::conj(v);
    }
  }
  return rho;
}

struct LinearSolution {
  ComplexMatrix rho;
  double residual_norm = 0.0;
};

// Unit-trace least squares: x = x0 + N y with N spanning the trace-zero
// directions.
LinearSolution solve_unit_trace(const Kernel& kern, const RealVector& w, const RealVector& weight) {
  const std::size_t d = kern.d;
  const Eigen::Index np = idx(d * d);
  RealVector x0 = RealVector::Zero(np);
  x0.head(idx(d)).setConstant(1.0 / static_cast<double>(d));
  RealMatrix nmat = RealMatrix::Zero(np, np - 1);
  for (Eigen::Index j = 1; j < idx(d); ++j) {
    nmat(0, j - 1) = -1.0;
    nmat(j, j - 1) = 1.0;
  }
  for (Eigen::Index j = idx(d); j < np; ++j) nmat(j, j - 1) = 1.0;
  const RealMatrix kw = weight.asDiagonal() * kern.k;
  const RealVector rhs = weight.asDiagonal() * w - kw * x0;
  const RealVector y = (kw * nmat).colPivHouseholderQr().solve(rhs);
  const RealVector x = x0 + nmat * y;
  return {unpack(x, d), (kw * x - weight.asDiagonal() * w).norm()};
}

}  // namespace

ReconstructionResult reconstruct_density_matrix(const WignerMap& map, std::size_t d_rec,
                                                const ReconstructOptions& options) {
  if (d_rec < 1) throw Error(ErrorKind::InvalidDimension, "reconstruct: d_rec must be >= 1");
  if (map.metadata.contains("n_max") && map.metadata["n_max"].is_number_integer() &&
      std::int64_t(d_rec) > map.metadata["n_max"].get<std::int64_t>() + 1) {
    throw Error(ErrorKind::InvalidDimension, "reconstruct: d_rec exceeds n_max + 1");
  }
  const std::size_t na = map.alphas.size();
  if (map.values.size() != na) throw Error(ErrorKind::InvalidDimension, "reconstruct: map values and grid differ");
  if (na < d_rec * d_rec) {
    throw Error(ErrorKind::Informativeness, "reconstruct: need at least d_rec^2 = " + std::to_string(d_rec * d_rec) +
                                                " alpha points, have " + std::to_string(na));
  }
  const std::size_t work =
      options.work_dim > 0 ? options.work_dim : safe_work_dim(d_rec, max_abs(map.alphas));
  const Kernel kern = build_kernel(map.alphas, d_rec, work);

  const Eigen::JacobiSVD<RealMatrix> svd(kern.k);
  const RealVector sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-10 * sv(0))) {
    throw Error(ErrorKind::Informativeness,
                "reconstruct: the alpha grid does not determine the density matrix; widen the alpha coverage");
  }

  // Plain least squares; map errors only drive the bootstrap.
  const RealVector weight = RealVector::Ones(idx(na));
  const bool has_errors =
      map.errors.size() == na && std::all_of(map.errors.begin(), map.errors.end(), [](double e) { return e > 0.0; });

  auto solve = [&](const RealVector& w, ReconstructionResult& out) {
    const LinearSolution lin = solve_unit_trace(kern, w, weight);
    const Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(lin.rho);
    RealVector ev = es.eigenvalues();
    out.min_eigenvalue_before_clip = ev.minCoeff();
    ev = ev.cwiseMax(0.0);
    ev /= ev.sum();
    ComplexMatrix rho = es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    out.rho = DensityMatrix{HilbertLayout::magnon_only(d_rec), rho};
    out.residual_norm = lin.residual_norm;
  };

  const RealVector w = Eigen::Map<const RealVector>(map.values.data(), idx(na));
  ReconstructionResult result;
  solve(w, result);
  result.rho.validate();

  if (options.target) {
    result.fidelity = fidelity(result.rho, *options.target);
    if (options.bootstrap > 0 && has_errors) {
      std::vector<double> fs;
      for (std::size_t b = 0; b < options.bootstrap; ++b) {
        std::mt19937_64 rng(point_seed(options.seed, b));
        RealVector wb = w;
        for (std::size_t i = 0; i < na; ++i) {
          wb(idx(i)) += std::normal_distribution<double>(0.0, map.errors[i])(rng);
        }
        ReconstructionResult r;
        solve(wb, r);
        fs.push_back(fidelity(r.rho, *options.target));
      }
      const double mean = std::accumulate(fs.begin(), fs.end(), 0.0) / static_cast<double>(fs.size());
      double var = 0.0;
      for (double f : fs) var += (f - mean) * (f - mean);
      result.fidelity_error = fs.size() > 1 ? std::sqrt(var / static_cast<double>(fs.size() - 1)) : 0.0;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

json to_json(const WignerMap& m) {
  json alphas = json::array();
  for (const auto& a : m.alphas) alphas.push_back({a.real(), a.imag()});
  json pops = json::array();
  for (const auto& p : m.populations) pops.push_back(to_std(p));
  return {{"target", m.target},     {"alphas", alphas},       {"values", m.values}, {"errors", m.errors},
          {"populations", pops},    {"residuals", m.residuals}, {"metadata", m.metadata}};
}

WignerMap wigner_map_from_json(const json& j) {
  WignerMap m;
  try {
    m.target = j.at("target").get<std::string>();
    for (const auto& a : j.at("alphas")) m.alphas.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
    m.values = j.at("values").get<std::vector<double>>();
    m.errors = j.at("errors").get<std::vector<double>>();
    for (const auto& p : j.at("populations")) {
      const auto v = p.get<std::vector<double>>();
      m.populations.push_back(Eigen::Map<const RealVector>(v.data(), idx(v.size())));
    }
    m.residuals = j.at("residuals").get<std::vector<double>>();
    m.metadata = j.value("metadata", json::object());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("malformed Wigner map JSON: ") + e.what());
  }
  m.validate();
  return m;
}

std::string to_csv(const WignerMap& m) {
  std::string out = "alpha_re,alpha_im,wigner,std_error,residual\n";
  for (std::size_t i = 0; i < m.alphas.size(); ++i) {
    out += format_double(m.alphas[i].real()) + "," + format_double(m.alphas[i].imag()) + "," +
           format_double(m.values[i]) + "," + format_double(m.errors[i]) + "," + format_double(m.residuals[i]) + "\n";
  }
  return out;
}

json to_json(const ReconstructionResult& r) {
  json j = {{"d_rec", r.rho.layout.magnon_dim},
            {"rho_real", matrix_json(r.rho.rho.real())},
            {"rho_imag", matrix_json(r.rho.rho.imag())},
            {"residual_norm", r.residual_norm},
            {"min_eigenvalue_before_clip", r.min_eigenvalue_before_clip}};
  j["fidelity"] = r.fidelity ? json(*r.fidelity) : json(nullptr);
  j["fidelity_error"] = r.fidelity_error ? json(*r.fidelity_error) : json(nullptr);
  return j;
}

std::string density_matrix_csv(const ComplexMatrix& rho) {
  std::string out;
  auto block = [&](bool imag) {
    for (Eigen::Index i = 0; i < rho.rows(); ++i) {
      for (Eigen::Index k = 0; k < rho.cols(); ++k) {
        if (k) out += ",";
        out += format_double(imag ? rho(i, k).imag() : rho(i, k).real());
      }
      out += "\n";
    }
  };
  block(false);
  out += "\n";
  block(true);
  return out;
}

}  // namespace magsim
