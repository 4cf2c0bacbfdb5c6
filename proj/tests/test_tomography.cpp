#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "magsim/errors.hpp"
#include "magsim/tomography.hpp"

using namespace magsim;

namespace {

constexpr double k2pi = 2.0 / kPi;

// Exhaustive active-set search: the feasible subset least-squares solution
// with the smallest residual.
RealVector brute_force_nnls(const RealMatrix& a, const RealVector& b) {
  const int n = int(a.cols());
  RealVector best = RealVector::Zero(n);
  double best_res = b.norm();
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> cols;
    for (int k = 0; k < n; ++k)
      if (mask & (1 << k)) cols.push_back(k);
    RealMatrix sub(a.rows(), Eigen::Index(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(Eigen::Index(k)) = a.col(cols[k]);
    const RealVector xs = sub.colPivHouseholderQr().solve(b);
    if ((xs.array() < 0.0).any()) continue;
    RealVector x = RealVector::Zero(n);
    for (std::size_t k = 0; k < cols.size(); ++k) x(cols[k]) = xs(Eigen::Index(k));
    const double res = (a * x - b).norm();
    if (res < best_res - 1e-12) {
      best_res = res;
      best = x;
    }
  }
  return best;
}

// Ideal exchange curves: |g,n> swaps with the excited qubit at g sqrt(n).
SwapTemplateSet sine_templates(std::size_t n_max, const std::vector<double>& tau, double g_mhz) {
  SwapTemplateSet t;
  t.tau_grid = tau;
  t.n_max = n_max;
  for (std::size_t n = 0; n <= n_max; ++n) {
    RealVector c(Eigen::Index(tau.size()));
    for (std::size_t k = 0; k < tau.size(); ++k)
      c(Eigen::Index(k)) = std::pow(std::sin(kTwoPi * g_mhz * 1e-3 * std::sqrt(double(n)) * tau[k]), 2);
    t.templates.push_back(c);
  }
  return t;
}

RealVector poisson(double mean, std::size_t n_max) {
  RealVector p(Eigen::Index(n_max + 1));
  double term = std::exp(-mean);
  for (std::size_t n = 0; n <= n_max; ++n) {
    p(Eigen::Index(n)) = term;
    term *= mean / double(n + 1);
  }
  return p;
}

DensityMatrix magnon_pure(const ComplexVector& psi) {
  return DensityMatrix::pure(HilbertLayout::magnon_only(std::size_t(psi.size())), psi);
}

ComplexVector equal_superposition(std::size_t dim) {
  ComplexVector v = ComplexVector::Zero(Eigen::Index(dim));
  v(0) = v(1) = 1.0 / std::sqrt(2.0);
  return v;
}

std::vector<double> grid(double first, double last, double step) { return arange(first, last, step); }

}  // namespace

TEST(Nnls, MatchesExhaustiveActiveSetSearch) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 30; ++trial) {
    RealMatrix a(12, 5);
    RealVector b(12);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = nd(rng);
    const RealVector x = nnls(a, b);
    const RealVector ref = brute_force_nnls(a, b);
    EXPECT_LT((x - ref).norm(), 1e-9) << "trial " << trial;
    // KKT: gradient non-negative, complementary slackness.
    const RealVector grad = a.transpose() * (a * x - b);
    for (Eigen::Index k = 0; k < 5; ++k) {
      EXPECT_GE(x(k), 0.0);
      EXPECT_GE(grad(k), -1e-9);
      EXPECT_LT(std::abs(x(k) * grad(k)), 1e-9);
    }
  }
}

TEST(Simplex, ProjectionCharacterization) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  for (int trial = 0; trial < 20; ++trial) {
    RealVector v(6);
    for (Eigen::Index i = 0; i < 6; ++i) v(i) = nd(rng);
    const RealVector x = project_to_simplex(v);
    EXPECT_NEAR(x.sum(), 1.0, 1e-12);
    EXPECT_GE(x.minCoeff(), 0.0);
    // (v - x) . (y - x) <= 0 for every y in the simplex.
    for (int k = 0; k < 20; ++k) {
      RealVector y(6);
      for (Eigen::Index i = 0; i < 6; ++i) y(i) = -std::log(ud(rng));
      y /= y.sum();
      EXPECT_LE((v - x).dot(y - x), 1e-12);
    }
  }
  RealVector inside(3);
  inside << 0.2, 0.3, 0.5;
  EXPECT_LT((project_to_simplex(inside) - inside).norm(), 1e-15);
}

TEST(Wigner, FockStatesFollowLaguerreForm) {
  const std::size_t dim = 8;
  for (unsigned n = 0; n < 4; ++n) {
    const DensityMatrix rho = magnon_pure(fock_state(n, dim));
    for (Complex a : {Complex(0.0, 0.0), Complex(0.4, 0.0), Complex(-0.3, 0.7), Complex(1.1, 0.5)}) {
      const double r2 = std::norm(a);
      const double expected = k2pi * (n % 2 ? -1.0 : 1.0) * std::exp(-2.0 * r2) * std::laguerre(n, 4.0 * r2);
      EXPECT_NEAR(wigner_analytic(rho, a), expected, 1e-10) << n << " " << a;
    }
  }
  EXPECT_NEAR(wigner_analytic(magnon_pure(fock_state(1, 4)), 0.0), -k2pi, 1e-12);
}

TEST(Wigner, CoherentStateIsGaussian) {
  const Complex beta(0.5, -0.25);
  const DensityMatrix rho = magnon_pure(coherent_state(beta, 30));
  for (Complex a : {Complex(0.0, 0.0), Complex(0.5, -0.25), Complex(1.0, 0.5)})
    EXPECT_NEAR(wigner_analytic(rho, a), k2pi * std::exp(-2.0 * std::norm(a - beta)), 1e-9);
}

TEST(Wigner, PointAndErrorFromPopulations) {
  RealVector p(4);
  p << 0.1, 0.6, 0.2, 0.1;
  EXPECT_NEAR(wigner_point(p), k2pi * (0.1 - 0.6 + 0.2 - 0.1), 1e-15);
  RealMatrix c = RealMatrix::Zero(4, 4);
  c(1, 1) = 0.01;
  c(0, 1) = c(1, 0) = -0.004;
  c(0, 0) = 0.0025;
  // s = (1, -1, 1, -1): s^T C s = 0.0025 + 0.01 + 0.008
  EXPECT_NEAR(wigner_point_error(c), k2pi * std::sqrt(0.0205), 1e-15);
}

TEST(Grid, SquareGridOrdering) {
  const auto g = alpha_grid_square(3, 1.0);
  ASSERT_EQ(g.size(), 9u);
  EXPECT_EQ(g[0], Complex(-1.0, -1.0));
  EXPECT_EQ(g[1], Complex(-1.0, 0.0));
  EXPECT_EQ(g[4], Complex(0.0, 0.0));
  EXPECT_EQ(g[8], Complex(1.0, 1.0));
}

TEST(Regression, RecoversMixtureAndPoissonFromIdealCurves) {
  const auto tau = grid(0.0, 200.0, 2.0);
  const SwapTemplateSet t = sine_templates(9, tau, 5.56);
  RealVector half = RealVector::Zero(10);
  half(0) = half(1) = 0.5;
  const PopulationFit f = fit_populations(t.matrix() * half, t);
  EXPECT_LT((f.populations - half).norm(), 1e-8);
  EXPECT_NEAR(wigner_point(f.populations), 0.0, 1e-8);

  const RealVector pois = poisson(1.0, 9) / poisson(1.0, 9).sum();
  const PopulationFit fp = fit_populations(t.matrix() * pois, t);
  EXPECT_LT((fp.populations - pois).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(f.condition_number, 1e8);
}

TEST(Regression, NoisyCurvesStayWithinReportedErrors) {
  const auto tau = grid(0.0, 200.0, 2.0);
  const SwapTemplateSet t = sine_templates(6, tau, 5.56);
  RealVector p = RealVector::Zero(7);
  p << 0.3, 0.5, 0.2, 0, 0, 0, 0;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd(0.0, 0.002);
  RealVector y = t.matrix() * p;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += nd(rng);
  const PopulationFit f = fit_populations(y, t, RealVector::Constant(y.size(), 0.002));
  const double w = wigner_point(f.populations), sigma = wigner_point_error(f.covariance);
  EXPECT_GT(sigma, 0.0);
  EXPECT_LT(std::abs(w - wigner_point(p)), 4.0 * sigma + 1e-3);
}

TEST(Regression, ShortWindowIsIllConditioned) {
  const SwapTemplateSet t = sine_templates(9, grid(0.0, 10.0, 1.0), 5.56);
  try {
    fit_populations(t.matrix() * RealVector::Constant(10, 0.1), t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Conditioning);
  }
}

TEST(Templates, SimulatedCurvesMatchExchangeOracle) {
  PhysicalParams p;
  p.dissipation = false;
  const ProtocolCalibration c = base_calibration(p);
  const auto tau = grid(0.0, 100.0, 5.0);
  EvolveOptions ideal;
  ideal.isolate_pulses = true;
  const SwapTemplateSet sim = swap_templates(p, c, 4, tau, 8, ideal);
  const SwapTemplateSet ref = sine_templates(4, tau, effective_coupling(p));
  for (std::size_t n = 0; n <= 4; ++n)
    EXPECT_LT((sim.templates[n] - ref.templates[n]).cwiseAbs().maxCoeff(), 5e-3) << n;
  // n = 2 peaks at 1 / (4 g sqrt 2) = 31.8 ns.
  EXPECT_NEAR(1.0 / (4.0 * effective_coupling(p) * 1e-3 * std::sqrt(2.0)), 31.8, 0.05);
}

TEST(Reconstruction, AnalyticMapsRoundTrip) {
  const auto alphas = alpha_grid_square(5, 1.0);
  for (const ComplexVector& psi : {fock_state(1, 4), equal_superposition(4)}) {
    const DensityMatrix rho = magnon_pure(psi);
    ReconstructOptions o;
    o.target = psi;
    const ReconstructionResult r = reconstruct_density_matrix(analytic_map(rho, alphas), 4, o);
    EXPECT_GE(*r.fidelity, 0.99);
    EXPECT_LE(trace_distance(r.rho.rho, rho.rho), 1e-6);
    EXPECT_NO_THROW(r.rho.validate());
  }
}

TEST(Reconstruction, NoisyMapGivesBootstrapError) {
  const ComplexVector psi = equal_superposition(4);
  const WignerMap m = analytic_map(magnon_pure(psi), alpha_grid_square(5, 1.0), 0.02, 17);
  ReconstructOptions o;
  o.target = psi;
  o.bootstrap = 25;
  o.seed = 3;
  const ReconstructionResult r = reconstruct_density_matrix(m, 4, o);
  ASSERT_TRUE(r.fidelity_error.has_value());
  EXPECT_GT(*r.fidelity_error, 0.0);
  EXPECT_GT(*r.fidelity, 0.9);
  const ReconstructionResult again = reconstruct_density_matrix(m, 4, o);
  EXPECT_EQ(*again.fidelity_error, *r.fidelity_error);
}

TEST(Reconstruction, InformativenessAndDimensionGuards) {
  const DensityMatrix rho = magnon_pure(fock_state(1, 4));
  try {
    reconstruct_density_matrix(analytic_map(rho, alpha_grid_square(3, 1.0)), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Informativeness);
  }
  WignerMap m = analytic_map(rho, alpha_grid_square(5, 1.0));
  m.metadata["n_max"] = 2;
  try {
    reconstruct_density_matrix(m, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidDimension);
  }
}

TEST(Metrics, FidelityAndTraceDistance) {
  const DensityMatrix mixed{HilbertLayout::magnon_only(2), ComplexMatrix::Identity(2, 2) * 0.5};
  EXPECT_NEAR(fidelity(mixed, fock_state(0, 2)), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(trace_distance(mixed.rho, magnon_pure(fock_state(0, 2)).rho), 0.5, 1e-12);
  EXPECT_THROW(fidelity(mixed, fock_state(0, 3)), Error);
}

TEST(Serialization, WignerMapRoundTrip) {
  const WignerMap m = analytic_map(magnon_pure(equal_superposition(4)), alpha_grid_square(3, 0.7), 0.01, 2);
  const WignerMap back = wigner_map_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(m).dump());
  EXPECT_EQ(back.values, m.values);
  const std::string csv = to_csv(m);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "alpha_re,alpha_im,wigner,std_error,residual");
}

TEST(Pipeline, ExactPopulationsMatchTheAnalyticWignerFunction) {
  const PhysicalParams p = PhysicalParams{}.without_dissipation();
  EvolveOptions ideal;
  ideal.isolate_pulses = true;
  const ProtocolCalibration c = calibrate_protocol(p, {}, ideal);
  WignerOptions o;
  o.exact_populations = true;
  o.evolve = ideal;
  const std::vector<Complex> alphas = {0.0, Complex(0.5, 0.0), Complex(-0.3, 0.6)};
  const WignerMap m = wigner_map(p, PrepTarget::single_magnon(), c, alphas, o);
  const DensityMatrix rho =
      prepare_magnon_state(p, PrepTarget::single_magnon(), c, c.settings.tomography_magnon_dim, ideal);
  for (std::size_t i = 0; i < alphas.size(); ++i) EXPECT_NEAR(m.values[i], wigner_analytic(rho, alphas[i]), 1e-6);
  EXPECT_NEAR(m.values[0], -k2pi, 2e-3);
}
