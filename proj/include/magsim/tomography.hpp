#pragma once

// Wigner tomography by swap-curve regression, the analytic Wigner function,
// density-matrix reconstruction and fidelity.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "magsim/experiments.hpp"
#include "magsim/lindblad.hpp"
#include "magsim/schedule.hpp"

namespace magsim {

// P_n(tau): excited-qubit probability after the swap window when the magnon
// starts in |n> and the qubit in |g>.
struct SwapTemplateSet {
  std::vector<double> tau_grid;
  std::vector<RealVector> templates;  // index n = 0..n_max
  std::size_t n_max = 0;
  std::size_t magnon_dim = 0;
  nlohmann::json params = nlohmann::json::object();

  RealMatrix matrix() const;  // tau rows, n columns
};

SwapTemplateSet swap_templates(const PhysicalParams& p, const ProtocolCalibration& calib, std::size_t n_max,
                               const std::vector<double>& tau_grid, std::size_t magnon_dim = 0,
                               const EvolveOptions& evolve = {});
// Same, reusing an existing window propagator.
SwapTemplateSet swap_templates(const WindowReadout& window, std::size_t n_max);

// Lawson-Hanson non-negative least squares: min |A x - b|, x >= 0.
RealVector nnls(const RealMatrix& a, const RealVector& b, int max_iterations = 0);

// Euclidean projection onto {x >= 0, sum x = 1}.
RealVector project_to_simplex(const RealVector& v);

struct PopulationFit {
  RealVector populations;
  RealMatrix covariance;
  double residual_norm = 0.0;
  double condition_number = 0.0;
};

// Populations on the simplex from a measured swap curve. `errors` (optional,
// same length) weights the rows. Throws Conditioning above max_condition.
PopulationFit fit_populations(const RealVector& measured, const SwapTemplateSet& templates,
                              const RealVector& errors = {}, double max_condition = 1e8);

double wigner_point(const RealVector& populations);
double wigner_point_error(const RealMatrix& covariance);

// (2/pi) Tr[D(-alpha) rho D(alpha) P] for a magnon-only state, evaluated in a
// space of work_dim levels (0: a size chosen from |alpha|).
double wigner_analytic(const DensityMatrix& rho, Complex alpha, std::size_t work_dim = 0);

// Square n x n grid over Re, Im in [-half_width, half_width]; Re is the
// outer index.
std::vector<Complex> alpha_grid_square(std::size_t n, double half_width);

struct WignerMap {
  std::string target;
  std::vector<Complex> alphas;
  std::vector<double> values;
  std::vector<double> errors;
  std::vector<RealVector> populations;
  std::vector<double> residuals;
  nlohmann::json metadata = nlohmann::json::object();

  // |W| <= 2/pi + 3 sigma everywhere.
  void validate() const;
};

struct WignerOptions {
  std::vector<double> tau_grid_ns;
  std::size_t n_max = 9;
  // Fit the populations of the ideally displaced simulated state instead of
  // regressing simulated swap curves.
  bool exact_populations = false;
  std::optional<ShotModel> shots;
  std::size_t workers = 0;
  EvolveOptions evolve;
};

WignerMap wigner_map(const PhysicalParams& p, const PrepTarget& target, const ProtocolCalibration& calib,
                     const std::vector<Complex>& alphas, const WignerOptions& options);

// Analytic map of a magnon state, optionally with Gaussian noise of the given
// standard deviation (seeded).
WignerMap analytic_map(const DensityMatrix& rho, const std::vector<Complex>& alphas, double noise_sigma = 0.0,
                       std::uint64_t seed = 0);

double fidelity(const DensityMatrix& rho, const ComplexVector& target);
double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

struct ReconstructOptions {
  std::optional<ComplexVector> target;  // fidelity reference
  std::size_t bootstrap = 0;
  std::uint64_t seed = 0;
  std::size_t work_dim = 0;
};

struct ReconstructionResult {
  DensityMatrix rho;
  double residual_norm = 0.0;
  double min_eigenvalue_before_clip = 0.0;
  std::optional<double> fidelity;
  std::optional<double> fidelity_error;
};

ReconstructionResult reconstruct_density_matrix(const WignerMap& map, std::size_t d_rec,
                                                const ReconstructOptions& options = {});

nlohmann::json to_json(const WignerMap& m);
WignerMap wigner_map_from_json(const nlohmann::json& j);
std::string to_csv(const WignerMap& m);

nlohmann::json to_json(const ReconstructionResult& r);
// Real part block, blank line, imaginary part block.
std::string density_matrix_csv(const ComplexMatrix& rho);

}  // namespace magsim
