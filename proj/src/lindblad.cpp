#include "magsim/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "magsim/errors.hpp"

namespace magsim {

namespace {

constexpr double kMHz = 1e-3;
constexpr double kTimeSlack = 1e-9;
constexpr double kDriftRenormalize = 1e-7;

using Triplet = Eigen::Triplet<Complex>;

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

ComplexVector vec(const ComplexMatrix& m) { return Eigen::Map<const ComplexVector>(m.data(), m.size()); }

ComplexMatrix unvec(const ComplexVector& v, Eigen::Index d) { return Eigen::Map<const ComplexMatrix>(v.data(), d, d); }

double sparse_one_norm(const SparseMatrix& l) {
  double best = 0.0;
  for (Eigen::Index k = 0; k < l.outerSize(); ++k) {
    double col = 0.0;
    for (SparseMatrix::InnerIterator it(l, k); it; ++it) col += std::abs(it.value());
    best = std::max(best, col);
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix DensityMatrix::pure(const HilbertLayout& layout, const ComplexVector& psi) {
  if (static_cast<std::size_t>(psi.size()) != layout.dimension()) {
    throw Error(ErrorKind::InvalidDimension, "pure state does not match the layout dimension");
  }
  const double n = psi.norm();
  if (!(n > 0.0)) throw Error(ErrorKind::InvalidState, "pure state vector is zero");
  const ComplexVector u = psi / n;
  return {layout, u * u.adjoint()};
}

DensityMatrix DensityMatrix::ground(const HilbertLayout& layout, std::size_t magnon_n) {
  layout.validate();
  if (magnon_n >= layout.magnon_dim) {
    throw Error(ErrorKind::InvalidDimension, "ground: magnon Fock number beyond truncation");
  }
  const std::size_t dc = layout.cavity_dim == 0 ? 1 : layout.cavity_dim;
  ComplexVector psi = ComplexVector::Zero(idx(layout.dimension()));
  psi(idx(magnon_n * dc)) = 1.0;
  return pure(layout, psi);
}

void DensityMatrix::validate() const {
  if (static_cast<std::size_t>(rho.rows()) != layout.dimension() || rho.rows() != rho.cols()) {
    throw Error(ErrorKind::InvalidDimension, "density matrix does not match its layout");
  }
  const double herm = hermiticity_residual(rho);
  if (herm > 1e-9) {
    std::ostringstream msg;
    msg << "density matrix is not Hermitian (residual " << herm << ")";
    throw Error(ErrorKind::InvalidState, msg.str());
  }
  const double tr = rho.trace().real();
  if (std::abs(tr - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "density matrix trace is " << tr;
    throw Error(ErrorKind::InvalidState, msg.str());
  }
  const double lmin = min_eigenvalue();
  if (lmin < -1e-8) {
    std::ostringstream msg;
    msg << "density matrix has eigenvalue " << lmin;
    throw Error(ErrorKind::InvalidState, msg.str());
  }
}

double DensityMatrix::min_eigenvalue() const {
  const ComplexMatrix h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double DensityMatrix::purity() const { return (rho * rho).trace().real(); }

// ---------------------------------------------------------------------------
// Collapse operators and superoperators

std::vector<CollapseOperator> collapse_set(const PhysicalParams& p, const HilbertLayout& layout) {
  layout.validate();
  std::vector<CollapseOperator> out;
  if (!p.dissipation) return out;
  auto add = [&](std::string name, Factor f, const ComplexMatrix& op, double rate) {
    if (rate > 0.0 && layout.has(f)) out.push_back({std::move(name), embed(layout, f, op), rate});
  };
  if (layout.has(Factor::Qutrit)) {
    const auto q = qutrit_operators();
    const double g1 = 1.0 / (p.t1_qubit_us * 1e3);
    const double nq = p.qubit_thermal_occupation;
    add("qubit_relaxation_eg", Factor::Qutrit, q.lower_ge, g1 * (1.0 + nq));
    add("qubit_relaxation_fe", Factor::Qutrit, q.lower_ef, 2.0 * g1 * (1.0 + nq));
    add("qubit_excitation_ge", Factor::Qutrit, q.lower_ge.adjoint(), g1 * nq);
    add("qubit_excitation_ef", Factor::Qutrit, q.lower_ef.adjoint(), 2.0 * g1 * nq);
    ComplexMatrix deph = ComplexMatrix::Zero(3, 3);
    deph(1, 1) = 1.0;
    deph(2, 2) = 2.0;
    add("qubit_dephasing", Factor::Qutrit, deph, 2.0 / (p.t_phi_qubit_us * 1e3));
  }
  const std::size_t dm = layout.magnon_dim;
  const double gm = 1.0 / p.t1_magnon_ns;
  const double nm = p.magnon_thermal_occupation;
  add("magnon_decay", Factor::Magnon, fock_annihilation(dm), gm * (1.0 + nm));
  add("magnon_excitation", Factor::Magnon, fock_annihilation(dm).adjoint(), gm * nm);
  add("magnon_dephasing", Factor::Magnon, number_operator(dm), 2.0 * p.magnon_dephasing_per_us * 1e-3);
  if (layout.has(Factor::Cavity)) {
    add("cavity_decay", Factor::Cavity, fock_annihilation(layout.cavity_dim),
        kTwoPi * p.cavity_linewidth_mhz * kMHz);
  }
  return out;
}

SparseMatrix hamiltonian_superoperator(const ComplexMatrix& h) {
  const Eigen::Index d = h.rows();
  std::vector<Triplet> t;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const Complex v = h(i, k);
      if (v == Complex(0.0)) continue;
      for (Eigen::Index j = 0; j < d; ++j) {
        t.emplace_back(i + j * d, k + j * d, -kI * v);  // -i H rho
        t.emplace_back(j + k * d, j + i * d, kI * v);   // +i rho H
      }
    }
  }
  SparseMatrix l(d * d, d * d);
  l.setFromTriplets(t.begin(), t.end());
  return l;
}

SparseMatrix dissipator_superoperator(const std::vector<CollapseOperator>& ops, std::size_t dim) {
  const Eigen::Index d = idx(dim);
  std::vector<Triplet> t;
  for (const auto& c : ops) {
    const ComplexMatrix& a = c.op;
    const ComplexMatrix ada = a.adjoint() * a;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> nz;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index k = 0; k < d; ++k)
        if (a(i, k) != Complex(0.0)) nz.emplace_back(i, k);
    // L rho L^dagger: entry (i + j d, k + l d) = L_ik conj(L_jl)
    for (auto [i, k] : nz)
      for (auto [j, l] : nz) t.emplace_back(i + j * d, k + l * d, c.rate * a(i, k) * std::conj(a(j, l)));
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) {
        const Complex v = ada(i, k);
        if (v == Complex(0.0)) continue;
        for (Eigen::Index j = 0; j < d; ++j) {
          t.emplace_back(i + j * d, k + j * d, -0.5 * c.rate * v);
          t.emplace_back(j + k * d, j + i * d, -0.5 * c.rate * v);
        }
      }
    }
  }
  SparseMatrix l(d * d, d * d);
  l.setFromTriplets(t.begin(), t.end());
  return l;
}

ComplexVector expm_action(const SparseMatrix& l, double h, const ComplexVector& v) {
  if (h == 0.0) return v;
  const double norm = sparse_one_norm(l) * std::abs(h);
  const int substeps = std::max(1, static_cast<int>(std::ceil(norm / 3.5)));
  const double dt = h / substeps;
  ComplexVector out = v;
  for (int s = 0; s < substeps; ++s) {
    ComplexVector term = out;
    ComplexVector sum = out;
    int small = 0;
    for (int k = 1; k < 80; ++k) {
      term = (dt / k) * (l * term);
      sum += term;
      if (term.lpNorm<Eigen::Infinity>() <= 1e-16 * sum.lpNorm<Eigen::Infinity>()) {
        if (++small == 2) break;
      } else {
        small = 0;
      }
    }
    out = std::move(sum);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evolution

namespace {

bool same(double a, double b) { return std::abs(a - b) <= 1e-12; }

struct DriveTerm {
  DriveSample sample;  // amplitude is the envelope at the interval midpoint
  const PulseSegment* segment = nullptr;
  double carrier_ghz = 0.0;
  SparseMatrix cos_part;
  SparseMatrix sin_part;
};

class Propagator {
 public:
  Propagator(const PhysicalParams& p, const HilbertLayout& layout, const PulseSchedule& s, const EvolveOptions& o)
      : p_(p), layout_(layout), sched_(s), opt_(o), d_(idx(layout.dimension())) {
    dissipator_ = dissipator_superoperator(collapse_set(p, layout), layout.dimension());
    n_ = excitation_numbers(layout);
  }

  std::size_t exact_intervals = 0;
  std::size_t rk4_steps = 0;

  void advance(ComplexVector& v, double a, double b) {
    if (b - a <= 0.0) return;
    const double mid = 0.5 * (a + b);
    std::vector<const PulseSegment*> at_segs, drive_segs;
    for (const auto& seg : sched_.segments) {
      if (!seg.active_at(mid)) continue;
      (seg.channel == Channel::ATControl ? at_segs : drive_segs).push_back(&seg);
    }
    const bool exchange = !(opt_.isolate_pulses && !drive_segs.empty());
    bool at_constant = true;
    for (auto* s : at_segs) at_constant = at_constant && s->envelope.is_constant();

    bool exact = at_constant;
    double nu = 0.0;
    bool first = true;
    for (auto* s : drive_segs) {
      if (s->amplitude_mhz == 0.0) continue;
      const double c = drive_carrier_ghz(p_, {s->channel, 0.0, 0.0, s->carrier_detuning_mhz});
      if (!s->envelope.is_constant()) exact = false;
      if (first) {
        nu = c;
        first = false;
      } else if (!same(c, nu)) {
        exact = false;
      }
    }

    HamiltonianOptions hopt;
    hopt.magnon_freq_ghz = opt_.magnon_freq_ghz;
    hopt.exchange = exchange;
    if (exact) {
      hopt.frame = {nu, a};
      const ComplexMatrix h = build_hamiltonian(p_, layout_, sched_.drives_at(mid), a, hopt);
      const SparseMatrix l = hamiltonian_superoperator(h) + dissipator_;
      v = expm_action(l, b - a, v);
      if (nu != 0.0) rotate_back(v, nu, b - a);
      ++exact_intervals;
      return;
    }

    // RK4 in the common frame with the shaped drives split off.
    auto at_drives = [&](double t) {
      std::vector<DriveSample> out;
      for (auto* s : at_segs) out.push_back({s->channel, s->amplitude_at(t), s->phase_rad, s->carrier_detuning_mhz});
      return out;
    };
    const std::vector<DriveSample> at_mid = at_drives(mid);
    const ComplexMatrix h_base = build_hamiltonian(p_, layout_, at_mid, 0.0, hopt);
    SparseMatrix l_static = hamiltonian_superoperator(h_base) + dissipator_;

    std::vector<DriveTerm> terms;
    for (auto* s : drive_segs) {
      if (s->amplitude_mhz == 0.0) continue;
      DriveTerm term;
      term.segment = s;
      term.sample = {s->channel, 1.0, 0.0, s->carrier_detuning_mhz};
      term.carrier_ghz = drive_carrier_ghz(p_, term.sample);
      auto unit = [&](double phase) {
        std::vector<DriveSample> ds = at_mid;
        ds.push_back({s->channel, 1.0, phase, s->carrier_detuning_mhz});
        return hamiltonian_superoperator(build_hamiltonian(p_, layout_, ds, 0.0, hopt) - h_base);
      };
      term.cos_part = unit(0.0);
      term.sin_part = unit(0.5 * kPi);
      terms.push_back(std::move(term));
    }

    auto rhs = [&](double t, const ComplexVector& x) -> ComplexVector {
      ComplexVector y;
      if (at_constant) {
        y = l_static * x;
      } else {
        const ComplexMatrix h = build_hamiltonian(p_, layout_, at_drives(t), 0.0, hopt);
        y = (hamiltonian_superoperator(h) + dissipator_) * x;
      }
      for (const auto& term : terms) {
        const double amp = term.segment->amplitude_at(t);
        if (amp == 0.0) continue;
        const double phi = kTwoPi * term.carrier_ghz * t + term.segment->phase_rad;
        y += (amp * std::cos(phi)) * (term.cos_part * x) + (amp * std::sin(phi)) * (term.sin_part * x);
      }
      return y;
    };

    const int steps = std::max(1, static_cast<int>(std::ceil((b - a) / opt_.rk4_step_ns - 1e-9)));
    const double dt = (b - a) / steps;
    for (int k = 0; k < steps; ++k) {
      const double t = a + k * dt;
      const ComplexVector k1 = rhs(t, v);
      const ComplexVector k2 = rhs(t + 0.5 * dt, v + (0.5 * dt) * k1);
      const ComplexVector k3 = rhs(t + 0.5 * dt, v + (0.5 * dt) * k2);
      const ComplexVector k4 = rhs(t + dt, v + dt * k3);
      v += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    rk4_steps += static_cast<std::size_t>(steps);
  }

 private:
  // From the frame rotating at nu (referenced to the interval start) back to
  // the common frame.
  void rotate_back(ComplexVector& v, double nu, double dt) const {
    for (Eigen::Index j = 0; j < d_; ++j) {
      for (Eigen::Index i = 0; i < d_; ++i) {
        const double dn = n_(i) - n_(j);
        if (dn != 0.0) v(i + j * d_) *= std::exp(-kI * (kTwoPi * nu * dn * dt));
      }
    }
  }

  const PhysicalParams& p_;
  HilbertLayout layout_;
  const PulseSchedule& sched_;
  EvolveOptions opt_;
  Eigen::Index d_;
  SparseMatrix dissipator_;
  RealVector n_;
};

}  // namespace

std::vector<DensityMatrix> evolve(const PhysicalParams& p, const HilbertLayout& layout, const PulseSchedule& sched,
                                  const DensityMatrix& rho0, const std::vector<double>& sample_times,
                                  const EvolveOptions& options, EvolveDiagnostics* diagnostics) {
  layout.validate();
  if (!(rho0.layout == layout)) throw Error(ErrorKind::InvalidState, "evolve: rho0 layout differs from the layout");
  rho0.validate();
  if (!(options.rk4_step_ns > 0.0)) throw Error(ErrorKind::Config, "evolve: rk4 step must be positive");
  const double t0 = options.start_time_ns;
  for (double t : sample_times) {
    if (t < t0 - kTimeSlack || t > sched.total_duration_ns + kTimeSlack) {
      std::ostringstream msg;
      msg << "evolve: sample time " << t << " ns outside [" << t0 << ", " << sched.total_duration_ns << "]";
      throw Error(ErrorKind::Config, msg.str());
    }
  }

  std::vector<std::size_t> order(sample_times.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return sample_times[x] < sample_times[y]; });

  Propagator prop(p, layout, sched, options);
  const auto d = idx(layout.dimension());
  ComplexVector v = vec(rho0.rho);
  std::vector<double> edges;
  for (double e : sched.edges()) {
    if (e > t0 + kTimeSlack) edges.push_back(e);
  }

  EvolveDiagnostics diag;
  diag.min_eigenvalue = rho0.min_eigenvalue();
  std::vector<DensityMatrix> out(sample_times.size());
  double now = t0;
  std::size_t next_edge = 0;
  for (std::size_t oi : order) {
    const double target = std::max(t0, sample_times[oi]);
    while (next_edge < edges.size() && edges[next_edge] < target - kTimeSlack) {
      prop.advance(v, now, edges[next_edge]);
      now = edges[next_edge++];
    }
    if (target > now + kTimeSlack) {
      prop.advance(v, now, target);
      now = target;
    }
    ComplexMatrix rho = unvec(v, d);
    const double drift = std::abs(rho.trace() - Complex(1.0));
    const double herm = hermiticity_residual(rho);
    diag.max_trace_drift = std::max(diag.max_trace_drift, drift);
    diag.max_hermiticity_residual = std::max(diag.max_hermiticity_residual, herm);
    if (drift > kDriftRenormalize) {
      std::ostringstream msg;
      msg << "evolve: trace drifted by " << drift << " at t = " << now << " ns; use a smaller step";
      throw Error(ErrorKind::IntegratorAccuracy, msg.str());
    }
    rho = 0.5 * (rho + rho.adjoint());
    rho /= rho.trace().real();
    DensityMatrix dm{layout, rho};
    if (options.track_positivity) diag.min_eigenvalue = std::min(diag.min_eigenvalue, dm.min_eigenvalue());
    out[oi] = std::move(dm);
  }
  diag.exact_intervals = prop.exact_intervals;
  diag.rk4_steps = prop.rk4_steps;
  if (diagnostics) *diagnostics = diag;
  return out;
}

double expectation(const DensityMatrix& rho, const ComplexMatrix& obs) {
  if (obs.rows() != rho.rho.rows() || obs.cols() != rho.rho.cols()) {
    throw Error(ErrorKind::InvalidDimension, "expectation: observable dimension differs from the state");
  }
  const double scale = std::max(1.0, obs.cwiseAbs().maxCoeff());
  if (hermiticity_residual(obs) > 1e-10 * scale) {
    throw Error(ErrorKind::InvalidObservable, "expectation: observable is not Hermitian");
  }
  const Complex v = (rho.rho.transpose().cwiseProduct(obs)).sum();
  if (std::abs(v.imag()) > 1e-10 * scale) {
    throw Error(ErrorKind::InvalidObservable, "expectation: complex expectation value; is the state Hermitian?");
  }
  return v.real();
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<Factor>& keep) {
  if (keep.empty()) throw Error(ErrorKind::InvalidSelector, "partial_trace: nothing to keep");
  const HilbertLayout& L = rho.layout;
  std::vector<Factor> present;
  std::vector<std::size_t> dims;
  for (Factor f : {Factor::Qutrit, Factor::Magnon, Factor::Cavity}) {
    if (L.has(f)) {
      present.push_back(f);
      dims.push_back(L.dim_of(f));
    }
  }
  std::vector<bool> kept(present.size(), false);
  for (Factor f : keep) {
    auto it = std::find(present.begin(), present.end(), f);
    if (it == present.end()) throw Error(ErrorKind::InvalidSelector, "partial_trace: factor absent from the layout");
    kept[static_cast<std::size_t>(it - present.begin())] = true;
  }
  HilbertLayout out_layout{0, 0, 0};
  for (std::size_t k = 0; k < present.size(); ++k) {
    if (!kept[k]) continue;
    switch (present[k]) {
      case Factor::Qutrit: out_layout.qutrit_dim = dims[k]; break;
      case Factor::Magnon: out_layout.magnon_dim = dims[k]; break;
      case Factor::Cavity: out_layout.cavity_dim = dims[k]; break;
    }
  }
  if (out_layout.magnon_dim == 0) out_layout.magnon_dim = 1;  // placeholder factor of size one
  std::size_t dk = 1, dt = 1;
  for (std::size_t k = 0; k < present.size(); ++k) (kept[k] ? dk : dt) *= dims[k];

  const std::size_t n = L.dimension();
  // Split each full index into (kept, traced) sub-indices.
  std::vector<std::size_t> ki(n), ti(n);
  for (std::size_t a = 0; a < n; ++a) {
    std::size_t rem = a, kidx = 0, tidx = 0, kmul = 1, tmul = 1;
    for (std::size_t k = present.size(); k-- > 0;) {
      const std::size_t digit = rem % dims[k];
      rem /= dims[k];
      if (kept[k]) {
        kidx += digit * kmul;
        kmul *= dims[k];
      } else {
        tidx += digit * tmul;
        tmul *= dims[k];
      }
    }
    ki[a] = kidx;
    ti[a] = tidx;
  }
  ComplexMatrix red = ComplexMatrix::Zero(idx(dk), idx(dk));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (ti[a] == ti[b]) red(idx(ki[a]), idx(ki[b])) += rho.rho(idx(a), idx(b));
    }
  }
  return {out_layout, red};
}

double readout_qubit_excited(const DensityMatrix& rho, const std::optional<AssignmentMatrix>& assignment) {
  const HilbertLayout& L = rho.layout;
  if (L.qutrit_dim != 3) throw Error(ErrorKind::InvalidDimension, "readout: state carries no qutrit");
  const std::size_t block = L.dimension() / 3;
  double p = 0.0;
  for (std::size_t a = block; a < L.dimension(); ++a) p += rho.rho(idx(a), idx(a)).real();
  p = std::clamp(p, 0.0, 1.0);
  if (assignment) p = (*assignment)(1, 0) * (1.0 - p) + (*assignment)(1, 1) * p;
  return p;
}

double readout_qubit_excited(const DensityMatrix& rho, const AssignmentMatrix& assignment) {
  return readout_qubit_excited(rho, std::optional<AssignmentMatrix>(assignment));
}

// ---------------------------------------------------------------------------

WindowReadout::WindowReadout(const PhysicalParams& p, const HilbertLayout& layout,
                             const std::vector<DriveSample>& drives, std::vector<double> tau_grid,
                             const HamiltonianOptions& options, const WindowLead& lead)
    : layout_(layout), taus_(std::move(tau_grid)) {
  layout.validate();
  for (const auto& d : drives) {
    if (d.channel != Channel::ATControl && d.amplitude_mhz != 0.0) {
      throw Error(ErrorKind::Config, "window readout supports the AT drive only");
    }
  }
  for (std::size_t k = 0; k < taus_.size(); ++k) {
    if (taus_[k] < 0.0 || (k > 0 && taus_[k] < taus_[k - 1])) {
      throw Error(ErrorKind::Config, "window readout: tau grid must be non-negative and ascending");
    }
  }
  const std::size_t n = layout.dimension();
  const auto d = idx(n);
  const ComplexMatrix h = build_hamiltonian(p, layout, drives, 0.0, options);
  const SparseMatrix l = hamiltonian_superoperator(h) + dissipator_superoperator(collapse_set(p, layout), n);
  const SparseMatrix ladj = l.adjoint();
  ComplexVector w = ComplexVector::Zero(d * d);
  for (std::size_t a = n / 3; a < n; ++a) w(idx(a) + idx(a) * d) = 1.0;
  weights_.resize(idx(taus_.size()), d * d);
  double t = 0.0;
  for (std::size_t k = 0; k < taus_.size(); ++k) {
    w = expm_action(ladj, taus_[k] - t, w);
    t = taus_[k];
    weights_.row(idx(k)) = w.adjoint();
  }
  if (lead.duration_ns > 0.0) {
    HamiltonianOptions lo = options;
    lo.exchange = lead.exchange;
    const ComplexMatrix h0 = build_hamiltonian(p, layout, {}, 0.0, lo);
    const SparseMatrix lead_adj =
        (hamiltonian_superoperator(h0) + dissipator_superoperator(collapse_set(p, layout), n)).adjoint();
    for (Eigen::Index k = 0; k < weights_.rows(); ++k) {
      const ComplexVector back = expm_action(lead_adj, lead.duration_ns, weights_.row(k).adjoint());
      weights_.row(k) = back.adjoint();
    }
  }
}

RealVector WindowReadout::curve(const DensityMatrix& start) const {
  if (!(start.layout == layout_)) throw Error(ErrorKind::InvalidDimension, "window readout: layout mismatch");
  const RealVector c = (weights_ * vec(start.rho)).real();
  return c.cwiseMax(0.0).cwiseMin(1.0);
}

RealVector WindowReadout::fock_curve(std::size_t n) const {
  if (n >= layout_.magnon_dim) throw Error(ErrorKind::InvalidDimension, "window readout: Fock number too large");
  const std::size_t dc = layout_.cavity_dim == 0 ? 1 : layout_.cavity_dim;
  const auto a = idx(n * dc);
  const auto d = idx(layout_.dimension());
  return weights_.col(a + a * d).real().cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace magsim
