#include "magsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>
#include <thread>

#include "magsim/errors.hpp"

namespace magsim {

namespace {

constexpr double kMHz = 1e-3;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double lorentzian(double x, double center, double hwhm) {
  const double d = x - center;
  return hwhm * hwhm / (d * d + hwhm * hwhm);
}

}  // namespace

// ---------------------------------------------------------------------------
// ScanResult

std::size_t ScanResult::size() const {
  std::size_t n = axes.empty() ? 0 : 1;
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

double ScanResult::at(std::size_t i, std::size_t j) const {
  const std::size_t inner = axes.size() > 1 ? axes[1].values.size() : 1;
  return data.at(i * inner + j);
}

void ScanResult::validate() const {
  if (data.size() != size()) throw Error(ErrorKind::InvalidDimension, "scan data does not match its axes");
  if (!errors.empty() && errors.size() != data.size()) {
    throw Error(ErrorKind::InvalidDimension, "scan errors do not match the data");
  }
  if (is_probability) {
    for (double v : data) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::InvalidState, "scan probability outside [0, 1]");
    }
  }
}

nlohmann::json to_json(const ScanResult& r) {
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : r.axes) axes.push_back({{"name", a.name}, {"unit", a.unit}, {"values", a.values}});
  nlohmann::json j = {{"quantity", r.quantity}, {"unit", r.unit},   {"is_probability", r.is_probability},
                      {"axes", axes},           {"data", r.data},   {"errors", r.errors},
                      {"series", r.series},     {"metadata", r.metadata}};
  return j;
}

ScanResult scan_from_json(const nlohmann::json& j) {
  try {
    ScanResult r;
    r.quantity = j.at("quantity").get<std::string>();
    r.unit = j.at("unit").get<std::string>();
    r.is_probability = j.at("is_probability").get<bool>();
    for (const auto& a : j.at("axes")) {
      r.axes.push_back({a.at("name").get<std::string>(), a.at("unit").get<std::string>(),
                        a.at("values").get<std::vector<double>>()});
    }
    r.data = j.at("data").get<std::vector<double>>();
    r.errors = j.at("errors").get<std::vector<double>>();
    r.series = j.at("series").get<std::map<std::string, std::vector<double>>>();
    r.metadata = j.at("metadata");
    r.validate();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("scan json: ") + e.what());
  }
}

std::string to_csv(const ScanResult& r) {
  std::ostringstream out;
  for (const auto& a : r.axes) out << a.name << (a.unit.empty() ? "" : "_" + a.unit) << ",";
  out << r.quantity;
  if (!r.errors.empty()) out << ",std_error";
  out << "\n";
  const std::size_t n = r.size();
  std::vector<std::size_t> strides(r.axes.size(), 1);
  for (std::size_t k = r.axes.size(); k-- > 1;) strides[k - 1] = strides[k] * r.axes[k].values.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < r.axes.size(); ++k) {
      out << format_double(r.axes[k].values[(i / strides[k]) % r.axes[k].values.size()]) << ",";
    }
    out << format_double(r.data[i]);
    if (!r.errors.empty()) out << "," << format_double(r.errors[i]);
    out << "\n";
  }
  return out.str();
}

std::vector<double> linspace(double first, double last, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = n == 1 ? first : first + (last - first) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return v;
}

std::vector<double> arange(double first, double last, double step) {
  if (!(step > 0.0) || last < first) throw Error(ErrorKind::Config, "grid needs step > 0 and last >= first");
  const auto n = static_cast<std::size_t>(std::floor((last - first) / step + 1e-9)) + 1;
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = first + step * static_cast<double>(k);
  return v;
}

// ---------------------------------------------------------------------------
// Shots

void ShotModel::validate() const {
  if (shots < 1) throw Error(ErrorKind::Config, "shots must be at least 1");
  for (int c = 0; c < 2; ++c) {
    if (assignment(0, c) < 0.0 || assignment(1, c) < 0.0 ||
        std::abs(assignment(0, c) + assignment(1, c) - 1.0) > 1e-12) {
      throw Error(ErrorKind::Config, "assignment matrix columns must be probability vectors");
    }
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t point_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

ReadoutEstimate sample_readout(double prob, const ShotModel& shots, std::uint64_t index) {
  shots.validate();
  if (!(prob >= -1e-12 && prob <= 1.0 + 1e-12)) {
    throw Error(ErrorKind::InvalidState, "sample_readout: probability outside [0, 1]");
  }
  prob = std::clamp(prob, 0.0, 1.0);
  const double q = std::clamp(shots.assignment(1, 0) * (1.0 - prob) + shots.assignment(1, 1) * prob, 0.0, 1.0);
  std::mt19937_64 rng(point_seed(shots.seed, index));
  std::binomial_distribution<std::uint64_t> draw(shots.shots, q);
  const double n = static_cast<double>(shots.shots);
  const double est = static_cast<double>(draw(rng)) / n;
  return {est, std::sqrt(est * (1.0 - est) / n)};
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(n, 1));
  std::vector<std::exception_ptr> errors(n);
  auto body = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) body(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// Spectroscopy

std::vector<Transition> transitions(const PhysicalParams& p, double magnon_freq_ghz, double at_amplitude_mhz) {
  const HilbertLayout layout = HilbertLayout::two_body(2);
  std::vector<DriveSample> drives;
  if (at_amplitude_mhz > 0.0) drives.push_back({Channel::ATControl, at_amplitude_mhz, 0.0, 0.0});
  HamiltonianOptions opt;
  opt.magnon_freq_ghz = magnon_freq_ghz;
  const ComplexMatrix h = build_hamiltonian(p, layout, drives, 0.0, opt);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  const RealVector n = excitation_numbers(layout);

  // Coherence decay rates (1/ns) of |g> against each single-excitation basis state.
  double rate_e = 1e-6, rate_f = 1e-6, rate_m = 1e-6;
  if (p.dissipation) {
    const double t1 = p.t1_qubit_us * 1e3, tphi = p.t_phi_qubit_us * 1e3;
    rate_e = 0.5 / t1 + 1.0 / tphi;
    rate_f = 1.0 / t1 + 4.0 / tphi;
    rate_m = 0.5 / p.t1_magnon_ns;
  }
  // Basis order: (q, m) -> 2 q + m.
  const Eigen::Index ig1 = 1, ie0 = 2, if0 = 4;
  std::vector<Transition> out;
  for (Eigen::Index k = 0; k < h.rows(); ++k) {
    const ComplexVector v = es.eigenvectors().col(k);
    const double nk = (v.cwiseAbs2().transpose() * n)(0);
    if (std::abs(nk - 1.0) > 0.5) continue;
    Transition t;
    t.freq_ghz = p.magnon_idle_freq_ghz + es.eigenvalues()(k) / kTwoPi;
    t.qubit_weight = std::norm(v(ie0));
    t.f_weight = std::norm(v(if0));
    const double rate = std::norm(v(ie0)) * rate_e + std::norm(v(if0)) * rate_f + std::norm(v(ig1)) * rate_m;
    t.hwhm_ghz = rate / kTwoPi;
    out.push_back(t);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.freq_ghz < b.freq_ghz; });
  return out;
}

namespace {

ScanResult spectroscopy_map(const std::vector<double>& outer, const std::vector<double>& probe,
                            const std::function<std::vector<Transition>(double)>& lines, std::size_t workers) {
  if (outer.empty() || probe.empty()) throw Error(ErrorKind::Config, "spectroscopy grids must be non-empty");
  ScanResult r;
  r.quantity = "response";
  r.data.assign(outer.size() * probe.size(), 0.0);
  parallel_for(outer.size(), workers, [&](std::size_t i) {
    const auto ts = lines(outer[i]);
    for (std::size_t j = 0; j < probe.size(); ++j) {
      double v = 0.0;
      for (const auto& t : ts) v += t.qubit_weight * lorentzian(probe[j], t.freq_ghz, t.hwhm_ghz);
      r.data[i * probe.size() + j] = v;
    }
  });
  return r;
}

}  // namespace

ScanResult run_avoided_crossing(const PhysicalParams& p, const std::vector<double>& coil_grid_ma,
                                const std::vector<double>& probe_grid_ghz, std::size_t workers) {
  ScanResult r = spectroscopy_map(
      coil_grid_ma, probe_grid_ghz,
      [&](double coil) { return transitions(p, p.coil_map.magnon_freq_ghz(coil)); }, workers);
  r.axes = {{"coil", "ma", coil_grid_ma}, {"probe", "ghz", probe_grid_ghz}};
  auto& lo = r.series["lower_branch_ghz"];
  auto& hi = r.series["upper_branch_ghz"];
  for (double coil : coil_grid_ma) {
    // The two lines carrying the e/magnon hybrid; the bare |f> line is dark.
    std::vector<double> f;
    for (const auto& t : transitions(p, p.coil_map.magnon_freq_ghz(coil))) {
      if (t.f_weight < 0.5) f.push_back(t.freq_ghz);
    }
    lo.push_back(f.empty() ? 0.0 : f.front());
    hi.push_back(f.empty() ? 0.0 : f.back());
  }
  r.metadata = {{"experiment", "anticross"},
                {"resonant_coil_ma", p.coil_map.current_for(p.qubit_freq_ghz)},
                {"g_mq_mhz", effective_coupling(p)}};
  r.validate();
  return r;
}

std::vector<double> find_peaks(const std::vector<double>& x, const std::vector<double>& y, std::size_t max_peaks) {
  std::vector<std::pair<double, double>> peaks;  // (height, position)
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
    const double a = y[i - 1], b = y[i], c = y[i + 1];
    const double denom = a - 2.0 * b + c;
    double offset = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
    offset = std::clamp(offset, -0.5, 0.5);
    const double h = 0.5 * (x[i + 1] - x[i - 1]);
    peaks.emplace_back(b - 0.25 * (a - c) * offset, x[i] + offset * h);
  }
  std::sort(peaks.begin(), peaks.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
  std::vector<double> out;
  for (std::size_t k = 0; k < std::min(max_peaks, peaks.size()); ++k) out.push_back(peaks[k].second);
  return out;
}

double anticrossing_splitting_mhz(const ScanResult& map, double coil_ma) {
  if (map.axes.size() != 2) throw Error(ErrorKind::InvalidDimension, "anticrossing map must be two-dimensional");
  const auto& coils = map.axes[0].values;
  const auto& probe = map.axes[1].values;
  std::size_t best = 0;
  for (std::size_t i = 1; i < coils.size(); ++i) {
    if (std::abs(coils[i] - coil_ma) < std::abs(coils[best] - coil_ma)) best = i;
  }
  std::vector<double> col(probe.size());
  for (std::size_t j = 0; j < probe.size(); ++j) col[j] = map.at(best, j);
  const auto peaks = find_peaks(probe, col, 2);
  if (peaks.size() < 2) throw Error(ErrorKind::Resolution, "fewer than two peaks in the anticrossing column");
  return std::abs(peaks[0] - peaks[1]) / kMHz;
}

double weak_probe_response(const PhysicalParams& p, double magnon_freq_ghz, double probe_ghz, double probe_rabi_mhz) {
  if (!p.dissipation) throw Error(ErrorKind::Config, "weak probe needs dissipation for a steady state");
  const HilbertLayout layout = HilbertLayout::two_body(3);
  const DriveSample probe{Channel::QubitXY, probe_rabi_mhz, 0.0, (probe_ghz - p.qubit_freq_ghz) / kMHz};
  HamiltonianOptions opt;
  opt.magnon_freq_ghz = magnon_freq_ghz;
  opt.frame.offset_ghz = drive_carrier_ghz(p, probe);
  const ComplexMatrix h = build_hamiltonian(p, layout, {probe}, 0.0, opt);
  const auto d = static_cast<Eigen::Index>(layout.dimension());
  ComplexMatrix l = ComplexMatrix(hamiltonian_superoperator(h)) +
                    ComplexMatrix(dissipator_superoperator(collapse_set(p, layout), layout.dimension()));
  ComplexVector rhs = ComplexVector::Zero(d * d);
  l.row(0).setZero();
  for (Eigen::Index a = 0; a < d; ++a) l(0, a + a * d) = 1.0;
  rhs(0) = 1.0;
  const ComplexVector v = l.partialPivLu().solve(rhs);
  double pe = 0.0;
  for (Eigen::Index a = d / 3; a < d; ++a) pe += v(a + a * d).real();
  return pe;
}

ScanResult run_at_scan(const PhysicalParams& p, const std::vector<double>& amp_grid_mhz,
                       const std::vector<double>& probe_grid_ghz, std::size_t workers) {
  for (double a : amp_grid_mhz) {
    if (a < 0.0) throw Error(ErrorKind::Config, "AT amplitudes must be non-negative");
  }
  ScanResult r = spectroscopy_map(
      amp_grid_mhz, probe_grid_ghz,
      [&](double amp) { return transitions(p, p.magnon_idle_freq_ghz, amp); }, workers);
  r.axes = {{"at_amplitude", "mhz", amp_grid_mhz}, {"probe", "ghz", probe_grid_ghz}};
  auto& plus = r.series["omega_plus_ghz"];
  auto& minus = r.series["omega_minus_ghz"];
  auto& sep = r.series["separation_mhz"];
  const double delta = p.at_drive_detuning_mhz;
  for (double amp : amp_grid_mhz) {
    if (amp == 0.0 && delta == 0.0) {
      plus.push_back(p.qubit_freq_ghz);
      minus.push_back(p.qubit_freq_ghz);
      sep.push_back(0.0);
      continue;
    }
    const ATDoublet d = at_doublet(amp, delta, p);
    plus.push_back(d.omega_plus_ghz);
    minus.push_back(d.omega_minus_ghz);
    sep.push_back((d.omega_plus_ghz - d.omega_minus_ghz) / kMHz);
  }
  r.metadata = {{"experiment", "at-scan"},
                {"at_drive_detuning_mhz", delta},
                {"swap_point_amplitude_mhz",
                 required_drive_amplitude((p.magnon_idle_freq_ghz - p.qubit_freq_ghz) / kMHz, delta)}};
  r.validate();
  return r;
}

// ---------------------------------------------------------------------------
// Time domain

ScanResult run_chevron(const PhysicalParams& p, const ProtocolCalibration& calib, const std::vector<double>& tau_grid_ns,
                       const std::vector<double>& detuning_grid_mhz, const SimulationOptions& options) {
  if (tau_grid_ns.empty() || detuning_grid_mhz.empty()) throw Error(ErrorKind::Config, "chevron grids must be non-empty");
  for (double t : tau_grid_ns) {
    if (t < 0.0) throw Error(ErrorKind::Config, "chevron tau must be non-negative");
  }
  if (options.shots) options.shots->validate();
  const double tau_max = *std::max_element(tau_grid_ns.begin(), tau_grid_ns.end());
  const HilbertLayout layout = HilbertLayout::two_body(calib.settings.swap_magnon_dim);
  const std::size_t nt = tau_grid_ns.size();
  ScanResult r;
  r.quantity = "p_excited";
  r.is_probability = true;
  r.axes = {{"detuning", "mhz", detuning_grid_mhz}, {"tau", "ns", tau_grid_ns}};
  r.data.assign(detuning_grid_mhz.size() * nt, 0.0);
  if (options.shots) r.errors.assign(r.data.size(), 0.0);

  parallel_for(detuning_grid_mhz.size(), options.workers, [&](std::size_t i) {
    const PulseSchedule s = seq_swap(p, tau_max, detuning_grid_mhz[i], calib);
    std::vector<double> times(nt);
    for (std::size_t k = 0; k < nt; ++k) times[k] = std::min(*s.window_start_ns + tau_grid_ns[k], s.total_duration_ns);
    const auto states = evolve(p, layout, s, DensityMatrix::ground(layout), times, options.evolve);
    for (std::size_t k = 0; k < nt; ++k) {
      const double prob = readout_qubit_excited(states[k]);
      const std::size_t idx = i * nt + k;
      if (options.shots) {
        const auto e = sample_readout(prob, *options.shots, idx);
        r.data[idx] = e.estimate;
        r.errors[idx] = e.standard_error;
      } else {
        r.data[idx] = prob;
      }
    }
  });
  r.metadata = {{"experiment", "chevron"},
                {"swap_amplitude_mhz", calib.swap_amplitude_mhz},
                {"work_amplitude_mhz", calib.work_amplitude_mhz},
                {"magnon_dim", layout.magnon_dim}};
  if (options.shots) r.metadata["shots"] = options.shots->shots;
  r.validate();
  return r;
}

double first_minimum_time(const std::vector<double>& tau, const std::vector<double>& y) {
  if (tau.size() != y.size() || y.size() < 3) throw Error(ErrorKind::Config, "first_minimum_time needs >= 3 samples");
  // The dip starts once the trace falls half its range below the running
  // maximum; it ends when the trace climbs a quarter of the range above the
  // lowest sample seen since. Shot noise on either slope cannot trigger it.
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double range = *hi - *lo;
  double running_max = y[0];
  std::size_t start = 0;
  for (std::size_t i = 0; i < y.size() && !start; ++i) {
    running_max = std::max(running_max, y[i]);
    if (running_max - y[i] >= 0.5 * range && range > 0.0) start = i;
  }
  if (start) {
    std::size_t best = start;
    std::size_t i = start;
    for (; i < y.size() && y[i] <= y[best] + 0.25 * range; ++i)
      if (y[i] < y[best]) best = i;
    if (best > 0 && best + 1 < y.size() && i < y.size()) {
      const double a = y[best - 1], b = y[best], c = y[best + 1];
      const double denom = a - 2.0 * b + c;
      const double offset = denom != 0.0 ? std::clamp(0.5 * (a - c) / denom, -0.5, 0.5) : 0.0;
      return tau[best] + offset * 0.5 * (tau[best + 1] - tau[best - 1]);
    }
  }
  throw Error(ErrorKind::Resolution, "no minimum inside the tau grid");
}

ScanResult run_swap(const PhysicalParams& p, const ProtocolCalibration& calib, const std::vector<double>& tau_grid_ns,
                    const SimulationOptions& options) {
  ScanResult c = run_chevron(p, calib, tau_grid_ns, {0.0}, options);
  ScanResult r;
  r.quantity = c.quantity;
  r.is_probability = true;
  r.axes = {c.axes[1]};
  r.data = c.data;
  r.errors = c.errors;
  r.metadata = c.metadata;
  r.metadata["experiment"] = "swap";
  r.metadata["first_minimum_ns"] = first_minimum_time(tau_grid_ns, r.data);
  r.metadata["swap_duration_ns"] = calib.swap_duration_ns;
  r.validate();
  return r;
}

namespace {

// Residual of a slow quadratic background plus an exponentially damped
// sinusoid at fixed frequency and decay rate; the amplitudes are linear.
double damped_sinusoid_residual(const std::vector<double>& t, const std::vector<double>& y, double f_ghz,
                                double gamma) {
  const auto n = static_cast<Eigen::Index>(t.size());
  RealMatrix a(n, 5);
  RealVector b(n);
  const double t0 = t.front(), span = t.back() - t.front();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double tk = t[static_cast<std::size_t>(k)];
    const double u = (tk - t0) / span;
    const double ph = kTwoPi * f_ghz * tk, env = std::exp(-gamma * (tk - t0));
    a.row(k) << 1.0, u, u * u, env * std::cos(ph), env * std::sin(ph);
    b(k) = y[static_cast<std::size_t>(k)];
  }
  const RealVector x = a.colPivHouseholderQr().solve(b);
  return (a * x - b).squaredNorm();
}

template <class F>
double golden_min(F&& f, double a, double b, double tol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (std::abs(b - a) > tol) {
    if (fc < fd) {
      b = d, d = c, fd = fc, c = b - r * (b - a), fc = f(c);
    } else {
      a = c, c = d, fc = fd, d = a + r * (b - a), fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

void check_uniform(const std::vector<double>& t) {
  if (t.size() < 8) throw Error(ErrorKind::Resolution, "trace too short for spectral analysis");
  const double dt = t[1] - t[0];
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (std::abs(t[k] - t[k - 1] - dt) > 1e-9 * std::max(1.0, std::abs(dt))) {
      throw Error(ErrorKind::Config, "spectral analysis needs a uniform time grid");
    }
  }
}

// Hann-windowed DTFT magnitude of the mean-subtracted trace at f (GHz).
double windowed_magnitude(const std::vector<double>& t, const std::vector<double>& y, double mean, double f_ghz) {
  const std::size_t n = t.size();
  Complex acc = 0.0;
  double wsum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(k) / static_cast<double>(n - 1));
    acc += w * (y[k] - mean) * std::exp(-kI * (kTwoPi * f_ghz * t[k]));
    wsum += w;
  }
  return std::abs(acc) / wsum;
}

}  // namespace

OscillationFit dominant_frequency(const std::vector<double>& t_ns, const std::vector<double>& y) {
  if (t_ns.size() != y.size()) throw Error(ErrorKind::Config, "time and value lengths differ");
  check_uniform(t_ns);
  const double dt = t_ns[1] - t_ns[0];
  const double span = t_ns.back() - t_ns.front();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());

  const double nyquist = 0.5 / dt;
  const double df = 0.05 / span;
  double best_f = 0.0, best_m = -1.0;
  // Skip the lowest bins, which the window leaves dominated by slow drifts.
  for (double f = 1.0 / span; f <= nyquist; f += df) {
    const double m = windowed_magnitude(t_ns, y, mean, f);
    if (m > best_m) {
      best_m = m;
      best_f = f;
    }
  }
  if (best_f * span < 2.0) {
    std::ostringstream msg;
    msg << "tau span " << span << " ns holds fewer than two periods of the " << best_f / kMHz
        << " MHz peak; extend the tau grid";
    throw Error(ErrorKind::Resolution, msg.str());
  }
  const double lo = std::max(0.5 / span, best_f - 0.5 / span);
  const double hi = std::min(nyquist, best_f + 0.5 / span);
  // Variable projection: the decay rate is profiled out for every trial
  // frequency.
  const double gamma_max = 5.0 / span;
  auto best_gamma = [&](double x) {
    return golden_min([&](double g) { return damped_sinusoid_residual(t_ns, y, x, g); }, 0.0, gamma_max, 1e-7);
  };
  auto profile = [&](double x) { return damped_sinusoid_residual(t_ns, y, x, best_gamma(x)); };
  const double f = golden_min(profile, lo, hi, 1e-9);
  OscillationFit out;
  out.frequency_mhz = f / kMHz;
  out.rms_residual = std::sqrt(profile(f) / static_cast<double>(y.size()));
  return out;
}

DispersionFit fit_dispersion(const std::vector<double>& detuning_mhz, const std::vector<double>& freq_mhz) {
  if (detuning_mhz.size() != freq_mhz.size() || detuning_mhz.empty()) {
    throw Error(ErrorKind::Config, "dispersion fit needs matching, non-empty inputs");
  }
  auto cost = [&](double g) {
    double s = 0.0;
    for (std::size_t k = 0; k < freq_mhz.size(); ++k) {
      const double r = std::sqrt(4.0 * g * g + detuning_mhz[k] * detuning_mhz[k]) - freq_mhz[k];
      s += r * r;
    }
    return s;
  };
  const double fmax = *std::max_element(freq_mhz.begin(), freq_mhz.end());
  // Coarse scan, then golden refinement around the best sample.
  double best = 0.0, best_c = cost(0.0);
  const int n = 2000;
  for (int k = 1; k <= n; ++k) {
    const double g = 0.5 * fmax * k / n;
    const double c = cost(g);
    if (c < best_c) {
      best_c = c;
      best = g;
    }
  }
  const double step = 0.5 * fmax / n;
  const double g = golden_min(cost, std::max(0.0, best - step), best + step, 1e-12);
  return {g, std::sqrt(cost(g) / static_cast<double>(freq_mhz.size()))};
}

ScanResult fourier_analysis(const ScanResult& chevron, std::size_t n_freq) {
  if (chevron.axes.size() != 2 || chevron.axes[1].name != "tau") {
    throw Error(ErrorKind::Config, "fourier_analysis expects a (detuning, tau) chevron");
  }
  const auto& det = chevron.axes[0].values;
  const auto& tau = chevron.axes[1].values;
  check_uniform(tau);
  const double f_max = std::min(0.5 / (tau[1] - tau[0]), 0.06);
  const std::vector<double> freqs = linspace(0.0, f_max, std::max<std::size_t>(n_freq, 2));

  ScanResult r;
  r.quantity = "magnitude";
  std::vector<double> fmhz(freqs.size());
  for (std::size_t k = 0; k < freqs.size(); ++k) fmhz[k] = freqs[k] / kMHz;
  r.axes = {{"detuning", "mhz", det}, {"frequency", "mhz", fmhz}};
  r.data.resize(det.size() * freqs.size());
  auto& peaks = r.series["peak_mhz"];
  for (std::size_t i = 0; i < det.size(); ++i) {
    std::vector<double> row(tau.size());
    for (std::size_t k = 0; k < tau.size(); ++k) row[k] = chevron.at(i, k);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(row.size());
    for (std::size_t k = 0; k < freqs.size(); ++k) {
      r.data[i * freqs.size() + k] = windowed_magnitude(tau, row, mean, freqs[k]);
    }
    peaks.push_back(dominant_frequency(tau, row).frequency_mhz);
  }
  const DispersionFit fit = fit_dispersion(det, peaks);
  r.metadata = {{"experiment", "fourier"}, {"g_fit_mhz", fit.g_mhz}, {"fit_rms_mhz", fit.rms_residual_mhz}};
  r.validate();
  return r;
}

// ---------------------------------------------------------------------------
// Preparation

DensityMatrix simulate_preparation(const PhysicalParams& p, const PrepTarget& target,
                                   const ProtocolCalibration& calib, std::size_t magnon_dim,
                                   const EvolveOptions& evolve_opt) {
  const HilbertLayout layout = HilbertLayout::two_body(magnon_dim);
  const PulseSchedule s = seq_state_prep(p, target, calib);
  EvolveOptions o = evolve_opt;
  o.start_time_ns = 0.0;
  return evolve(p, layout, s, DensityMatrix::ground(layout), {s.total_duration_ns}, o).front();
}

DensityMatrix prepare_magnon_state(const PhysicalParams& p, const PrepTarget& target,
                                   const ProtocolCalibration& calib, std::size_t magnon_dim,
                                   const EvolveOptions& evolve_opt) {
  return partial_trace(simulate_preparation(p, target, calib, magnon_dim, evolve_opt), {Factor::Magnon});
}

ProtocolCalibration calibrate_protocol(const PhysicalParams& p, const ProtocolSettings& settings,
                                       const EvolveOptions& evolve_opt) {
  ProtocolCalibration c = base_calibration(p, settings);
  const std::size_t dim = settings.swap_magnon_dim;

  // Unless set explicitly, the swap length is the first P+ minimum of the
  // simulated damped swap, the way it is calibrated on hardware. Damping moves
  // it past 1/(4g) and leaves the least qubit-magnon coherence behind.
  if (!settings.swap_duration_ns) {
    SimulationOptions so;
    so.evolve = evolve_opt;
    so.workers = 1;
    const ScanResult sw = run_swap(p, c, arange(0.0, 2.5 * c.swap_duration_ns, 0.25), so);
    c.swap_duration_ns = sw.metadata["first_minimum_ns"].get<double>();
  }

  const DensityMatrix one = prepare_magnon_state(p, PrepTarget::single_magnon(), c, dim, evolve_opt);
  c.transfer_efficiency = one.rho(1, 1).real();
  if (!(c.transfer_efficiency > 0.05)) {
    throw Error(ErrorKind::Calibration, "single-magnon transfer efficiency is implausibly low");
  }

  c.superposition_phase_offset_rad = 0.0;
  const DensityMatrix sup = prepare_magnon_state(p, PrepTarget::superposition(1.0), c, dim, evolve_opt);
  c.superposition_phase_offset_rad = std::arg(sup.rho(1, 0));

  // Displace the vacuum by a small real alpha and correct gain and phase.
  const double probe_alpha = 0.5;
  const HilbertLayout layout = HilbertLayout::two_body(dim);
  c.displacement_phase_offset_rad = 0.0;
  PulseSchedule s;
  s.segments.push_back({Channel::MagnonDrive, 0.0, settings.displacement_duration_ns, Envelope::rectangular(),
                        probe_alpha * c.displacement_mhz_per_alpha, -0.5 * kPi, 0.0});
  s.total_duration_ns = s.readout_at_ns = settings.displacement_duration_ns;
  EvolveOptions o = evolve_opt;
  o.start_time_ns = 0.0;
  const DensityMatrix out = evolve(p, layout, s, DensityMatrix::ground(layout), {s.total_duration_ns}, o).front();
  const Complex b = (out.rho * embed(layout, Factor::Magnon, fock_annihilation(dim))).trace();
  if (!(std::abs(b) > 1e-3)) throw Error(ErrorKind::Calibration, "displacement drive produced no coherent amplitude");
  c.displacement_mhz_per_alpha *= probe_alpha / std::abs(b);
  c.displacement_phase_offset_rad = std::arg(b);
  return c;
}

}  // namespace magsim
