#include "magsim/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "magsim/errors.hpp"

namespace magsim {

namespace {

constexpr double kMHz = 1e-3;
constexpr double kTimeSlack = 1e-9;

}  // namespace

double PulseSegment::amplitude_at(double t_ns) const {
  switch (envelope.kind) {
    case EnvelopeKind::Rectangular:
      return amplitude_mhz;
    case EnvelopeKind::Gaussian: {
      const double x = (t_ns - start_ns - 0.5 * duration_ns) / envelope.sigma_ns;
      return amplitude_mhz * std::exp(-0.5 * x * x);
    }
    case EnvelopeKind::Linear: {
      const double u = std::clamp((t_ns - start_ns) / duration_ns, 0.0, 1.0);
      return envelope.start_amplitude_mhz + (amplitude_mhz - envelope.start_amplitude_mhz) * u;
    }
  }
  return 0.0;
}

void PulseSchedule::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::Config, "schedule: " + what); };
  for (const auto& s : segments) {
    if (!(s.duration_ns > 0.0)) fail("segment duration must be positive");
    if (s.start_ns < 0.0) fail("segment start must be non-negative");
    if (s.amplitude_mhz < 0.0) fail("segment amplitude must be non-negative");
    if (s.envelope.kind == EnvelopeKind::Gaussian && !(s.envelope.sigma_ns > 0.0)) {
      fail("gaussian sigma must be positive");
    }
    if (s.envelope.kind == EnvelopeKind::Linear && s.envelope.start_amplitude_mhz < 0.0) {
      fail("ramp start amplitude must be non-negative");
    }
  }
  for (Channel c : {Channel::QubitXY, Channel::ATControl, Channel::MagnonDrive}) {
    std::vector<const PulseSegment*> on;
    for (const auto& s : segments) {
      if (s.channel == c) on.push_back(&s);
    }
    std::sort(on.begin(), on.end(), [](auto a, auto b) { return a->start_ns < b->start_ns; });
    for (std::size_t k = 1; k < on.size(); ++k) {
      if (on[k]->start_ns < on[k - 1]->end_ns() - kTimeSlack) {
        fail("segments overlap on channel " + to_string(c));
      }
    }
  }
  if (readout_at_ns < last_segment_end() - kTimeSlack) fail("readout precedes the last segment");
  if (total_duration_ns < readout_at_ns - kTimeSlack) fail("total duration ends before readout");
  if (window_start_ns && (*window_start_ns < 0.0 || *window_start_ns > readout_at_ns + kTimeSlack)) {
    fail("interaction window must start before readout");
  }
}

std::vector<DriveSample> PulseSchedule::drives_at(double t_ns) const {
  std::vector<DriveSample> out;
  for (const auto& s : segments) {
    if (!s.active_at(t_ns)) continue;
    out.push_back({s.channel, s.amplitude_at(t_ns), s.phase_rad, s.carrier_detuning_mhz});
  }
  return out;
}

std::vector<double> PulseSchedule::edges() const {
  std::vector<double> e;
  for (const auto& s : segments) {
    e.push_back(s.start_ns);
    e.push_back(s.end_ns());
  }
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end(), [](double a, double b) { return std::abs(a - b) <= kTimeSlack; }),
          e.end());
  return e;
}

double PulseSchedule::last_segment_end() const {
  double t = 0.0;
  for (const auto& s : segments) t = std::max(t, s.end_ns());
  return t;
}

std::string to_string(Channel c) {
  switch (c) {
    case Channel::QubitXY: return "qubit_xy";
    case Channel::ATControl: return "at_control";
    case Channel::MagnonDrive: return "magnon_drive";
  }
  return "?";
}

Channel channel_from_string(const std::string& s) {
  if (s == "qubit_xy") return Channel::QubitXY;
  if (s == "at_control") return Channel::ATControl;
  if (s == "magnon_drive") return Channel::MagnonDrive;
  throw Error(ErrorKind::Config, "unknown channel '" + s + "'");
}

namespace {

std::string envelope_name(EnvelopeKind k) {
  switch (k) {
    case EnvelopeKind::Rectangular: return "rectangular";
    case EnvelopeKind::Gaussian: return "gaussian";
    case EnvelopeKind::Linear: return "linear";
  }
  return "?";
}

EnvelopeKind envelope_from_string(const std::string& s) {
  if (s == "rectangular") return EnvelopeKind::Rectangular;
  if (s == "gaussian") return EnvelopeKind::Gaussian;
  if (s == "linear") return EnvelopeKind::Linear;
  throw Error(ErrorKind::Config, "unknown envelope '" + s + "'");
}

}  // namespace

nlohmann::json to_json(const PulseSchedule& s) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& seg : s.segments) {
    nlohmann::json env = {{"kind", envelope_name(seg.envelope.kind)}};
    if (seg.envelope.kind == EnvelopeKind::Gaussian) env["sigma_ns"] = seg.envelope.sigma_ns;
    if (seg.envelope.kind == EnvelopeKind::Linear) {
      env["start_amplitude_mhz"] = seg.envelope.start_amplitude_mhz;
    }
    segs.push_back({{"channel", to_string(seg.channel)},
                    {"start_ns", seg.start_ns},
                    {"duration_ns", seg.duration_ns},
                    {"envelope", env},
                    {"amplitude_mhz", seg.amplitude_mhz},
                    {"phase_rad", seg.phase_rad},
                    {"carrier_detuning_mhz", seg.carrier_detuning_mhz}});
  }
  nlohmann::json j = {{"segments", segs},
                      {"total_duration_ns", s.total_duration_ns},
                      {"readout_at_ns", s.readout_at_ns}};
  if (s.window_start_ns) j["window_start_ns"] = *s.window_start_ns;
  return j;
}

PulseSchedule schedule_from_json(const nlohmann::json& j) {
  try {
    PulseSchedule s;
    for (const auto& seg : j.at("segments")) {
      PulseSegment p;
      p.channel = channel_from_string(seg.at("channel").get<std::string>());
      p.start_ns = seg.at("start_ns").get<double>();
      p.duration_ns = seg.at("duration_ns").get<double>();
      const auto& env = seg.at("envelope");
      p.envelope.kind = envelope_from_string(env.at("kind").get<std::string>());
      p.envelope.sigma_ns = env.value("sigma_ns", 0.0);
      p.envelope.start_amplitude_mhz = env.value("start_amplitude_mhz", 0.0);
      p.amplitude_mhz = seg.at("amplitude_mhz").get<double>();
      p.phase_rad = seg.value("phase_rad", 0.0);
      p.carrier_detuning_mhz = seg.value("carrier_detuning_mhz", 0.0);
      s.segments.push_back(p);
    }
    s.total_duration_ns = j.at("total_duration_ns").get<double>();
    s.readout_at_ns = j.at("readout_at_ns").get<double>();
    if (j.contains("window_start_ns")) s.window_start_ns = j.at("window_start_ns").get<double>();
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("schedule json: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Isolated-qutrit pulse simulation

namespace {

// Qutrit in the frame of the qubit carrier (|e>) and of the AT drive (|f>).
// Returns |<+|psi(T)>|^2 starting from |g>.
double simulate_qutrit_pulse(const PhysicalParams& p, double at_amp_mhz, const PiPulse& pulse,
                             double scale, int repetitions) {
  const double delta = kTwoPi * pulse.carrier_detuning_mhz * kMHz;
  Eigen::Matrix3cd h0 = Eigen::Matrix3cd::Zero();
  h0(1, 1) = -delta;
  h0(2, 2) = -delta + kTwoPi * p.at_drive_detuning_mhz * kMHz;
  h0(1, 2) = h0(2, 1) = 0.5 * kTwoPi * at_amp_mhz * kMHz;
  Eigen::Matrix3cd drive = Eigen::Matrix3cd::Zero();
  drive(0, 1) = drive(1, 0) = 0.5 * kTwoPi * kMHz;

  PulseSegment seg{Channel::QubitXY, 0.0, pulse.duration_ns, pulse.envelope, pulse.amplitude_mhz * scale};
  Eigen::Vector3cd psi(1.0, 0.0, 0.0);
  if (pulse.envelope.is_constant()) {
    const ComplexMatrix u = matrix_exp(ComplexMatrix(-kI * pulse.duration_ns * (h0 + seg.amplitude_mhz * drive)));
    for (int r = 0; r < repetitions; ++r) psi = u * psi;
  } else {
    const int steps = std::max(200, static_cast<int>(std::ceil(pulse.duration_ns / 0.01)));
    const double dt = pulse.duration_ns / steps;
    auto rhs = [&](double t, const Eigen::Vector3cd& v) -> Eigen::Vector3cd {
      return -kI * ((h0 + seg.amplitude_at(t) * drive) * v);
    };
    for (int r = 0; r < repetitions; ++r) {
      for (int k = 0; k < steps; ++k) {
        const double t = k * dt;
        const Eigen::Vector3cd k1 = rhs(t, psi);
        const Eigen::Vector3cd k2 = rhs(t + 0.5 * dt, psi + 0.5 * dt * k1);
        const Eigen::Vector3cd k3 = rhs(t + 0.5 * dt, psi + 0.5 * dt * k2);
        const Eigen::Vector3cd k4 = rhs(t + dt, psi + dt * k3);
        psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    }
  }
  const Eigen::Vector3cd target = qubit_excited_state(p, at_amp_mhz);
  return std::norm(target.dot(psi));
}

// Minimizes f on [a, b] by golden-section search.
template <class F>
double golden_min(F&& f, double a, double b, double tol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (std::abs(b - a) > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double envelope_area_ns(const Envelope& env, double duration_ns) {
  PulseSegment s{Channel::QubitXY, 0.0, duration_ns, env, 1.0};
  const int n = 2000;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += s.amplitude_at((k + 0.5) * duration_ns / n);
  return sum * duration_ns / n;
}

}  // namespace

double qutrit_pulse_excitation(const PhysicalParams& p, double at_amplitude_mhz, const PiPulse& pulse,
                               double amplitude_scale, int repetitions) {
  return simulate_qutrit_pulse(p, at_amplitude_mhz, pulse, amplitude_scale, repetitions);
}

PiPulse calibrate_pi_pulse_at(const PhysicalParams& p, double at_amplitude_mhz, const PiPulseSettings& settings) {
  if (!(settings.duration_ns > 0.0)) throw Error(ErrorKind::Config, "pi pulse duration must be positive");
  PiPulse pulse;
  pulse.duration_ns = settings.duration_ns;
  pulse.envelope = settings.envelope;

  double overlap = 1.0;
  if (at_amplitude_mhz > 0.0) {
    const ATDoublet d = at_doublet(at_amplitude_mhz, p.at_drive_detuning_mhz, p);
    overlap = std::abs(d.plus_coeffs(0));
    pulse.carrier_detuning_mhz = (d.omega_plus_ghz - p.qubit_freq_ghz) / kMHz;
  }
  if (overlap < 1e-6) throw Error(ErrorKind::Calibration, "pi pulse: |+> has no |e> component to drive");
  const double area = envelope_area_ns(settings.envelope, settings.duration_ns);
  double amp = 0.5 / (overlap * area * kMHz);

  auto infidelity = [&](double a, double carrier) {
    PiPulse trial = pulse;
    trial.amplitude_mhz = a;
    trial.carrier_detuning_mhz = carrier;
    return 1.0 - simulate_qutrit_pulse(p, at_amplitude_mhz, trial, 1.0, 1);
  };

  double carrier = pulse.carrier_detuning_mhz;
  double amp_window = 0.3 * amp;
  double carrier_window = 4.0;
  double best = infidelity(amp, carrier);
  for (int round = 0; round < 30; ++round) {
    const double previous = best;
    amp = golden_min([&](double a) { return infidelity(a, carrier); }, amp - amp_window, amp + amp_window,
                     1e-9 * amp);
    if (settings.calibrate_carrier) {
      carrier = golden_min([&](double c) { return infidelity(amp, c); }, carrier - carrier_window,
                           carrier + carrier_window, 1e-8);
    }
    best = infidelity(amp, carrier);
    if (!settings.calibrate_carrier || std::abs(previous - best) < 1e-12) break;
    amp_window = std::max(0.02 * amp, 0.5 * amp_window);
    carrier_window = std::max(0.25, 0.5 * carrier_window);
  }
  pulse.amplitude_mhz = amp;
  pulse.carrier_detuning_mhz = carrier;
  pulse.infidelity = best;
  if (!(best <= settings.max_infidelity)) {
    std::ostringstream msg;
    msg << "pi pulse search stalled at infidelity " << best << " (limit " << settings.max_infidelity
        << "); try a longer pulse";
    throw Error(ErrorKind::Calibration, msg.str());
  }
  return pulse;
}

ProtocolCalibration base_calibration(const PhysicalParams& p, const ProtocolSettings& settings) {
  ProtocolCalibration c;
  c.settings = settings;
  const double delta_d = p.at_drive_detuning_mhz;
  c.work_amplitude_mhz = required_drive_amplitude((settings.work_point_ghz - p.qubit_freq_ghz) / kMHz, delta_d);
  c.swap_amplitude_mhz =
      required_drive_amplitude((p.magnon_idle_freq_ghz - p.qubit_freq_ghz) / kMHz, delta_d);
  c.pi = calibrate_pi_pulse_at(p, c.work_amplitude_mhz, settings.pi);

  double g = effective_coupling(p);
  if (p.exchange_model == ExchangeModel::Bare) {
    g *= std::cos(at_doublet(c.swap_amplitude_mhz, delta_d, p).theta);
  }
  if (settings.swap_duration_ns) {
    c.swap_duration_ns = *settings.swap_duration_ns;
  } else {
    if (!(g > 0.0)) throw Error(ErrorKind::Calibration, "swap duration undefined for zero coupling");
    c.swap_duration_ns = 1.0 / (4.0 * g * kMHz);
  }

  const double td = settings.displacement_duration_ns;
  if (!(td > 0.0)) throw Error(ErrorKind::Config, "displacement duration must be positive");
  double gain = 1.0;
  if (p.dissipation) {
    const double x = 0.5 * td / p.t1_magnon_ns;
    gain = x / (1.0 - std::exp(-x));
  }
  c.displacement_mhz_per_alpha = gain / (kPi * td * kMHz);
  return c;
}

PiPulse calibrate_pi_pulse(const PhysicalParams& p, const ProtocolSettings& settings) {
  const double work = required_drive_amplitude((settings.work_point_ghz - p.qubit_freq_ghz) / kMHz,
                                               p.at_drive_detuning_mhz);
  return calibrate_pi_pulse_at(p, work, settings.pi);
}

// ---------------------------------------------------------------------------
// Targets and builders

ComplexVector PrepTarget::ideal_state(std::size_t dim) const {
  ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(dim));
  switch (kind) {
    case Kind::Vacuum: v(0) = 1.0; break;
    case Kind::SingleMagnon: v(1) = 1.0; break;
    case Kind::Superposition:
      v(0) = 1.0;
      v(1) = c;
      v /= v.norm();
      break;
  }
  return v;
}

std::string PrepTarget::name() const {
  switch (kind) {
    case Kind::Vacuum: return "vacuum";
    case Kind::SingleMagnon: return "single_magnon";
    case Kind::Superposition: {
      std::ostringstream s;
      s << "superposition(" << c.real() << (c.imag() < 0 ? "" : "+") << c.imag() << "i)";
      return s.str();
    }
  }
  return "?";
}

PrepTarget prep_target_from_string(const std::string& s) {
  if (s == "vacuum") return PrepTarget::vacuum();
  if (s == "single_magnon" || s == "one") return PrepTarget::single_magnon();
  if (s == "superposition") return PrepTarget::superposition(1.0);
  const std::string prefix = "superposition:";
  if (s.rfind(prefix, 0) == 0) {
    std::string rest = s.substr(prefix.size());
    std::replace(rest.begin(), rest.end(), ',', ' ');
    std::istringstream in(rest);
    double re = 0.0, im = 0.0;
    if (in >> re) {
      in >> im;
      if (std::isfinite(re) && std::isfinite(im)) return PrepTarget::superposition({re, im});
    }
  }
  throw Error(ErrorKind::Config,
              "unknown prep target '" + s + "' (vacuum, single_magnon, superposition[:re,im])");
}

double prep_rotation_angle(const PrepTarget& target, const ProtocolCalibration& calib) {
  switch (target.kind) {
    case PrepTarget::Kind::Vacuum: return 0.0;
    case PrepTarget::Kind::SingleMagnon: return kPi;
    case PrepTarget::Kind::Superposition: break;
  }
  const double ideal = 2.0 * std::atan(std::abs(target.c));
  if (calib.settings.overrotation_factor) return std::min(kPi, ideal * *calib.settings.overrotation_factor);
  if (!calib.settings.loss_compensation || !(calib.transfer_efficiency > 0.0)) return ideal;
  const double p1 = std::norm(target.c) / (1.0 + std::norm(target.c));
  const double s = std::min(1.0, p1 / calib.transfer_efficiency);
  return 2.0 * std::asin(std::sqrt(s));
}

namespace {

// Pulse amplitude scale giving excitation sin^2(angle/2) on the isolated
// qutrit; the full pi-pulse amplitude maps to angle pi.
double rotation_scale(const PhysicalParams& p, const ProtocolCalibration& calib, double angle) {
  if (angle >= kPi) return 1.0;
  if (angle <= 0.0) return 0.0;
  const double want = std::pow(std::sin(0.5 * angle), 2);
  const double full = qutrit_pulse_excitation(p, calib.work_amplitude_mhz, calib.pi);
  double lo = 0.0, hi = 1.0;
  if (want >= full) return 1.0;
  for (int k = 0; k < 50; ++k) {
    const double mid = 0.5 * (lo + hi);
    (qutrit_pulse_excitation(p, calib.work_amplitude_mhz, calib.pi, mid) < want ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Appends the AT step to the swap point (with the optional ramp) and returns
// the time the full-amplitude window starts.
double append_swap_window(PulseSchedule& s, double t, double tau_ns, double swap_amp, double from_amp,
                          const ProtocolCalibration& calib) {
  const double ramp = calib.settings.at_ramp_ns;
  if (ramp > 0.0 && tau_ns > 0.0) {
    s.segments.push_back({Channel::ATControl, t, ramp, Envelope::linear_from(from_amp), swap_amp});
    t += ramp;
  }
  if (tau_ns > 0.0) s.segments.push_back({Channel::ATControl, t, tau_ns, Envelope::rectangular(), swap_amp});
  return t;
}

// AT at the work point while the qubit pulse plays; returns the pulse end.
double append_rotation(PulseSchedule& s, double t, double scale, double phase, const ProtocolCalibration& calib) {
  const double d = calib.pi.duration_ns;
  s.segments.push_back({Channel::ATControl, t, d, Envelope::rectangular(), calib.work_amplitude_mhz});
  if (scale > 0.0) {
    s.segments.push_back({Channel::QubitXY, t, d, calib.pi.envelope, calib.pi.amplitude_mhz * scale, phase,
                          calib.pi.carrier_detuning_mhz});
  }
  return t + d;
}

}  // namespace

PulseSchedule seq_swap(const PhysicalParams& p, double tau_ns, double magnon_detuning_mhz,
                       const ProtocolCalibration& calib) {
  if (tau_ns < 0.0) throw Error(ErrorKind::Config, "seq_swap: tau must be non-negative");
  // The qubit line is parked magnon_detuning above the magnon.
  const double shift = (p.magnon_idle_freq_ghz - p.qubit_freq_ghz) / kMHz + magnon_detuning_mhz;
  const double swap_amp = required_drive_amplitude(shift, p.at_drive_detuning_mhz);
  PulseSchedule s;
  double t = append_rotation(s, 0.0, 1.0, 0.0, calib);
  const double window = append_swap_window(s, t, tau_ns, swap_amp, calib.work_amplitude_mhz, calib);
  t = tau_ns > 0.0 ? window + tau_ns : t;
  s.window_start_ns = tau_ns > 0.0 ? window : t;
  s.readout_at_ns = t;
  s.total_duration_ns = t;
  s.validate();
  return s;
}

PulseSchedule seq_state_prep(const PhysicalParams& p, const PrepTarget& target, const ProtocolCalibration& calib) {
  if (!std::isfinite(std::abs(target.c))) throw Error(ErrorKind::Config, "prep target amplitude must be finite");
  const double angle = prep_rotation_angle(target, calib);
  const double scale = target.kind == PrepTarget::Kind::SingleMagnon ? 1.0 : rotation_scale(p, calib, angle);
  double phase = 0.0;
  if (target.kind == PrepTarget::Kind::Superposition) {
    phase = calib.superposition_phase_offset_rad - std::arg(target.c);
  }
  PulseSchedule s;
  double t = append_rotation(s, 0.0, scale, phase, calib);
  t = append_swap_window(s, t, calib.swap_duration_ns, calib.swap_amplitude_mhz, calib.work_amplitude_mhz, calib) +
      calib.swap_duration_ns;
  s.readout_at_ns = t;
  s.total_duration_ns = t;
  s.validate();
  return s;
}

PulseSchedule seq_wigner_point(const PulseSchedule& prep, Complex alpha, double tau_ns,
                               const ProtocolCalibration& calib) {
  if (tau_ns < 0.0) throw Error(ErrorKind::Config, "seq_wigner_point: tau must be non-negative");
  if (!displacement_fits(alpha, calib.settings.tomography_magnon_dim)) {
    std::ostringstream msg;
    msg << "displacement |alpha|=" << std::abs(alpha) << " is large for Fock truncation "
        << calib.settings.tomography_magnon_dim;
    warn(msg.str());
  }
  PulseSchedule s;
  s.segments = prep.segments;
  double t = prep.total_duration_ns;
  const double td = calib.settings.displacement_duration_ns;
  const double phase = -0.5 * kPi - std::arg(alpha) + calib.displacement_phase_offset_rad;
  s.segments.push_back({Channel::MagnonDrive, t, td, Envelope::rectangular(),
                        std::abs(alpha) * calib.displacement_mhz_per_alpha, std::abs(alpha) > 0.0 ? phase : 0.0,
                        0.0});
  t += td;
  const double window = append_swap_window(s, t, tau_ns, calib.swap_amplitude_mhz, 0.0, calib);
  t = tau_ns > 0.0 ? window + tau_ns : t;
  s.window_start_ns = tau_ns > 0.0 ? window : t;
  s.readout_at_ns = t;
  s.total_duration_ns = t;
  s.validate();
  return s;
}

}  // namespace magsim
