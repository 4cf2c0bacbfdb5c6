#include "magsim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "magsim/errors.hpp"

namespace magsim {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

// Typed, strict access to one JSON object: every key must be consumed.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(where("") + ": expected an object");
  }

  void num(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) config_error(where(key) + ": expected a number");
      out = v->get<double>();
    }
  }
  void opt_num(const char* key, std::optional<double>& out) {
    if (const json* v = take(key)) {
      if (v->is_null()) {
        out.reset();
      } else if (v->is_number()) {
        out = v->get<double>();
      } else {
        config_error(where(key) + ": expected a number or null");
      }
    }
  }
  void count(const char* key, std::size_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned()) config_error(where(key) + ": expected a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void u64(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned()) config_error(where(key) + ": expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void flag(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) config_error(where(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }
  void str(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) config_error(where(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }
  void grid(const char* key, GridSpec& g) {
    if (const json* v = take(key)) {
      Reader r(*v, where(key));
      r.num("first", g.first);
      r.num("last", g.last);
      r.num("step", g.step);
      r.finish();
      if (!(g.step > 0.0) || g.last < g.first) config_error(where(key) + ": need step > 0 and last >= first");
    }
  }
  const json* object(const char* key) { return take(key); }
  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) config_error("unknown config key '" + where(it.key()) + "'");
    }
  }

 private:
  const json* take(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

json grid_json(const GridSpec& g) { return {{"first", g.first}, {"last", g.last}, {"step", g.step}}; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string exchange_name(ExchangeModel m) { return m == ExchangeModel::Bare ? "bare" : "dressed_qubit"; }

void read_params(Reader& r, PhysicalParams& p) {
  r.num("cavity_freq_ghz", p.cavity_freq_ghz);
  r.num("qubit_freq_ghz", p.qubit_freq_ghz);
  r.num("anharmonicity_ghz", p.anharmonicity_ghz);
  r.num("magnon_idle_freq_ghz", p.magnon_idle_freq_ghz);
  r.num("qubit_cavity_coupling_mhz", p.qubit_cavity_coupling_mhz);
  r.num("magnon_cavity_coupling_mhz", p.magnon_cavity_coupling_mhz);
  r.opt_num("effective_coupling_override_mhz", p.effective_coupling_override_mhz);
  r.num("t1_qubit_us", p.t1_qubit_us);
  r.num("t_phi_qubit_us", p.t_phi_qubit_us);
  r.num("t1_magnon_ns", p.t1_magnon_ns);
  r.num("magnon_dephasing_per_us", p.magnon_dephasing_per_us);
  r.num("qubit_thermal_occupation", p.qubit_thermal_occupation);
  r.num("magnon_thermal_occupation", p.magnon_thermal_occupation);
  r.num("cavity_linewidth_mhz", p.cavity_linewidth_mhz);
  r.flag("dissipation", p.dissipation);
  r.num("at_drive_detuning_mhz", p.at_drive_detuning_mhz);
  std::string model = exchange_name(p.exchange_model);
  r.str("exchange_model", model);
  if (model == "dressed_qubit") {
    p.exchange_model = ExchangeModel::DressedQubit;
  } else if (model == "bare") {
    p.exchange_model = ExchangeModel::Bare;
  } else {
    config_error(r.where("exchange_model") + ": expected 'dressed_qubit' or 'bare'");
  }
  r.num("dispersive_guard_ratio", p.dispersive_guard_ratio);
  if (const json* c = r.object("coil_map")) {
    Reader cr(*c, r.where("coil_map"));
    cr.num("reference_current_ma", p.coil_map.reference_current_ma);
    cr.num("freq_at_reference_ghz", p.coil_map.freq_at_reference_ghz);
    cr.num("slope_ghz_per_ma", p.coil_map.slope_ghz_per_ma);
    cr.finish();
  }
  r.finish();
  p.validate();
}

void read_settings(Reader& r, ProtocolSettings& s) {
  r.num("work_point_ghz", s.work_point_ghz);
  if (const json* pj = r.object("pi")) {
    Reader pr(*pj, r.where("pi"));
    std::string env = s.pi.envelope.kind == EnvelopeKind::Gaussian ? "gaussian" : "rectangular";
    pr.str("envelope", env);
    double sigma = s.pi.envelope.sigma_ns;
    pr.num("sigma_ns", sigma);
    if (env == "gaussian") {
      if (!(sigma > 0.0)) config_error(pr.where("sigma_ns") + ": must be positive");
      s.pi.envelope = Envelope::gaussian(sigma);
    } else if (env == "rectangular") {
      s.pi.envelope = Envelope::rectangular();
    } else {
      config_error(pr.where("envelope") + ": expected 'gaussian' or 'rectangular'");
    }
    pr.num("duration_ns", s.pi.duration_ns);
    pr.flag("calibrate_carrier", s.pi.calibrate_carrier);
    pr.num("max_infidelity", s.pi.max_infidelity);
    pr.finish();
  }
  r.opt_num("swap_duration_ns", s.swap_duration_ns);
  r.num("displacement_duration_ns", s.displacement_duration_ns);
  r.num("at_ramp_ns", s.at_ramp_ns);
  r.flag("loss_compensation", s.loss_compensation);
  r.opt_num("overrotation_factor", s.overrotation_factor);
  r.count("swap_magnon_dim", s.swap_magnon_dim);
  r.count("tomography_magnon_dim", s.tomography_magnon_dim);
  r.num("reported_work_amplitude_mhz", s.reported_work_amplitude_mhz);
  r.num("reported_swap_amplitude_mhz", s.reported_swap_amplitude_mhz);
  r.finish();
  if (!(s.pi.duration_ns > 0.0)) config_error("protocol.pi.duration_ns must be positive");
  if (!(s.displacement_duration_ns > 0.0)) config_error("protocol.displacement_duration_ns must be positive");
  if (s.at_ramp_ns < 0.0) config_error("protocol.at_ramp_ns must be non-negative");
  if (s.swap_magnon_dim < 2 || s.tomography_magnon_dim < 2) config_error("protocol magnon dims must be >= 2");
}

}  // namespace

json to_json(const PhysicalParams& p) {
  return {{"cavity_freq_ghz", p.cavity_freq_ghz},
          {"qubit_freq_ghz", p.qubit_freq_ghz},
          {"anharmonicity_ghz", p.anharmonicity_ghz},
          {"magnon_idle_freq_ghz", p.magnon_idle_freq_ghz},
          {"qubit_cavity_coupling_mhz", p.qubit_cavity_coupling_mhz},
          {"magnon_cavity_coupling_mhz", p.magnon_cavity_coupling_mhz},
          {"effective_coupling_override_mhz", opt_json(p.effective_coupling_override_mhz)},
          {"t1_qubit_us", p.t1_qubit_us},
          {"t_phi_qubit_us", p.t_phi_qubit_us},
          {"t1_magnon_ns", p.t1_magnon_ns},
          {"magnon_dephasing_per_us", p.magnon_dephasing_per_us},
          {"qubit_thermal_occupation", p.qubit_thermal_occupation},
          {"magnon_thermal_occupation", p.magnon_thermal_occupation},
          {"cavity_linewidth_mhz", p.cavity_linewidth_mhz},
          {"dissipation", p.dissipation},
          {"at_drive_detuning_mhz", p.at_drive_detuning_mhz},
          {"exchange_model", exchange_name(p.exchange_model)},
          {"dispersive_guard_ratio", p.dispersive_guard_ratio},
          {"coil_map",
           {{"reference_current_ma", p.coil_map.reference_current_ma},
            {"freq_at_reference_ghz", p.coil_map.freq_at_reference_ghz},
            {"slope_ghz_per_ma", p.coil_map.slope_ghz_per_ma}}}};
}

PhysicalParams params_from_json(const json& j) {
  PhysicalParams p;
  Reader r(j, "physical");
  read_params(r, p);
  return p;
}

json to_json(const ProtocolSettings& s) {
  const bool gauss = s.pi.envelope.kind == EnvelopeKind::Gaussian;
  return {{"work_point_ghz", s.work_point_ghz},
          {"pi",
           {{"envelope", gauss ? "gaussian" : "rectangular"},
            {"sigma_ns", s.pi.envelope.sigma_ns},
            {"duration_ns", s.pi.duration_ns},
            {"calibrate_carrier", s.pi.calibrate_carrier},
            {"max_infidelity", s.pi.max_infidelity}}},
          {"swap_duration_ns", opt_json(s.swap_duration_ns)},
          {"displacement_duration_ns", s.displacement_duration_ns},
          {"at_ramp_ns", s.at_ramp_ns},
          {"loss_compensation", s.loss_compensation},
          {"overrotation_factor", opt_json(s.overrotation_factor)},
          {"swap_magnon_dim", s.swap_magnon_dim},
          {"tomography_magnon_dim", s.tomography_magnon_dim},
          {"reported_work_amplitude_mhz", s.reported_work_amplitude_mhz},
          {"reported_swap_amplitude_mhz", s.reported_swap_amplitude_mhz}};
}

ProtocolSettings settings_from_json(const json& j) {
  ProtocolSettings s;
  Reader r(j, "protocol");
  read_settings(r, s);
  return s;
}

EvolveOptions RunConfig::evolve_options() const {
  EvolveOptions o;
  o.rk4_step_ns = rk4_step_ns;
  o.isolate_pulses = ideal_pulses;
  return o;
}

std::optional<ShotModel> RunConfig::shot_model() const {
  if (!shots_enabled) return std::nullopt;
  ShotModel m = shots;
  m.seed = seed;
  return m;
}

json to_json(const RunConfig& c) {
  const auto& t = c.tomography;
  const auto& a = c.shots.assignment;
  return {{"physical", to_json(c.physical)},
          {"protocol", to_json(c.protocol)},
          {"simulation", {{"ideal_pulses", c.ideal_pulses}, {"rk4_step_ns", c.rk4_step_ns}}},
          {"experiments",
           {{"anticross", {{"coil_ma", grid_json(c.anticross_coil_ma)}, {"probe_ghz", grid_json(c.anticross_probe_ghz)}}},
            {"at_scan", {{"amplitude_mhz", grid_json(c.at_amp_mhz)}, {"probe_ghz", grid_json(c.at_probe_ghz)}}},
            {"chevron", {{"tau_ns", grid_json(c.chevron_tau_ns)}, {"detuning_mhz", grid_json(c.chevron_detuning_mhz)}}},
            {"swap", {{"tau_ns", grid_json(c.swap_tau_ns)}}},
            {"tomography",
             {{"target", t.target},
              {"map_points", t.map_points},
              {"map_half_width", t.map_half_width},
              {"recon_points", t.recon_points},
              {"recon_half_width", t.recon_half_width},
              {"n_max", t.n_max},
              {"tau_ns", grid_json(t.tau_ns)},
              {"d_rec", t.d_rec},
              {"bootstrap", t.bootstrap},
              {"exact_populations", t.exact_populations}}}}},
          {"shots",
           {{"enabled", c.shots_enabled},
            {"count", c.shots.shots},
            {"assignment", {{a(0, 0), a(0, 1)}, {a(1, 0), a(1, 1)}}}}},
          {"output", {{"dir", c.output_dir}, {"format", c.output_format}}},
          {"seed", c.seed},
          {"workers", c.workers}};
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Reader r(j, "");
  if (const json* v = r.object("physical")) {
    Reader pr(*v, "physical");
    read_params(pr, c.physical);
  }
  if (const json* v = r.object("protocol")) {
    Reader pr(*v, "protocol");
    read_settings(pr, c.protocol);
  }
  if (const json* v = r.object("simulation")) {
    Reader sr(*v, "simulation");
    sr.flag("ideal_pulses", c.ideal_pulses);
    sr.num("rk4_step_ns", c.rk4_step_ns);
    sr.finish();
    if (!(c.rk4_step_ns > 0.0)) config_error("simulation.rk4_step_ns must be positive");
  }
  if (const json* v = r.object("experiments")) {
    Reader er(*v, "experiments");
    if (const json* a = er.object("anticross")) {
      Reader ar(*a, "experiments.anticross");
      ar.grid("coil_ma", c.anticross_coil_ma);
      ar.grid("probe_ghz", c.anticross_probe_ghz);
      ar.finish();
    }
    if (const json* a = er.object("at_scan")) {
      Reader ar(*a, "experiments.at_scan");
      ar.grid("amplitude_mhz", c.at_amp_mhz);
      ar.grid("probe_ghz", c.at_probe_ghz);
      ar.finish();
    }
    if (const json* a = er.object("chevron")) {
      Reader ar(*a, "experiments.chevron");
      ar.grid("tau_ns", c.chevron_tau_ns);
      ar.grid("detuning_mhz", c.chevron_detuning_mhz);
      ar.finish();
    }
    if (const json* a = er.object("swap")) {
      Reader ar(*a, "experiments.swap");
      ar.grid("tau_ns", c.swap_tau_ns);
      ar.finish();
    }
    if (const json* a = er.object("tomography")) {
      Reader tr(*a, "experiments.tomography");
      auto& t = c.tomography;
      tr.str("target", t.target);
      tr.count("map_points", t.map_points);
      tr.num("map_half_width", t.map_half_width);
      tr.count("recon_points", t.recon_points);
      tr.num("recon_half_width", t.recon_half_width);
      tr.count("n_max", t.n_max);
      tr.grid("tau_ns", t.tau_ns);
      tr.count("d_rec", t.d_rec);
      tr.count("bootstrap", t.bootstrap);
      tr.flag("exact_populations", t.exact_populations);
      tr.finish();
      prep_target_from_string(t.target);
      if (t.map_points < 1 || t.recon_points < 1) config_error("experiments.tomography: grid needs points");
      if (t.n_max < 1) config_error("experiments.tomography.n_max must be >= 1");
      if (t.d_rec < 1) config_error("experiments.tomography.d_rec must be >= 1");
    }
    er.finish();
  }
  if (const json* v = r.object("shots")) {
    Reader sr(*v, "shots");
    sr.flag("enabled", c.shots_enabled);
    sr.count("count", c.shots.shots);
    if (const json* a = sr.object("assignment")) {
      if (!a->is_array() || a->size() != 2 || !(*a)[0].is_array() || !(*a)[1].is_array() || (*a)[0].size() != 2 ||
          (*a)[1].size() != 2) {
        config_error("shots.assignment: expected [[p(g|g), p(g|e)], [p(e|g), p(e|e)]]");
      }
      for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k) {
          if (!(*a)[i][k].is_number()) config_error("shots.assignment: entries must be numbers");
          c.shots.assignment(i, k) = (*a)[i][k].get<double>();
        }
    }
    sr.finish();
    c.shots.validate();
  }
  if (const json* v = r.object("output")) {
    Reader orr(*v, "output");
    orr.str("dir", c.output_dir);
    orr.str("format", c.output_format);
    orr.finish();
    if (c.output_format != "csv" && c.output_format != "json" && c.output_format != "both") {
      config_error("output.format: expected csv, json or both");
    }
  }
  r.u64("seed", c.seed);
  r.count("workers", c.workers);
  r.finish();
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) config_error("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) config_error("override '" + assignment + "' has an empty key segment");
    if (!node->is_object()) config_error("override '" + path + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = to_json(RunConfig{});
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) config_error("cannot open config file '" + path + "'");
    json file = json::parse(in, nullptr, false);
    if (file.is_discarded()) config_error("config file '" + path + "' is not valid JSON");
    if (!file.is_object()) config_error("config file '" + path + "' must hold a JSON object");
    // Validate the file on its own so unknown keys are reported by name.
    config_from_json(file);
    doc.merge_patch(file);
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

}  // namespace magsim
