#include "relemit/cli_io.hpp"

#include "relemit/errors.hpp"
#include "relemit/numerics.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#ifndef RELEMIT_VERSION
#define RELEMIT_VERSION "0.0.0"
#endif

namespace relemit::io {

using nlohmann::json;

namespace {

// --- YAML reading ------------------------------------------------------------

void check_keys(const YAML::Node &node, const std::string &path,
                const std::set<std::string> &allowed) {
  if (!node.IsMap())
    throw ValidationError(path.empty() ? "<root>" : path, "expected a mapping");
  for (const auto &kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key))
      throw ValidationError(path.empty() ? key : path + "." + key,
                            "unknown key (line " +
                                std::to_string(kv.first.Mark().line + 1) + ")");
  }
}

template <class T> T scalar(const YAML::Node &node, const std::string &field) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception &) {
    std::string want = std::is_same_v<T, double>  ? "a number"
                       : std::is_same_v<T, int>   ? "an integer"
                       : std::is_same_v<T, bool>  ? "true or false"
                                                  : "a string";
    throw ValidationError(field, "expected " + want + " (line " +
                                     std::to_string(node.Mark().line + 1) + ")");
  }
}

template <class T>
void read(const YAML::Node &parent, const char *key, const std::string &path, T &out) {
  if (const auto node = parent[key])
    out = scalar<T>(node, path + "." + key);
}

void read_vec3(const YAML::Node &parent, const char *key, const std::string &path,
               std::array<double, 3> &out) {
  const auto node = parent[key];
  if (!node)
    return;
  const std::string field = path + "." + key;
  if (!node.IsSequence() || node.size() != 3)
    throw ValidationError(field, "expected a 3-element list");
  for (std::size_t i = 0; i < 3; ++i)
    out[i] = scalar<double>(node[i], field + "[" + std::to_string(i) + "]");
}

std::vector<LorentzPole> read_poles(const YAML::Node &node, const std::string &field) {
  std::vector<LorentzPole> poles;
  if (!node)
    return poles;
  if (!node.IsSequence())
    throw ValidationError(field, "expected a list of poles");
  for (std::size_t i = 0; i < node.size(); ++i) {
    const std::string path = field + "[" + std::to_string(i) + "]";
    check_keys(node[i], path, {"strength", "resonance", "damping"});
    LorentzPole p;
    for (const char *k : {"strength", "resonance", "damping"})
      if (!node[i][k])
        throw ValidationError(path + "." + k, "required");
    read(node[i], "strength", path, p.strength);
    read(node[i], "resonance", path, p.resonance);
    read(node[i], "damping", path, p.damping);
    poles.push_back(p);
  }
  return poles;
}

std::string mode_name(RunMode m) {
  switch (m) {
  case RunMode::decay:
    return "decay";
  case RunMode::shift:
    return "shift";
  case RunMode::dynamics:
    return "dynamics";
  }
  return "decay";
}

RunMode mode_from(const std::string &s) {
  if (s == "decay")
    return RunMode::decay;
  if (s == "shift")
    return RunMode::shift;
  if (s == "dynamics")
    return RunMode::dynamics;
  throw ValidationError("run.mode", "expected decay, shift or dynamics, got '" + s + "'");
}

Vec3 to_vec(const std::array<double, 3> &a) { return {a[0], a[1], a[2]}; }

// --- JSON --------------------------------------------------------------------

json pole_json(const LorentzPole &p) {
  return {{"strength", p.strength}, {"resonance", p.resonance}, {"damping", p.damping}};
}

LorentzPole pole_from(const json &j) {
  return {j.at("strength").get<double>(), j.at("resonance").get<double>(),
          j.at("damping").get<double>()};
}

json config_json(const ScenarioConfig &c) {
  json poles_e = json::array(), poles_m = json::array();
  for (const auto &p : c.medium.electric)
    poles_e.push_back(pole_json(p));
  for (const auto &p : c.medium.magnetic)
    poles_m.push_back(pole_json(p));
  const auto &q = c.quadrature;
  const auto &r = c.run;
  return {
      {"atom",
       {{"transition_frequency", c.atom.transition_frequency},
        {"dipole", c.atom.dipole},
        {"mass", c.atom.mass},
        {"velocity", c.atom.velocity}}},
      {"medium",
       {{"type", c.medium.kind == MediumKind::vacuum ? "vacuum" : "bulk"},
        {"electric", poles_e},
        {"magnetic", poles_m}}},
      {"quadrature",
       {{"n_polar", q.n_polar},
        {"n_azimuthal", q.n_azimuthal},
        {"radial_nodes", q.radial_nodes},
        {"k_max", q.k_max},
        {"omega_cutoff", q.omega_cutoff},
        {"pv_window", q.pv_window},
        {"rel_tol", q.rel_tol},
        {"angular_tol", q.angular_tol},
        {"max_panels", q.max_panels},
        {"max_polar_segments", q.max_polar_segments}}},
      {"run",
       {{"mode", mode_name(r.mode)},
        {"sweep", r.sweep.str()},
        {"shift_mode", r.shift_mode.str()},
        {"exact_spinor", r.exact_spinor},
        {"threads", r.threads},
        {"format", r.format},
        {"output", r.output},
        {"reproducible", r.reproducible},
        {"markov_phase", r.markov_phase_as_printed ? "printed" : "flipped"},
        {"t_end", r.t_end},
        {"time_step", r.time_step},
        {"spectral_nodes", r.spectral_nodes},
        {"output_every", r.output_every}}}};
}

ScenarioConfig config_from(const json &j) {
  ScenarioConfig c;
  const auto &a = j.at("atom");
  c.atom.transition_frequency = a.at("transition_frequency");
  c.atom.dipole = a.at("dipole").get<std::array<double, 3>>();
  c.atom.mass = a.at("mass");
  c.atom.velocity = a.at("velocity").get<std::array<double, 3>>();
  const auto &m = j.at("medium");
  c.medium.kind = m.at("type") == "vacuum" ? MediumKind::vacuum : MediumKind::bulk;
  for (const auto &p : m.at("electric"))
    c.medium.electric.push_back(pole_from(p));
  for (const auto &p : m.at("magnetic"))
    c.medium.magnetic.push_back(pole_from(p));
  const auto &q = j.at("quadrature");
  c.quadrature.n_polar = q.at("n_polar");
  c.quadrature.n_azimuthal = q.at("n_azimuthal");
  c.quadrature.radial_nodes = q.at("radial_nodes");
  c.quadrature.k_max = q.at("k_max");
  c.quadrature.omega_cutoff = q.at("omega_cutoff");
  c.quadrature.pv_window = q.at("pv_window");
  c.quadrature.rel_tol = q.at("rel_tol");
  c.quadrature.angular_tol = q.at("angular_tol");
  c.quadrature.max_panels = q.at("max_panels");
  c.quadrature.max_polar_segments = q.at("max_polar_segments");
  const auto &r = j.at("run");
  c.run.mode = mode_from(r.at("mode"));
  const std::string sweep = r.at("sweep");
  if (!sweep.empty())
    c.run.sweep = SweepSpec::parse(sweep);
  c.run.shift_mode = ShiftMode::parse(r.at("shift_mode"));
  c.run.exact_spinor = r.at("exact_spinor");
  c.run.threads = r.at("threads");
  c.run.format = r.at("format");
  c.run.output = r.at("output");
  c.run.reproducible = r.at("reproducible");
  c.run.markov_phase_as_printed = r.at("markov_phase") == "printed";
  c.run.t_end = r.at("t_end");
  c.run.time_step = r.at("time_step");
  c.run.spectral_nodes = r.at("spectral_nodes");
  c.run.output_every = r.at("output_every");
  return c;
}

json emission_json(const EmissionResult &e) {
  return {{"gamma_total", e.gamma_total},
          {"gamma_terms", e.gamma_terms},
          {"lamb_shift", e.lamb_shift},
          {"has_lamb_shift", e.has_lamb_shift},
          {"shift_terms", e.shift_terms},
          {"omega_cutoff", e.omega_cutoff},
          {"quadrature_error_estimate", e.quadrature_error_estimate},
          {"node_counts",
           {{"angular", e.node_counts.angular},
            {"radial_evaluations", e.node_counts.radial_evaluations}}},
          {"delta_omega_used", e.delta_omega_used},
          {"shift_iterations", e.shift_iterations}};
}

EmissionResult emission_from(const json &j) {
  EmissionResult e;
  e.gamma_total = j.at("gamma_total");
  e.gamma_terms = j.at("gamma_terms").get<std::array<double, 4>>();
  e.lamb_shift = j.at("lamb_shift");
  e.has_lamb_shift = j.at("has_lamb_shift");
  e.shift_terms = j.at("shift_terms").get<std::array<double, 4>>();
  e.omega_cutoff = j.at("omega_cutoff");
  e.quadrature_error_estimate = j.at("quadrature_error_estimate");
  e.node_counts.angular = j.at("node_counts").at("angular");
  e.node_counts.radial_evaluations = j.at("node_counts").at("radial_evaluations");
  e.delta_omega_used = j.at("delta_omega_used");
  e.shift_iterations = j.at("shift_iterations");
  return e;
}

json trajectory_json(const AmplitudeTrajectory &t) {
  std::vector<double> re, im, mre, mim;
  for (const auto &c : t.amplitude) {
    re.push_back(c.real());
    im.push_back(c.imag());
  }
  for (const auto &c : t.markov) {
    mre.push_back(c.real());
    mim.push_back(c.imag());
  }
  return {{"times", t.times},          {"re_C", re},
          {"im_C", im},                {"re_markov", mre},
          {"im_markov", mim},          {"survival", t.survival},
          {"markov_survival", t.markov_survival}};
}

AmplitudeTrajectory trajectory_from(const json &j) {
  AmplitudeTrajectory t;
  t.times = j.at("times").get<std::vector<double>>();
  const auto re = j.at("re_C").get<std::vector<double>>();
  const auto im = j.at("im_C").get<std::vector<double>>();
  const auto mre = j.at("re_markov").get<std::vector<double>>();
  const auto mim = j.at("im_markov").get<std::vector<double>>();
  for (std::size_t i = 0; i < re.size(); ++i)
    t.amplitude.emplace_back(re[i], im[i]);
  for (std::size_t i = 0; i < mre.size(); ++i)
    t.markov.emplace_back(mre[i], mim[i]);
  t.survival = j.at("survival").get<std::vector<double>>();
  t.markov_survival = j.at("markov_survival").get<std::vector<double>>();
  return t;
}

json record_json(const RunRecord &r) {
  json j = {{"index", r.index},
            {"sweep_value", r.sweep_value},
            {"config", config_json(r.config)},
            {"units",
             {{"omega_a", r.units.omega_a},
              {"time", r.units.time},
              {"wavenumber", r.units.wavenumber},
              {"dipole", r.units.dipole},
              {"mass", r.units.mass}}},
            {"ok", r.ok},
            {"error", r.error},
            {"error_code", r.error_code},
            {"v_over_c", r.v_over_c},
            {"gamma_lorentz", r.gamma_lorentz},
            {"emission", r.emission ? emission_json(*r.emission) : json()},
            {"trajectory", r.trajectory ? trajectory_json(*r.trajectory) : json()},
            {"warnings", r.warnings},
            {"wall_time_s", r.wall_time_s},
            {"version", r.version},
            {"calibration_constant", r.calibration_constant}};
  return j;
}

RunRecord record_from(const json &j) {
  RunRecord r;
  r.index = j.at("index");
  r.sweep_value = j.at("sweep_value");
  r.config = config_from(j.at("config"));
  const auto &u = j.at("units");
  r.units = {u.at("omega_a"), u.at("time"), u.at("wavenumber"), u.at("dipole"),
             u.at("mass")};
  r.ok = j.at("ok");
  r.error = j.at("error");
  r.error_code = j.at("error_code");
  r.v_over_c = j.at("v_over_c");
  r.gamma_lorentz = j.at("gamma_lorentz");
  if (!j.at("emission").is_null())
    r.emission = emission_from(j.at("emission"));
  if (!j.at("trajectory").is_null())
    r.trajectory = trajectory_from(j.at("trajectory"));
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  r.wall_time_s = j.at("wall_time_s");
  r.version = j.at("version");
  r.calibration_constant = j.at("calibration_constant");
  return r;
}

void write_file(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out)
    throw IoError("write to '" + path.string() + "' failed");
}

} // namespace

// --- sweep spec --------------------------------------------------------------

std::vector<double> SweepSpec::values() const {
  if (empty())
    return {};
  const auto count =
      static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = start + static_cast<double>(i) * step;
  return out;
}

std::string SweepSpec::str() const {
  if (empty())
    return "";
  return field + "=" + format_double(start) + ":" + format_double(stop) + ":" +
         format_double(step);
}

SweepSpec SweepSpec::parse(const std::string &text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos)
    throw ValidationError("run.sweep", "expected <field>=<start>:<stop>:<step>");
  SweepSpec s;
  s.field = text.substr(0, eq);
  if (s.field != "v_over_c" && s.field != "omega_cutoff" && s.field != "k_max")
    throw ValidationError("run.sweep",
                          "field must be v_over_c, omega_cutoff or k_max, got '" +
                              s.field + "'");
  std::array<double, 3> parts{};
  std::stringstream rest(text.substr(eq + 1));
  std::string item;
  std::size_t n = 0;
  while (std::getline(rest, item, ':')) {
    if (n == 3)
      throw ValidationError("run.sweep", "too many ':' separated values");
    std::size_t used = 0;
    try {
      parts[n] = std::stod(item, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used == 0 || used != item.size())
      throw ValidationError("run.sweep", "bad number '" + item + "'");
    ++n;
  }
  if (n != 3)
    throw ValidationError("run.sweep", "expected <field>=<start>:<stop>:<step>");
  s.start = parts[0];
  s.stop = parts[1];
  s.step = parts[2];
  if (!(s.step > 0.0) || !(s.stop >= s.start))
    throw ValidationError("run.sweep", "need step > 0 and stop >= start");
  return s;
}

// --- config ------------------------------------------------------------------

void ScenarioConfig::validate() const {
  if (!(atom.transition_frequency > 0.0) || !std::isfinite(atom.transition_frequency))
    throw ValidationError("atom.transition_frequency", "must be finite and > 0");
  if (!(to_vec(atom.dipole).norm() > 0.0) || !to_vec(atom.dipole).allFinite())
    throw ValidationError("atom.dipole", "must be a finite non-zero vector");
  if (!(atom.mass > 0.0) || !std::isfinite(atom.mass))
    throw ValidationError("atom.mass", "must be finite and > 0");
  const double beta = to_vec(atom.velocity).norm() / si::c;
  if (!(beta < 1.0))
    throw ValidationError("atom.velocity", "speed must be below c, got |v|/c = " +
                                               format_double(beta));

  auto check_poles = [](const std::vector<LorentzPole> &poles, const std::string &name) {
    for (std::size_t i = 0; i < poles.size(); ++i) {
      const std::string path = name + "[" + std::to_string(i) + "]";
      const auto &p = poles[i];
      if (!(p.damping > 0.0))
        throw ValidationError(path + ".damping", "must be > 0 for a passive medium");
      if (!(p.resonance > 0.0))
        throw ValidationError(path + ".resonance", "must be > 0");
      if (!(p.strength >= 0.0))
        throw ValidationError(path + ".strength", "must be >= 0 for a passive medium");
    }
  };
  check_poles(medium.electric, "medium.electric");
  check_poles(medium.magnetic, "medium.magnetic");
  if (medium.kind == MediumKind::vacuum) {
    if (!medium.electric.empty() || !medium.magnetic.empty())
      throw ValidationError("medium.type", "vacuum takes no poles; use type: bulk");
  } else {
    bool lossy = false;
    for (const auto *list : {&medium.electric, &medium.magnetic})
      for (const auto &p : *list)
        lossy = lossy || p.strength > 0.0;
    if (!lossy)
      throw ValidationError("medium.electric",
                            "bulk medium needs at least one pole with strength > 0");
  }

  quadrature.validate();

  if (run.threads < 1)
    throw ValidationError("run.threads", "must be >= 1");
  if (run.format != "csv" && run.format != "json")
    throw ValidationError("run.format", "expected csv or json");
  if (run.output.empty())
    throw ValidationError("run.output", "must not be empty");
  if (!run.sweep.empty()) {
    for (double v : run.sweep.values()) {
      if (run.sweep.field == "v_over_c" && !(v >= 0.0 && v < 1.0))
        throw ValidationError("run.sweep", "v_over_c values must lie in [0, 1)");
      if (run.sweep.field == "k_max" && !(v > 1.0))
        throw ValidationError("run.sweep", "k_max values must be > 1");
      if (run.sweep.field == "omega_cutoff" && !(v > 1.0))
        throw ValidationError("run.sweep", "omega_cutoff values must be > 1");
    }
  }
  if (run.mode == RunMode::dynamics) {
    if (!(run.t_end > 0.0))
      throw ValidationError("run.t_end", "dynamics needs t_end > 0 (seconds)");
    if (!(run.time_step >= 0.0))
      throw ValidationError("run.time_step", "must be >= 0 (0 selects the default)");
    if (run.spectral_nodes < 3)
      throw ValidationError("run.spectral_nodes", "must be >= 3");
    if (run.output_every < 1)
      throw ValidationError("run.output_every", "must be >= 1");
  }
}

ScenarioConfig parse_config(const std::string &text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException &e) {
    throw ParseError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  ScenarioConfig c;
  if (root.IsNull())
    return c;
  check_keys(root, "", {"atom", "medium", "quadrature", "run"});

  if (const auto a = root["atom"]) {
    check_keys(a, "atom", {"transition_frequency", "dipole", "mass", "velocity"});
    read(a, "transition_frequency", "atom", c.atom.transition_frequency);
    read_vec3(a, "dipole", "atom", c.atom.dipole);
    read(a, "mass", "atom", c.atom.mass);
    read_vec3(a, "velocity", "atom", c.atom.velocity);
  }
  if (const auto m = root["medium"]) {
    check_keys(m, "medium", {"type", "electric", "magnetic"});
    std::string type = "vacuum";
    read(m, "type", "medium", type);
    if (type == "vacuum")
      c.medium.kind = MediumKind::vacuum;
    else if (type == "bulk")
      c.medium.kind = MediumKind::bulk;
    else
      throw ValidationError("medium.type", "expected vacuum or bulk, got '" + type + "'");
    c.medium.electric = read_poles(m["electric"], "medium.electric");
    c.medium.magnetic = read_poles(m["magnetic"], "medium.magnetic");
  }
  if (const auto q = root["quadrature"]) {
    check_keys(q, "quadrature",
               {"n_polar", "n_azimuthal", "radial_nodes", "k_max", "omega_cutoff",
                "pv_window", "rel_tol", "angular_tol", "max_panels",
                "max_polar_segments"});
    auto &s = c.quadrature;
    read(q, "n_polar", "quadrature", s.n_polar);
    read(q, "n_azimuthal", "quadrature", s.n_azimuthal);
    read(q, "radial_nodes", "quadrature", s.radial_nodes);
    read(q, "k_max", "quadrature", s.k_max);
    read(q, "omega_cutoff", "quadrature", s.omega_cutoff);
    read(q, "pv_window", "quadrature", s.pv_window);
    read(q, "rel_tol", "quadrature", s.rel_tol);
    read(q, "angular_tol", "quadrature", s.angular_tol);
    int panels = static_cast<int>(s.max_panels);
    read(q, "max_panels", "quadrature", panels);
    if (panels < 16)
      throw ValidationError("quadrature.max_panels", "must be >= 16");
    s.max_panels = static_cast<std::size_t>(panels);
    read(q, "max_polar_segments", "quadrature", s.max_polar_segments);
  }
  if (const auto r = root["run"]) {
    check_keys(r, "run",
               {"mode", "sweep", "shift_mode", "exact_spinor", "threads", "format",
                "output", "reproducible", "markov_phase", "t_end", "time_step",
                "spectral_nodes", "output_every"});
    auto &run = c.run;
    std::string mode = "decay";
    read(r, "mode", "run", mode);
    run.mode = mode_from(mode);
    std::string sweep;
    read(r, "sweep", "run", sweep);
    if (!sweep.empty())
      run.sweep = SweepSpec::parse(sweep);
    std::string shift = "zero";
    read(r, "shift_mode", "run", shift);
    run.shift_mode = ShiftMode::parse(shift);
    read(r, "exact_spinor", "run", run.exact_spinor);
    read(r, "threads", "run", run.threads);
    read(r, "format", "run", run.format);
    read(r, "output", "run", run.output);
    read(r, "reproducible", "run", run.reproducible);
    std::string phase = "printed";
    read(r, "markov_phase", "run", phase);
    if (phase != "printed" && phase != "flipped")
      throw ValidationError("run.markov_phase", "expected printed or flipped");
    run.markov_phase_as_printed = phase == "printed";
    read(r, "t_end", "run", run.t_end);
    read(r, "time_step", "run", run.time_step);
    read(r, "spectral_nodes", "run", run.spectral_nodes);
    read(r, "output_every", "run", run.output_every);
  }
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

ScaledScenario to_scaled(const ScenarioConfig &config) {
  const UnitScale u(config.atom.transition_frequency);
  AtomState atom;
  atom.transition_frequency = 1.0;
  atom.dipole = to_vec(config.atom.dipole) / u.dipole();
  atom.mass = config.atom.mass / u.mass();
  atom.velocity = to_vec(config.atom.velocity) / u.velocity();

  auto scale_poles = [&](const std::vector<LorentzPole> &poles) {
    std::vector<LorentzPole> out;
    for (const auto &p : poles)
      out.push_back({p.strength / u.pole_strength(), p.resonance / u.frequency(),
                     p.damping / u.frequency()});
    return out;
  };
  GreenSource source = VacuumShell{};
  if (config.medium.kind == MediumKind::bulk)
    source = SmoothBulk(DispersiveMedium(scale_poles(config.medium.electric),
                                         scale_poles(config.medium.magnetic)));
  EmissionOptions opts;
  opts.shift = config.run.shift_mode;
  if (opts.shift.kind == ShiftKind::fixed)
    opts.shift.value /= u.frequency();
  opts.exact_spinor = config.run.exact_spinor;
  opts.threads = config.run.threads;
  return {u, atom, source, config.quadrature, opts};
}

AtomConfig atom_to_si(const AtomState &atom, const UnitScale &u) {
  AtomConfig a;
  a.transition_frequency = atom.transition_frequency * u.frequency();
  for (int i = 0; i < 3; ++i) {
    a.dipole[i] = atom.dipole[i] * u.dipole();
    a.velocity[i] = atom.velocity[i] * u.velocity();
  }
  a.mass = atom.mass * u.mass();
  return a;
}

ScenarioConfig sweep_point(const ScenarioConfig &config, double value) {
  ScenarioConfig c = config;
  const auto &field = config.run.sweep.field;
  if (field == "v_over_c") {
    Vec3 dir = to_vec(config.atom.velocity);
    dir = dir.norm() > 0.0 ? Vec3(dir.normalized()) : Vec3::UnitZ();
    for (int i = 0; i < 3; ++i)
      c.atom.velocity[i] = value * si::c * dir[i];
  } else if (field == "omega_cutoff") {
    c.quadrature.omega_cutoff = value;
  } else if (field == "k_max") {
    c.quadrature.k_max = value;
  }
  c.run.sweep = {};
  return c;
}

// --- running -----------------------------------------------------------------

RunRecord run_point(const ScenarioConfig &config, std::size_t index, double sweep_value,
                    int threads) {
  RunRecord rec;
  rec.index = index;
  rec.sweep_value = sweep_value;
  rec.config = config;
  rec.version = RELEMIT_VERSION;
  const auto started = std::chrono::steady_clock::now();
  try {
    config.validate();
    ScaledScenario s = to_scaled(config);
    s.options.threads = threads;
    rec.units = {s.units.frequency(), s.units.time(), s.units.wavenumber(),
                 s.units.dipole(), s.units.mass()};
    rec.v_over_c = s.atom.velocity.norm();
    rec.gamma_lorentz = lorentz_gamma(s.atom.velocity);

    EmissionResult r;
    switch (config.run.mode) {
    case RunMode::decay:
      r = decay_rate(s.atom, s.source, s.quadrature, s.options);
      break;
    case RunMode::shift:
      if (s.options.shift.kind == ShiftKind::self_consistent) {
        r = self_consistent_shift(s.atom, s.source, s.quadrature, s.options).rate;
      } else {
        r = decay_rate(s.atom, s.source, s.quadrature, s.options);
        const auto ls = lamb_shift(s.atom, s.source, s.quadrature, s.options);
        r.lamb_shift = ls.value;
        r.shift_terms = ls.terms;
        r.has_lamb_shift = true;
      }
      break;
    case RunMode::dynamics: {
      DynamicsOptions d;
      d.emission = s.options;
      d.spectral_nodes = config.run.spectral_nodes;
      d.markov_phase_as_printed = config.run.markov_phase_as_printed;
      const double limit = 2.0 * std::numbers::pi / (50.0 * s.quadrature.omega_cutoff);
      const double step =
          config.run.time_step > 0.0 ? config.run.time_step / s.units.time() : limit;
      const double t_end = config.run.t_end / s.units.time();
      const auto steps = static_cast<std::size_t>(std::llround(t_end / step));
      const auto kernel =
          build_memory_kernel(s.atom, s.source, step, steps + 1, s.quadrature, d);
      auto traj = evolve_amplitude(kernel, step * static_cast<double>(steps), step,
                                   d.markov_phase_as_printed);
      for (double &t : traj.times)
        t *= s.units.time();
      rec.trajectory = std::move(traj);
      rec.warnings = kernel.warnings;
      EmissionOptions fixed = s.options;
      fixed.shift = {ShiftKind::fixed, kernel.delta_omega};
      r = decay_rate(s.atom, s.source, s.quadrature, fixed);
      break;
    }
    }
    const double w = s.units.frequency();
    r.gamma_total *= w;
    for (double &t : r.gamma_terms)
      t *= w;
    r.lamb_shift *= w;
    for (double &t : r.shift_terms)
      t *= w;
    r.omega_cutoff *= w;
    r.delta_omega_used *= w;
    rec.emission = r;
  } catch (const std::exception &e) {
    rec.ok = false;
    rec.error = e.what();
    rec.error_code = exit_code(e);
    rec.emission.reset();
    rec.trajectory.reset();
  }
  rec.wall_time_s =
      config.run.reproducible
          ? 0.0
          : std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                .count();
  return rec;
}

std::vector<RunRecord> run_sweep(const ScenarioConfig &config) {
  config.validate();
  std::vector<double> values = config.run.sweep.values();
  const bool swept = !values.empty();
  if (!swept)
    values.push_back(0.0);
  std::vector<RunRecord> records(values.size());
  const int threads = config.run.threads;
  // Points in parallel when there are enough of them, otherwise the threads
  // go to the quadrature. Either way the reduction order is fixed.
  const bool outer = static_cast<int>(values.size()) >= threads && values.size() > 1;
  numerics::parallel_for(values.size(), outer ? threads : 1, [&](std::size_t i) {
    const ScenarioConfig point = swept ? sweep_point(config, values[i]) : config;
    records[i] = run_point(point, i, swept ? values[i] : 0.0, outer ? 1 : threads);
  });
  return records;
}

// --- emission ----------------------------------------------------------------

const std::vector<std::string> kCsvColumns = {
    "v_over_c",          "gamma_lorentz", "decay_rate_si", "term_static",
    "term_motion_left",  "term_recoil_right", "term_cross", "lamb_shift_si",
    "omega_cutoff",      "quad_error",    "wall_time_s"};

const std::vector<std::string> kTrajectoryColumns = {"t_s", "re_C", "im_C", "survival",
                                                     "markov_survival"};

std::string format_double(double x) {
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {
std::string join_row(const std::vector<std::string> &cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i)
      out += ',';
    out += cells[i];
  }
  return out + '\n';
}
} // namespace

std::string to_csv(const std::vector<RunRecord> &records) {
  std::string out = join_row(kCsvColumns);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto &r : records) {
    const EmissionResult *e = r.emission ? &*r.emission : nullptr;
    auto val = [&](auto get) { return format_double(e ? get(*e) : nan); };
    out += join_row({
        format_double(r.v_over_c),
        format_double(r.gamma_lorentz),
        val([](const EmissionResult &x) { return x.gamma_total; }),
        val([](const EmissionResult &x) { return x.gamma_terms[0]; }),
        val([](const EmissionResult &x) { return x.gamma_terms[1]; }),
        val([](const EmissionResult &x) { return x.gamma_terms[2]; }),
        val([](const EmissionResult &x) { return x.gamma_terms[3]; }),
        val([nan](const EmissionResult &x) { return x.has_lamb_shift ? x.lamb_shift : nan; }),
        val([](const EmissionResult &x) { return x.omega_cutoff; }),
        val([](const EmissionResult &x) { return x.quadrature_error_estimate; }),
        format_double(r.wall_time_s),
    });
  }
  return out;
}

std::string trajectory_csv(const AmplitudeTrajectory &t, int every) {
  std::string out = join_row(kTrajectoryColumns);
  const std::size_t stride = static_cast<std::size_t>(std::max(1, every));
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    if (i % stride != 0 && i + 1 != t.times.size())
      continue;
    out += join_row({format_double(t.times[i]), format_double(t.amplitude[i].real()),
                     format_double(t.amplitude[i].imag()), format_double(t.survival[i]),
                     format_double(t.markov_survival[i])});
  }
  return out;
}

std::string to_json(const std::vector<RunRecord> &records) {
  json arr = json::array();
  for (const auto &r : records)
    arr.push_back(record_json(r));
  return json{{"records", arr}}.dump(2) + "\n";
}

std::vector<RunRecord> records_from_json(const std::string &text) {
  std::vector<RunRecord> out;
  try {
    const json j = json::parse(text);
    for (const auto &r : j.at("records"))
      out.push_back(record_from(r));
  } catch (const json::exception &e) {
    throw ParseError(std::string("record JSON: ") + e.what(), 0, 0);
  }
  return out;
}

std::vector<std::filesystem::path> emit(const std::vector<RunRecord> &records,
                                        const std::string &format,
                                        const std::filesystem::path &path) {
  if (records.empty())
    throw IoError("emit: no records");
  std::vector<std::filesystem::path> written;
  if (format == "json") {
    write_file(path, to_json(records));
    written.push_back(path);
    return written;
  }
  if (format != "csv")
    throw ValidationError("run.format", "expected csv or json");
  if (records.front().config.run.mode != RunMode::dynamics) {
    write_file(path, to_csv(records));
    written.push_back(path);
    return written;
  }
  for (const auto &r : records) {
    std::filesystem::path target = path;
    if (records.size() > 1)
      target = path.parent_path() / (path.stem().string() + "_" +
                                     std::to_string(r.index) + path.extension().string());
    const std::string text =
        r.trajectory ? trajectory_csv(*r.trajectory, r.config.run.output_every)
                     : join_row(kTrajectoryColumns);
    write_file(target, text);
    written.push_back(target);
  }
  return written;
}

} // namespace relemit::io
