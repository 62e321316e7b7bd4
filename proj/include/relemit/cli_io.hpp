#pragma once

#include "relemit/dynamics.hpp"
#include "relemit/emission.hpp"
#include "relemit/material.hpp"
#include "relemit/units.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace relemit::io {

// Atom block in SI units.
struct AtomConfig {
  double transition_frequency = 1.5494760644820168e16;   // rad/s (H Lyman-α)
  std::array<double, 3> dipole{0.0, 0.0, 6.3155256e-30}; // C·m, 0.7449 e a₀
  double mass = 1.6735575e-27;                           // kg (H atom)
  std::array<double, 3> velocity{0.0, 0.0, 0.0};         // m/s
};

enum class MediumKind { vacuum, bulk };

// Poles in SI: strength (rad/s)², resonance and damping rad/s.
struct MediumConfig {
  MediumKind kind = MediumKind::vacuum;
  std::vector<LorentzPole> electric;
  std::vector<LorentzPole> magnetic;
};

enum class RunMode { decay, shift, dynamics };

// "<field>=<start>:<stop>:<step>" over v_over_c, omega_cutoff or k_max.
struct SweepSpec {
  std::string field;
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;

  bool empty() const { return field.empty(); }
  // count = floor((stop − start)/step + 1e-9) + 1 points.
  std::vector<double> values() const;
  std::string str() const;
  static SweepSpec parse(const std::string &text);
};

struct RunConfig {
  RunMode mode = RunMode::decay;
  SweepSpec sweep;
  ShiftMode shift_mode;   // fixed value in rad/s
  bool exact_spinor = false;
  int threads = 1;
  std::string format = "csv";
  std::string output = "relemit.csv";
  // Write wall_time_s as 0 so repeated runs are byte-identical.
  bool reproducible = false;
  bool markov_phase_as_printed = true;
  // Dynamics only (seconds). time_step 0 selects 2π/(50 Λ).
  double t_end = 0.0;
  double time_step = 0.0;
  int spectral_nodes = 2048;
  int output_every = 1;
};

struct ScenarioConfig {
  AtomConfig atom;
  MediumConfig medium;
  QuadratureSpec quadrature;
  RunConfig run;

  // Enforces every invariant; ValidationError names the field.
  void validate() const;
};

// Parse errors carry line/column; validation errors the field path; keys
// outside the documented schema are rejected.
ScenarioConfig load_config(const std::filesystem::path &path);
ScenarioConfig parse_config(const std::string &text);

// Scaled-unit view of one scenario.
struct ScaledScenario {
  UnitScale units;
  AtomState atom;
  GreenSource source;
  QuadratureSpec quadrature;
  EmissionOptions options;
};

ScaledScenario to_scaled(const ScenarioConfig &config);
AtomConfig atom_to_si(const AtomState &atom, const UnitScale &units);

// Config for sweep point `value` of config.run.sweep. The v_over_c sweep
// runs along the configured velocity direction (ẑ if it is zero).
ScenarioConfig sweep_point(const ScenarioConfig &config, double value);

struct UnitFactors {
  double omega_a = 0.0;    // rad/s per scaled frequency
  double time = 0.0;       // s per scaled time
  double wavenumber = 0.0; // 1/m per scaled wavenumber
  double dipole = 0.0;     // C·m per scaled dipole
  double mass = 0.0;       // kg per scaled mass
};

struct RunRecord {
  std::size_t index = 0;
  double sweep_value = 0.0;
  ScenarioConfig config;
  UnitFactors units;
  bool ok = true;
  std::string error;
  int error_code = 0;
  // Results in SI (rates 1/s, shifts rad/s) except the relative error.
  double v_over_c = 0.0;
  double gamma_lorentz = 1.0;
  std::optional<EmissionResult> emission;
  std::optional<AmplitudeTrajectory> trajectory;
  std::vector<std::string> warnings;
  double wall_time_s = 0.0;
  std::string version;
  double calibration_constant = kShellNormalization;
};

// One record per sweep point, in sweep order. Points run concurrently;
// a failing point is recorded with its error and does not stop the sweep.
std::vector<RunRecord> run_sweep(const ScenarioConfig &config);
RunRecord run_point(const ScenarioConfig &config, std::size_t index, double sweep_value,
                    int threads);

extern const std::vector<std::string> kCsvColumns;
extern const std::vector<std::string> kTrajectoryColumns;

std::string format_double(double x); // 17 significant digits
std::string to_csv(const std::vector<RunRecord> &records);
std::string trajectory_csv(const AmplitudeTrajectory &trajectory, int every = 1);
std::string to_json(const std::vector<RunRecord> &records);
std::vector<RunRecord> records_from_json(const std::string &text);

// Writes records in `format` to `path`; dynamics CSV writes one trajectory
// file per record (<stem>_<i>.csv when there are several). IoError on failure.
std::vector<std::filesystem::path> emit(const std::vector<RunRecord> &records,
                                        const std::string &format,
                                        const std::filesystem::path &path);

} // namespace relemit::io
