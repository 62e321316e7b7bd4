// relemit command line: decay, shift, dynamics and calibrate.
#include "relemit/cli_io.hpp"
#include "relemit/errors.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>

namespace {

using namespace relemit;

struct Flags {
  std::string config;
  std::string sweep;
  std::string out;
  std::string format;
  std::string shift_mode;
  int threads = 0;
  bool exact_spinor = false;
  bool reproducible = false;
  std::string markov_phase;
};

void add_flags(CLI::App *cmd, Flags &f) {
  cmd->add_option("--config", f.config, "YAML scenario file")->check(CLI::ExistingFile);
  cmd->add_option("--sweep", f.sweep, "<field>=<start>:<stop>:<step>");
  cmd->add_option("--out", f.out, "output path");
  cmd->add_option("--format", f.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--exact-spinor", f.exact_spinor, "multiply by the spinor overlap / 2");
  cmd->add_option("--shift-mode", f.shift_mode, "zero | fixed:<rad/s> | self-consistent");
  cmd->add_flag("--reproducible", f.reproducible, "write wall_time_s as 0");
}

io::ScenarioConfig build_config(const Flags &f, io::RunMode mode) {
  io::ScenarioConfig c = f.config.empty() ? io::ScenarioConfig{} : io::load_config(f.config);
  c.run.mode = mode;
  if (!f.sweep.empty())
    c.run.sweep = io::SweepSpec::parse(f.sweep);
  if (!f.out.empty())
    c.run.output = f.out;
  if (!f.format.empty())
    c.run.format = f.format;
  if (!f.shift_mode.empty())
    c.run.shift_mode = ShiftMode::parse(f.shift_mode);
  if (f.threads > 0)
    c.run.threads = f.threads;
  if (f.exact_spinor)
    c.run.exact_spinor = true;
  if (f.reproducible)
    c.run.reproducible = true;
  if (!f.markov_phase.empty())
    c.run.markov_phase_as_printed = f.markov_phase == "printed";
  c.validate();
  return c;
}

int run(const Flags &f, io::RunMode mode) {
  const auto config = build_config(f, mode);
  const auto records = io::run_sweep(config);
  const auto paths = io::emit(records, config.run.format, config.run.output);
  int worst = 0;
  for (const auto &r : records) {
    for (const auto &w : r.warnings)
      std::cerr << "warning [point " << r.index << "]: " << w << "\n";
    if (!r.ok) {
      std::cerr << "error [point " << r.index << "]: " << r.error << "\n";
      worst = std::max(worst, r.error_code);
    }
  }
  for (const auto &p : paths)
    std::cerr << "wrote " << p.string() << "\n";
  return worst;
}

// Rest-frame vacuum rate against the closed form. The mass is pushed to
// 1e30 ħω/c² so the recoil correction drops below the check.
int calibrate(const Flags &f) {
  auto config = build_config(f, io::RunMode::decay);
  config.medium = {};
  config.atom.velocity = {0.0, 0.0, 0.0};
  auto s = io::to_scaled(config);
  s.atom.mass = 1e30;
  s.options.shift = {};
  const auto r = decay_rate(s.atom, s.source, s.quadrature, s.options);
  const double g0 = free_space_rate(s.atom);
  const double dev = r.gamma_total / g0 - 1.0;
  const double w = s.units.frequency();
  std::printf("normalization_constant %.17g\n", kShellNormalization);
  std::printf("gamma_quadrature_si %.17g\n", r.gamma_total * w);
  std::printf("gamma_closed_form_si %.17g\n", g0 * w);
  std::printf("relative_deviation %.3e\n", dev);
  const bool pass = std::abs(dev) < 1e-9;
  std::printf("calibration %s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : 2;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Spontaneous emission of a moving two-level atom"};
  app.set_version_flag("--version", RELEMIT_VERSION);
  app.require_subcommand(1);

  Flags flags;
  auto *decay = app.add_subcommand("decay", "decay rate and its four bracket terms");
  auto *shift = app.add_subcommand("shift", "decay rate and Lamb shift");
  auto *dyn = app.add_subcommand("dynamics", "excited-state amplitude C(t)");
  auto *cal = app.add_subcommand("calibrate", "vacuum normalization check");
  for (auto *cmd : {decay, shift, dyn, cal})
    add_flags(cmd, flags);
  dyn->add_option("--markov-phase", flags.markov_phase, "printed or flipped")
      ->check(CLI::IsMember({"printed", "flipped"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*decay)
      return run(flags, io::RunMode::decay);
    if (*shift)
      return run(flags, io::RunMode::shift);
    if (*dyn)
      return run(flags, io::RunMode::dynamics);
    return calibrate(flags);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  }
}
