// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: relemit_acceptance <relemit executable> <config dir> [report file]

#include "oracle.hpp"

#include "relemit/cli_io.hpp"
#include "relemit/dynamics.hpp"
#include "relemit/emission.hpp"
#include "relemit/kinematics.hpp"
#include "relemit/material.hpp"
#include "relemit/tensor_green.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace relemit;

namespace {

constexpr double kPi = std::numbers::pi;

fs::path g_cli;
fs::path g_configs;
fs::path g_work;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string &args) {
  const std::string cmd = "\"" + g_cli.string() + "\" " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// decay_rate_si column of the first data row.
double csv_rate(const fs::path &p) {
  std::istringstream in(slurp(p));
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  std::istringstream h(header), r(row);
  std::string name, cell;
  while (std::getline(h, name, ',') && std::getline(r, cell, ','))
    if (name == "decay_rate_si")
      return std::strtod(cell.c_str(), nullptr);
  return std::nan("");
}

double gamma0_si(const io::AtomConfig &a) {
  const double d2 = a.dipole[0] * a.dipole[0] + a.dipole[1] * a.dipole[1] +
                    a.dipole[2] * a.dipole[2];
  const double w = a.transition_frequency;
  return w * w * w * d2 / (3.0 * kPi * si::epsilon0 * si::hbar * si::c * si::c * si::c);
}

std::vector<oracle::Pole> oracle_poles(const std::vector<LorentzPole> &poles) {
  std::vector<oracle::Pole> out;
  for (const auto &p : poles)
    out.push_back({p.strength, p.resonance, p.damping});
  return out;
}

const DispersiveMedium &medium_of(const io::ScaledScenario &s) {
  return std::get<SmoothBulk>(s.source).medium;
}

Outcome vacuum_rest_rate() {
  // Analytic shell path.
  const auto shell_cfg = io::load_config(g_configs / "vacuum_rest.yaml");
  const auto shell_out = g_work / "c1_shell.csv";
  const auto t0 = std::chrono::steady_clock::now();
  const int rc1 = run_cli("decay --config \"" + (g_configs / "vacuum_rest.yaml").string() +
                          "\" --out \"" + shell_out.string() + "\" --reproducible");
  const double t_shell =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double shell_dev = std::abs(csv_rate(shell_out) / gamma0_si(shell_cfg.atom) - 1.0);

  // Quadrature path: weakly polarizable bulk (|χ| ~ 1e-4) at rest.
  const auto quad_cfg = io::load_config(g_configs / "near_vacuum.yaml");
  const auto quad_out = g_work / "c1_quad.csv";
  const auto t1 = std::chrono::steady_clock::now();
  const int rc2 = run_cli("decay --config \"" + (g_configs / "near_vacuum.yaml").string() +
                          "\" --sweep v_over_c=0:0:1 --out \"" + quad_out.string() +
                          "\" --reproducible");
  const double t_quad =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
  const double quad_dev = std::abs(csv_rate(quad_out) / gamma0_si(quad_cfg.atom) - 1.0);

  const bool pass = rc1 == 0 && rc2 == 0 && shell_dev < 1e-9 && quad_dev < 1e-3 &&
                    t_shell < 10.0 && t_quad < 10.0;
  return {pass, fmt("shell |dev| %.2e (%.2f s), quadrature |dev| %.2e (%.2f s)", shell_dev,
                    t_shell, quad_dev, t_quad)};
}

Outcome relativistic_dilation() {
  AtomState atom = io::to_scaled(io::ScenarioConfig{}).atom;
  const double d = atom.dipole.norm();
  const double gamma0 = d * d / (3.0 * kPi);
  const QuadratureSpec quad;
  double worst = 0.0;
  for (double beta : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99})
    for (const Vec3 &dir : {Vec3::UnitX(), Vec3::UnitZ()}) {
      atom.velocity = Vec3(beta, 0.0, 0.0);
      atom.dipole = d * dir;
      const double g = decay_rate(atom, VacuumShell{}, quad).gamma_total;
      worst = std::max(worst, std::abs(g * lorentz_gamma(atom.velocity) / gamma0 - 1.0));
    }
  return {worst < 1e-3, fmt("max |Γγ/Γ₀ − 1| = %.2e over 6 speeds x 2 orientations", worst)};
}

Outcome spinor_factor() {
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> speed(0.0, 0.999);
  int exact = 0;
  for (int i = 0; i < 1000; ++i) {
    Vec3 v(normal(rng), normal(rng), normal(rng));
    v = speed(rng) * v.normalized();
    if (spinor_overlap_factor(v, v) == 2.0)
      ++exact;
  }
  const double ortho = spinor_overlap_factor(Vec3(0.5, 0.0, 0.0), Vec3(0.0, 0.5, 0.0));
  const bool pass = exact == 1000 && std::abs(ortho - 1.75) < 1e-14;
  return {pass, fmt("%d/1000 equal-velocity pairs exactly 2, orthogonal 0.5c = %.17g", exact,
                    ortho)};
}

Outcome fluctuation_identity() {
  double worst = 0.0;
  for (const char *name : {"lossy_a.yaml", "lossy_b.yaml"}) {
    const auto s = io::to_scaled(io::load_config(g_configs / name));
    const auto &m = medium_of(s);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j)
        worst = std::max(worst,
                         fluctuation_identity_residual(m, 0.05 + 0.45 * i, 0.1 + 0.3 * j));
  }
  return {worst < 1e-10, fmt("max residual %.2e on 10x10 (k, ω) for lossy_a, lossy_b", worst)};
}

Outcome kramers_kronig() {
  const auto grid = log_grid(1e-4, 1e4, 10000);
  double worst = 0.0;
  std::string parts;
  for (const char *name : {"lossy_a.yaml", "lossy_b.yaml", "near_vacuum.yaml"}) {
    const auto s = io::to_scaled(io::load_config(g_configs / name));
    const double r = kramers_kronig_residual(medium_of(s), grid);
    worst = std::max(worst, r);
    parts += fmt(" %s %.2e", name, r);
  }
  return {worst < 1e-3, "residuals" + parts};
}

Outcome markov_consistency() {
  const double rate = 1e-4, lambda = 2.0;
  AtomState atom;
  atom.mass = 1e12;
  atom.dipole = Vec3(0.0, 0.0, std::sqrt(3.0 * kPi * rate));
  QuadratureSpec quad;
  quad.omega_cutoff = lambda;
  const double h = 2.0 * kPi / 100.0;
  const auto steps = static_cast<std::size_t>(std::ceil(5.0 / rate / h));
  const auto kernel = build_memory_kernel(atom, VacuumShell{}, h, steps + 1, quad);
  const auto t = evolve_amplitude(kernel, h * static_cast<double>(steps), h);
  double worst = 0.0;
  for (std::size_t i = 0; i < t.times.size(); ++i)
    worst = std::max(worst, std::abs(t.survival[i] - std::exp(-kernel.markov_rate * t.times[i])));
  return {worst < 0.05,
          fmt("Γ = %.6g, %zu steps, max ||C|² − e^{−Γt}| = %.2e", kernel.markov_rate, steps, worst)};
}

Outcome monte_carlo_oracle() {
  const auto s = io::to_scaled(io::load_config(g_configs / "lossy_a.yaml"));
  const auto &m = medium_of(s);
  const auto r = decay_rate(s.atom, s.source, s.quadrature);
  const auto mc = oracle::monte_carlo_rate(oracle_poles(m.electric_poles()),
                                           oracle_poles(m.magnetic_poles()), s.atom.dipole,
                                           s.atom.velocity, s.atom.mass,
                                           s.quadrature.k_max, 10000000, 7);
  const double sigma = std::hypot(mc.sigma, r.quadrature_error_estimate * r.gamma_total);
  const double z = std::abs(r.gamma_total - mc.mean) / sigma;
  return {z < 3.0, fmt("quadrature %.8e, MC %.8e ± %.2e (%.2f σ)", r.gamma_total, mc.mean,
                       mc.sigma, z)};
}

Outcome motion_sensitivity() {
  const auto s = io::to_scaled(io::load_config(g_configs / "lossy_a.yaml"));
  AtomState atom = s.atom;
  const double d = atom.dipole.norm();
  const Vec3 along = atom.velocity.normalized();
  atom.dipole = d * along;
  const auto par = decay_rate(atom, s.source, s.quadrature);
  atom.dipole = d * along.unitOrthogonal();
  const auto perp = decay_rate(atom, s.source, s.quadrature);
  const double diff = std::abs(par.gamma_total - perp.gamma_total) / perp.gamma_total;
  const double err = std::max(par.quadrature_error_estimate, perp.quadrature_error_estimate);
  return {diff > 10.0 * err, fmt("|Γ∥ − Γ⊥|/Γ⊥ = %.3e, error estimate %.2e", diff, err)};
}

Outcome determinism() {
  bool same = true;
  std::string detail;
  for (const char *name : {"vacuum_sweep.yaml", "near_vacuum.yaml"}) {
    std::string first;
    for (int threads : {1, 4, 8}) {
      const auto out = g_work / fmt("c9_%d_%s.csv", threads, name);
      const int rc = run_cli("decay --config \"" + (g_configs / name).string() + "\" --out \"" +
                             out.string() + "\" --threads " + std::to_string(threads) +
                             " --reproducible");
      const std::string text = slurp(out);
      if (rc != 0 || text.empty())
        same = false;
      if (first.empty())
        first = text;
      else if (text != first)
        same = false;
    }
    detail += fmt(" %s %zu bytes", name, first.size());
  }
  return {same, "1/4/8 threads byte-identical:" + detail};
}

} // namespace

int main(int argc, char **argv) {
  if (argc != 3 && argc != 4) {
    std::fprintf(stderr, "usage: %s <relemit executable> <config dir> [report file]\n",
                 argv[0]);
    return 2;
  }
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  g_cli = argv[1];
  g_configs = argv[2];
  g_work = fs::temp_directory_path() / "relemit_acceptance";
  fs::create_directories(g_work);

  struct Criterion {
    int id;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, 20.0, vacuum_rest_rate},     {2, 60.0, relativistic_dilation},
      {3, 1.0, spinor_factor},         {4, 1.0, fluctuation_identity},
      {5, 30.0, kramers_kronig},       {6, 300.0, markov_consistency},
      {7, 600.0, monte_carlo_oracle},  {8, 600.0, motion_sensitivity},
      {9, 600.0, determinism},
  };

  std::ofstream report;
  if (argc == 4)
    report.open(argv[3]);
  auto line = [&](const std::string &text) {
    std::fputs(text.c_str(), stdout);
    if (report)
      report << text << std::flush;
  };

  int failures = 0;
  for (const auto &c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && dt < c.limit_s;
    if (!pass)
      ++failures;
    line(fmt("criterion %d: %s  %s  [%.2f s, limit %.0f s]\n", c.id, pass ? "PASS" : "FAIL",
             o.detail.c_str(), dt, c.limit_s));
  }
  line(fmt("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
           criteria.size()));
  return failures == 0 ? 0 : 1;
}
