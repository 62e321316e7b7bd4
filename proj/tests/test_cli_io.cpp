#include "relemit/cli_io.hpp"
#include "relemit/errors.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace relemit;
using namespace relemit::io;
using doctest::Approx;

namespace {

const std::filesystem::path kConfigs = RELEMIT_CONFIG_DIR;
const std::filesystem::path kGolden = RELEMIT_GOLDEN_DIR;

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split(const std::string &line, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream s(line);
  std::string cell;
  while (std::getline(s, cell, sep))
    out.push_back(cell);
  return out;
}

std::vector<std::vector<std::string>> csv_rows(const std::string &text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream s(text);
  std::string line;
  while (std::getline(s, line))
    if (!line.empty())
      rows.push_back(split(line));
  return rows;
}

std::string field_of(const std::string &yaml) {
  try {
    parse_config(yaml);
  } catch (const ValidationError &e) {
    return e.field();
  }
  return {};
}

std::filesystem::path scratch(const std::string &name) {
  auto dir = std::filesystem::temp_directory_path() / "relemit_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

const char *kMinimal = "atom:\n  transition_frequency: 2.0e15\n  dipole: [0, 0, 1e-29]\n";

} // namespace

TEST_SUITE("cli_io") {

TEST_CASE("minimal config takes defaults") {
  const auto c = parse_config(kMinimal);
  CHECK(c.atom.transition_frequency == 2.0e15);
  CHECK(c.atom.dipole[2] == 1e-29);
  CHECK(c.atom.mass == AtomConfig{}.mass);
  CHECK(c.atom.velocity == std::array<double, 3>{0.0, 0.0, 0.0});
  CHECK(c.medium.kind == MediumKind::vacuum);
  CHECK(c.quadrature.n_polar == QuadratureSpec{}.n_polar);
  CHECK(c.quadrature.omega_cutoff == QuadratureSpec{}.omega_cutoff);
  CHECK(c.run.mode == RunMode::decay);
  CHECK(c.run.sweep.empty());
  CHECK(c.run.format == "csv");
  CHECK(c.run.threads == 1);

  const auto empty = parse_config("{}");
  CHECK(empty.atom.transition_frequency == AtomConfig{}.transition_frequency);
}

TEST_CASE("validation names the field") {
  CHECK(field_of("atom:\n  velocity: [3.3e8, 0, 0]\n") == "atom.velocity");
  CHECK(field_of("atom:\n  transition_frequency: -1\n") == "atom.transition_frequency");
  CHECK(field_of("atom:\n  mass: 0\n") == "atom.mass");
  CHECK(field_of("medium:\n  type: bulk\n  electric:\n    - {strength: 1e32, resonance: 2e16, "
                 "damping: -1e15}\n") == "medium.electric[0].damping");
  CHECK(field_of("medium:\n  type: bulk\n  electric:\n    - {strength: 1e32, resonance: 2e16}\n") ==
        "medium.electric[0].damping");
  CHECK(field_of("medium:\n  type: bulk\n") == "medium.electric");
  CHECK(field_of("quadrature:\n  n_polar: 1\n") == "quadrature.n_polar");
  CHECK(field_of("quadrature:\n  k_max: 0.5\n") == "quadrature.k_max");
  CHECK(field_of("quadrature:\n  omega_cutoff: abc\n") == "quadrature.omega_cutoff");
  CHECK(field_of("run:\n  mode: sing\n") == "run.mode");
  CHECK(field_of("run:\n  sweep: v_over_c=0:1.2:0.1\n") == "run.sweep");
  CHECK(field_of("run:\n  mode: dynamics\n") == "run.t_end");
  CHECK(field_of("run:\n  format: xml\n") == "run.format");
  CHECK(field_of("run:\n  shift_mode: fixed:x\n") == "run.shift_mode");
  CHECK(field_of(kMinimal).empty());
}

TEST_CASE("unknown keys are rejected") {
  CHECK(field_of("atom:\n  frequency: 1e15\n") == "atom.frequency");
  CHECK(field_of("solver: {}\n") == "solver");
  CHECK(field_of("run:\n  sweeps: k_max=2:3:1\n") == "run.sweeps");
}

TEST_CASE("syntax errors carry the position") {
  try {
    parse_config("atom:\n  dipole: [0, 0, 1e-29\n  mass: 1\n");
    FAIL("no parse error");
  } catch (const ParseError &e) {
    CHECK(e.line() >= 2);
    CHECK(e.column() >= 1);
  }
  CHECK_THROWS_AS(load_config(kConfigs / "missing.yaml"), IoError);
}

TEST_CASE("sweep specification") {
  const auto s = SweepSpec::parse("v_over_c=0:0.9:0.1");
  CHECK(s.field == "v_over_c");
  const auto v = s.values();
  REQUIRE(v.size() == 10);
  CHECK(v.front() == 0.0);
  CHECK(v.back() == Approx(0.9).epsilon(1e-15));
  CHECK(SweepSpec::parse(s.str()).values() == v);
  CHECK(SweepSpec::parse("k_max=2:2:1").values().size() == 1);
  CHECK_THROWS_AS(SweepSpec::parse("mass=1:2:1"), ValidationError);
  CHECK_THROWS_AS(SweepSpec::parse("v_over_c=0:0.5"), ValidationError);
  CHECK_THROWS_AS(SweepSpec::parse("v_over_c=0:0.5:-0.1"), ValidationError);
}

TEST_CASE("units round trip") {
  const auto c = load_config(kConfigs / "lossy_a.yaml");
  const auto s = to_scaled(c);
  CHECK(s.units.omega_a() == c.atom.transition_frequency);
  CHECK(s.atom.velocity.x() == Approx(0.5).epsilon(1e-12));
  const auto back = atom_to_si(s.atom, s.units);
  for (int i = 0; i < 3; ++i) {
    CHECK(back.dipole[i] == Approx(c.atom.dipole[i]).epsilon(1e-12));
    CHECK(back.velocity[i] == Approx(c.atom.velocity[i]).epsilon(1e-12));
  }
  CHECK(back.mass == Approx(c.atom.mass).epsilon(1e-12));
  CHECK(back.transition_frequency == Approx(c.atom.transition_frequency).epsilon(1e-15));

  const auto &bulk = std::get<SmoothBulk>(s.source);
  const auto &e = bulk.medium.electric_poles().front();
  CHECK(e.strength == Approx(0.5).epsilon(1e-12));
  CHECK(e.resonance == Approx(1.3).epsilon(1e-12));
  CHECK(e.damping == Approx(0.2).epsilon(1e-12));
  // Lyman-α dipole scale.
  CHECK(s.units.dipole() == Approx(1.0236668e-26).epsilon(1e-6));
}

TEST_CASE("sweep point") {
  auto c = load_config(kConfigs / "vacuum_sweep.yaml");
  const auto p = sweep_point(c, 0.5);
  CHECK(p.atom.velocity[0] == Approx(0.5 * si::c).epsilon(1e-15));
  CHECK(p.atom.velocity[1] == 0.0);
  c.atom.velocity = {0.0, 0.0, 0.0};
  CHECK(sweep_point(c, 0.3).atom.velocity[2] == Approx(0.3 * si::c).epsilon(1e-15));
  c.run.sweep = SweepSpec::parse("omega_cutoff=3:5:1");
  CHECK(sweep_point(c, 4.0).quadrature.omega_cutoff == 4.0);
}

TEST_CASE("velocity sweep gives one record per point") {
  auto c = load_config(kConfigs / "vacuum_sweep.yaml");
  c.run.reproducible = true;
  const auto records = run_sweep(c);
  REQUIRE(records.size() == 10);
  const double gamma0 = records.front().emission->gamma_total;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto &r = records[i];
    REQUIRE(r.ok);
    CHECK(r.index == i);
    CHECK(r.v_over_c == Approx(0.1 * static_cast<double>(i)).epsilon(1e-12));
    // Γγ is constant up to the hydrogen recoil, O(ħω_A/Mc²) ~ 1e-8.
    CHECK(r.emission->gamma_total * r.gamma_lorentz == Approx(gamma0).epsilon(1e-7));
  }
  const auto rows = csv_rows(to_csv(records));
  REQUIRE(rows.size() == 11);
  CHECK(rows.front() == kCsvColumns);
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i].back() == "0");
}

TEST_CASE("single point without a sweep") {
  auto c = load_config(kConfigs / "vacuum_rest.yaml");
  CHECK(c.run.sweep.empty());
  const auto records = run_sweep(c);
  REQUIRE(records.size() == 1);
  CHECK(records.front().ok);
}

TEST_CASE("vacuum rest row") {
  auto c = parse_config(kMinimal);
  c.atom.mass = 1.0;
  const auto records = run_sweep(c);
  REQUIRE(records.size() == 1);
  const auto rows = csv_rows(to_csv(records));
  REQUIRE(rows.size() == 2);
  const auto &row = rows[1];
  auto col = [&](const std::string &name) {
    const auto it = std::find(kCsvColumns.begin(), kCsvColumns.end(), name);
    return std::stod(row[static_cast<std::size_t>(it - kCsvColumns.begin())]);
  };
  const double gamma = col("decay_rate_si");
  const double d = 1e-29, w = 2.0e15;
  const double gamma0 = w * w * w * d * d / (3.0 * std::numbers::pi * si::epsilon0 * si::hbar *
                                             si::c * si::c * si::c);
  CHECK(gamma == Approx(gamma0).epsilon(1e-9));
  CHECK(col("v_over_c") == 0.0);
  CHECK(col("gamma_lorentz") == 1.0);
  CHECK(col("term_motion_left") == 0.0);
  CHECK(col("term_cross") == 0.0);
  CHECK(std::abs(col("term_recoil_right")) < 1e-15 * gamma);
  CHECK(std::isnan(col("lamb_shift_si")));
  CHECK(col("omega_cutoff") == Approx(QuadratureSpec{}.omega_cutoff * w).epsilon(1e-15));
}

TEST_CASE("a failing point does not stop the sweep") {
  auto c = parse_config(kMinimal);
  c.run.mode = RunMode::shift;
  c.run.sweep = SweepSpec::parse("omega_cutoff=1.005:2.005:1");
  c.run.reproducible = true;
  const auto records = run_sweep(c);
  REQUIRE(records.size() == 2);
  CHECK_FALSE(records[0].ok);
  CHECK(records[0].error_code == 1);
  CHECK(records[0].error.find("omega_cutoff") != std::string::npos);
  CHECK(records[1].ok);
  CHECK(records[1].emission->has_lamb_shift);

  const auto path = scratch("mixed.csv");
  const auto written = emit(records, "csv", path);
  REQUIRE(written.size() == 1);
  const auto rows = csv_rows(slurp(path));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][2] == "nan");
  CHECK(rows[2][2] != "nan");
}

TEST_CASE("JSON round trip") {
  auto c = load_config(kConfigs / "shift_rest.yaml");
  c.run.reproducible = true;
  const auto records = run_sweep(c);
  const std::string text = to_json(records);
  const auto back = records_from_json(text);
  REQUIRE(back.size() == records.size());
  CHECK(to_json(back) == text);
  const auto &a = records.front();
  const auto &b = back.front();
  CHECK(b.emission->gamma_total == a.emission->gamma_total);
  CHECK(b.emission->lamb_shift == a.emission->lamb_shift);
  CHECK(b.emission->gamma_terms == a.emission->gamma_terms);
  CHECK(b.config.atom.dipole == a.config.atom.dipole);
  CHECK(b.config.quadrature.omega_cutoff == a.config.quadrature.omega_cutoff);
  CHECK(b.units.dipole == a.units.dipole);
  CHECK(b.version == a.version);

  const auto j = nlohmann::json::parse(text);
  CHECK(j.at("records").size() == 1);
}

TEST_CASE("CSV header matches the golden file") {
  std::string golden = slurp(kGolden / "decay_columns.csv");
  const auto csv = to_csv({});
  CHECK(csv == golden);
}

TEST_CASE("trajectory schema") {
  AmplitudeTrajectory t;
  t.times = {0.0, 1e-15, 2e-15};
  t.amplitude = {1.0, cplx(0.5, 0.25), cplx(0.25, -0.5)};
  t.markov = t.amplitude;
  t.survival = {1.0, 0.3125, 0.3125};
  t.markov_survival = t.survival;
  const auto rows = csv_rows(trajectory_csv(t));
  REQUIRE(rows.size() == 4);
  CHECK(rows.front() == kTrajectoryColumns);
  CHECK(std::stod(rows[2][1]) == 0.5);
  CHECK(std::stod(rows[3][2]) == -0.5);
  CHECK(csv_rows(trajectory_csv(t, 2)).size() == 3);
}

TEST_CASE("format_double keeps 17 digits") {
  for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -1.6e-19, 5e-324})
    CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("thread count does not change the output") {
  auto c = load_config(kConfigs / "near_vacuum.yaml");
  c.run.reproducible = true;
  std::string first;
  for (int threads : {1, 4, 8}) {
    c.run.threads = threads;
    const auto csv = to_csv(run_sweep(c));
    if (first.empty())
      first = csv;
    CHECK(csv == first);
  }
}

TEST_CASE("unwritable output") {
  auto c = parse_config(kMinimal);
  const auto records = run_sweep(c);
  CHECK_THROWS_AS(emit(records, "csv", "/nonexistent_dir/x/out.csv"), IoError);
  const auto path = scratch("out.json");
  CHECK(emit(records, "json", path).front() == path);
  CHECK(records_from_json(slurp(path)).size() == 1);
}

}
