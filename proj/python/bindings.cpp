#include "relemit/cli_io.hpp"
#include "relemit/emission.hpp"
#include "relemit/errors.hpp"
#include "relemit/kinematics.hpp"
#include "relemit/material.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace relemit;

namespace {

std::vector<LorentzPole> poles_from(const std::vector<std::array<double, 3>> &raw) {
  std::vector<LorentzPole> out;
  for (const auto &p : raw)
    out.push_back({p[0], p[1], p[2]});
  return out;
}

GreenSource source_from(const std::vector<std::array<double, 3>> &electric,
                        const std::vector<std::array<double, 3>> &magnetic) {
  if (electric.empty() && magnetic.empty())
    return VacuumShell{};
  return SmoothBulk(DispersiveMedium(poles_from(electric), poles_from(magnetic)));
}

AtomState atom_from(const Vec3 &dipole, const Vec3 &velocity, double mass) {
  AtomState a;
  a.dipole = dipole;
  a.velocity = velocity;
  a.mass = mass;
  return a;
}

QuadratureSpec quad_from(const py::dict &kw) {
  QuadratureSpec q;
  for (const auto &[key, value] : kw) {
    const auto k = key.cast<std::string>();
    if (k == "n_polar") q.n_polar = value.cast<int>();
    else if (k == "n_azimuthal") q.n_azimuthal = value.cast<int>();
    else if (k == "radial_nodes") q.radial_nodes = value.cast<int>();
    else if (k == "k_max") q.k_max = value.cast<double>();
    else if (k == "omega_cutoff") q.omega_cutoff = value.cast<double>();
    else if (k == "pv_window") q.pv_window = value.cast<double>();
    else if (k == "rel_tol") q.rel_tol = value.cast<double>();
    else if (k == "angular_tol") q.angular_tol = value.cast<double>();
    else if (k == "max_polar_segments") q.max_polar_segments = value.cast<int>();
    else throw py::key_error("unknown quadrature field " + k);
  }
  return q;
}

} // namespace

PYBIND11_MODULE(_relemit, m) {
  m.doc() = "Decay rate and level shift of a moving two-level atom in dispersive media";
  m.attr("__version__") = RELEMIT_VERSION;

  static py::exception<Error> base(m, "RelemitError", PyExc_RuntimeError);
  static py::exception<ValidationError> validation(m, "ValidationError", base.ptr());
  static py::exception<ConvergenceError> convergence(m, "ConvergenceError", base.ptr());
  static py::exception<ConfigurationError> configuration(m, "ConfigurationError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p)
        std::rethrow_exception(p);
    } catch (const ValidationError &e) {
      py::set_error(validation, e.what());
    } catch (const ConvergenceError &e) {
      py::set_error(convergence, e.what());
    } catch (const ConfigurationError &e) {
      py::set_error(configuration, e.what());
    } catch (const Error &e) {
      py::set_error(base, e.what());
    }
  });

  m.def("lorentz_gamma", [](const Vec3 &v) { return lorentz_gamma(v); }, py::arg("velocity"));
  m.def("spinor_overlap_factor", &spinor_overlap_factor, py::arg("v1"), py::arg("v2"));
  m.def(
      "permittivity",
      [](const std::vector<std::array<double, 3>> &electric, double omega) {
        return permittivity(DispersiveMedium(poles_from(electric), {}), omega);
      },
      py::arg("electric"), py::arg("omega"));

  m.def(
      "decay_rate",
      [](const Vec3 &dipole, const Vec3 &velocity, double mass,
         const std::vector<std::array<double, 3>> &electric,
         const std::vector<std::array<double, 3>> &magnetic, const std::string &shift_mode,
         bool exact_spinor, int threads, const py::kwargs &kw) {
        EmissionOptions opts;
        opts.shift = ShiftMode::parse(shift_mode);
        opts.exact_spinor = exact_spinor;
        opts.threads = threads;
        const auto r = decay_rate(atom_from(dipole, velocity, mass),
                                  source_from(electric, magnetic), quad_from(kw), opts);
        py::dict out;
        out["gamma"] = r.gamma_total;
        out["terms"] = r.gamma_terms;
        out["error_estimate"] = r.quadrature_error_estimate;
        out["delta_omega"] = r.delta_omega_used;
        if (r.has_lamb_shift)
          out["lamb_shift"] = r.lamb_shift;
        return out;
      },
      py::arg("dipole"), py::arg("velocity") = Vec3::Zero(), py::arg("mass") = 1e9,
      py::arg("electric") = std::vector<std::array<double, 3>>{},
      py::arg("magnetic") = std::vector<std::array<double, 3>>{},
      py::arg("shift_mode") = "zero", py::arg("exact_spinor") = false, py::arg("threads") = 1,
      "Decay rate in scaled units (ω_A = c = ħ = ε₀ = 1). Poles are "
      "(strength, resonance, damping); no poles selects vacuum. Extra keyword "
      "arguments set quadrature fields.");

  m.def(
      "lamb_shift",
      [](const Vec3 &dipole, const Vec3 &velocity, double mass,
         const std::vector<std::array<double, 3>> &electric,
         const std::vector<std::array<double, 3>> &magnetic, const py::kwargs &kw) {
        const auto r = lamb_shift(atom_from(dipole, velocity, mass),
                                  source_from(electric, magnetic), quad_from(kw));
        py::dict out;
        out["shift"] = r.value;
        out["terms"] = r.terms;
        out["error_estimate"] = r.error_estimate;
        out["omega_cutoff"] = r.omega_cutoff;
        return out;
      },
      py::arg("dipole"), py::arg("velocity") = Vec3::Zero(), py::arg("mass") = 1e9,
      py::arg("electric") = std::vector<std::array<double, 3>>{},
      py::arg("magnetic") = std::vector<std::array<double, 3>>{});

  m.def(
      "run_config_text",
      [](const std::string &yaml) {
        const auto config = io::parse_config(yaml);
        std::vector<io::RunRecord> records;
        {
          py::gil_scoped_release release;
          records = io::run_sweep(config);
        }
        return io::to_json(records);
      },
      py::arg("yaml"), "Runs a YAML scenario and returns the JSON document.");
}
