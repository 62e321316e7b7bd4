#include "relemit/material.hpp"

#include "relemit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace relemit {

void LorentzPole::validate() const {
  if (!(resonance > 0.0))
    throw ValidationError("resonance", "must be > 0, got " + std::to_string(resonance));
  if (!(damping > 0.0))
    throw ValidationError("damping",
                          "must be > 0 (passivity), got " + std::to_string(damping));
  if (!(strength >= 0.0))
    throw ValidationError("strength",
                          "must be >= 0 (passivity), got " + std::to_string(strength));
}

cplx lorentz_susceptibility(std::span<const LorentzPole> poles, double omega) {
  cplx chi{0.0, 0.0};
  for (const auto &p : poles)
    chi += p.strength /
           cplx(p.resonance * p.resonance - omega * omega, -p.damping * omega);
  return chi;
}

DispersiveMedium::DispersiveMedium(std::vector<LorentzPole> electric,
                                   std::vector<LorentzPole> magnetic)
    : electric_(std::move(electric)), magnetic_(std::move(magnetic)) {
  for (const auto &p : electric_)
    p.validate();
  for (const auto &p : magnetic_)
    p.validate();
}

cplx DispersiveMedium::chi_e(double omega) const {
  return lorentz_susceptibility(electric_, omega);
}

cplx DispersiveMedium::chi_m(double omega) const {
  return lorentz_susceptibility(magnetic_, omega);
}

bool DispersiveMedium::is_lossy() const noexcept {
  auto active = [](const LorentzPole &p) { return p.strength > 0.0; };
  return std::any_of(electric_.begin(), electric_.end(), active) ||
         std::any_of(magnetic_.begin(), magnetic_.end(), active);
}

namespace {

void require_positive_frequency(double omega, const char *what) {
  if (!(omega > 0.0))
    throw DomainError(std::string(what) + ": omega must be > 0, got " +
                      std::to_string(omega));
}

} // namespace

cplx permittivity(const DispersiveMedium &medium, double omega) {
  require_positive_frequency(omega, "permittivity");
  return 1.0 + medium.chi_e(omega);
}

cplx permeability_from_chi(cplx chi_m) { return 1.0 / (1.0 - chi_m); }

cplx permeability(const DispersiveMedium &medium, double omega) {
  require_positive_frequency(omega, "permeability");
  return permeability_from_chi(medium.chi_m(omega));
}

double coupling_from_electric_chi(double im_chi_e, double omega, double epsilon0) {
  require_positive_frequency(omega, "coupling_electric");
  if (im_chi_e < 0.0)
    throw ModelError("coupling_electric: Im chi_e < 0 (non-passive medium)");
  return std::sqrt(2.0 * epsilon0 * omega * im_chi_e / std::numbers::pi);
}

double coupling_from_magnetic_chi(double im_chi_m, double omega, double mu0) {
  require_positive_frequency(omega, "coupling_magnetic");
  if (im_chi_m < 0.0)
    throw ModelError("coupling_magnetic: Im chi_m < 0 (non-passive medium)");
  return std::sqrt(2.0 * omega * im_chi_m / (std::numbers::pi * mu0));
}

double coupling_electric(const DispersiveMedium &medium, double omega,
                         double epsilon0) {
  require_positive_frequency(omega, "coupling_electric");
  return coupling_from_electric_chi(medium.chi_e(omega).imag(), omega, epsilon0);
}

double coupling_magnetic(const DispersiveMedium &medium, double omega, double mu0) {
  require_positive_frequency(omega, "coupling_magnetic");
  return coupling_from_magnetic_chi(medium.chi_m(omega).imag(), omega, mu0);
}

namespace {

// Principal-value Hilbert transform of sampled Im χ, evaluated at every node.
// The singular part is removed with P∫₀^∞ dω′/(ω′² − ω²) = 0, so the
// remaining integrand [g(ω′) − g(ω)]/(ω′² − ω²), g = ω Im χ, is regular and
// integrated by the trapezoid rule on the grid. Below the grid g ∝ ω²
// (Im χ linear at low frequency), above it g ∝ ω⁻² (Lorentz tail); both
// end pieces are done in closed form.
std::vector<double> hilbert_real_part(std::span<const double> w,
                                      std::span<const double> im) {
  const std::size_t n = w.size();
  std::vector<double> g(n), dg(n), out(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = w[i] * im[i];
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0)
      dg[i] = (g[1] - g[0]) / (w[1] - w[0]);
    else if (i + 1 == n)
      dg[i] = (g[n - 1] - g[n - 2]) / (w[n - 1] - w[n - 2]);
    else {
      // Second-order derivative on a non-uniform stencil.
      const double h0 = w[i] - w[i - 1];
      const double h1 = w[i + 1] - w[i];
      dg[i] = (h0 * h0 * g[i + 1] - h1 * h1 * g[i - 1] + (h1 * h1 - h0 * h0) * g[i]) /
              (h0 * h1 * (h0 + h1));
    }
  }
  const double w_lo = w.front();
  const double w_hi = w.back();
  const double head_coeff = g.front() / (w_lo * w_lo);
  const double tail_coeff = g.back() * w_hi * w_hi;

  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w[i];
    const double gi = g[i];
    auto integrand = [&](std::size_t j) {
      if (j == i)
        return dg[i] / (2.0 * wi);
      return (g[j] - gi) / (w[j] * w[j] - wi * wi);
    };
    std::vector<double> pieces(n - 1);
    double prev = integrand(0);
    for (std::size_t j = 1; j < n; ++j) {
      const double cur = integrand(j);
      pieces[j - 1] = 0.5 * (prev + cur) * (w[j] - w[j - 1]);
      prev = cur;
    }
    double total = 0.0;
    for (double p : pieces)
      total += p;

    // Head: ∫₀^{w_lo} (a ω′² − g_i)/(ω′² − ω_i²) = a w_lo + (a ω_i² − g_i) L.
    total += head_coeff * w_lo;
    if (i != 0)
      total += (head_coeff * wi * wi - gi) *
               std::log(std::abs((w_lo - wi) / (w_lo + wi))) / (2.0 * wi);
    // Tail: ∫_{w_hi}^∞ (b/ω′² − g_i)/(ω′² − ω_i²).
    total -= tail_coeff / (wi * wi * w_hi);
    if (i + 1 != n)
      total += (tail_coeff / (wi * wi) - gi) *
               std::log((w_hi + wi) / (w_hi - wi)) / (2.0 * wi);
    out[i] = 2.0 / std::numbers::pi * total;
  }
  return out;
}

void check_resolution(std::span<const LorentzPole> poles,
                      std::span<const double> grid) {
  for (const auto &p : poles) {
    if (p.strength == 0.0)
      continue;
    const double lo = p.resonance - 0.5 * p.damping;
    const double hi = p.resonance + 0.5 * p.damping;
    const auto first = std::lower_bound(grid.begin(), grid.end(), lo);
    const auto last = std::upper_bound(grid.begin(), grid.end(), hi);
    if (last - first < 4)
      throw ConfigurationError(
          "kramers_kronig_residual: fewer than 4 grid points per damping width "
          "at resonance " + std::to_string(p.resonance));
    if (!(grid.front() < 0.5 * p.resonance) || !(grid.back() > 2.0 * p.resonance))
      throw ConfigurationError(
          "kramers_kronig_residual: grid does not span well past resonance " +
          std::to_string(p.resonance));
  }
}

double residual_for(std::span<const LorentzPole> poles, std::span<const double> w) {
  const std::size_t n = w.size();
  std::vector<cplx> chi(n);
  std::vector<double> im(n);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    chi[i] = lorentz_susceptibility(poles, w[i]);
    im[i] = chi[i].imag();
    scale = std::max(scale, std::abs(chi[i]));
  }
  if (scale == 0.0)
    return 0.0;
  const auto re = hilbert_real_part(w, im);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    worst = std::max(worst, std::abs(chi[i].real() - re[i]));
  return worst / scale;
}

} // namespace

double kramers_kronig_residual(const DispersiveMedium &medium,
                               std::span<const double> omega_grid) {
  if (omega_grid.size() < 3)
    throw ConfigurationError("kramers_kronig_residual: grid needs >= 3 points");
  for (std::size_t i = 0; i < omega_grid.size(); ++i) {
    if (!(omega_grid[i] > 0.0) || (i > 0 && !(omega_grid[i] > omega_grid[i - 1])))
      throw ConfigurationError(
          "kramers_kronig_residual: grid must be positive and strictly increasing");
  }
  check_resolution(medium.electric_poles(), omega_grid);
  check_resolution(medium.magnetic_poles(), omega_grid);
  return std::max(residual_for(medium.electric_poles(), omega_grid),
                  residual_for(medium.magnetic_poles(), omega_grid));
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = lo * std::exp(step * static_cast<double>(i));
  g.back() = hi;
  return g;
}

} // namespace relemit
