#pragma once

#include "relemit/types.hpp"

#include <span>
#include <vector>

namespace relemit {

// One damped oscillator of the response function
//   χ(ω) = strength / (resonance² − ω² − i·damping·ω).
// Units follow the caller (scaled units inside the library).
struct LorentzPole {
  double strength = 0.0;  // (rad/s)²
  double resonance = 1.0; // rad/s
  double damping = 0.1;   // rad/s

  // Throws ValidationError unless resonance > 0, damping > 0, strength >= 0.
  void validate() const;
};

// Sum-of-Lorentz-poles susceptibility at a signed real frequency.
// Negative ω is accepted so χ(−ω) = χ(ω)* can be checked directly.
cplx lorentz_susceptibility(std::span<const LorentzPole> poles, double omega);

// Causal magnetodielectric medium, immutable after construction.
//   ε(ω) = 1 + χ_e(ω),   μ(ω)⁻¹ = 1 − χ_m(ω).
class DispersiveMedium {
public:
  DispersiveMedium() = default;
  DispersiveMedium(std::vector<LorentzPole> electric,
                   std::vector<LorentzPole> magnetic);

  static DispersiveMedium vacuum() { return {}; }

  const std::vector<LorentzPole> &electric_poles() const noexcept {
    return electric_;
  }
  const std::vector<LorentzPole> &magnetic_poles() const noexcept {
    return magnetic_;
  }

  cplx chi_e(double omega) const;
  cplx chi_m(double omega) const;

  // True when at least one pole with non-zero strength is present, which
  // (with damping > 0) makes Im ε or Im μ strictly positive for ω > 0.
  bool is_lossy() const noexcept;

private:
  std::vector<LorentzPole> electric_;
  std::vector<LorentzPole> magnetic_;
};

// ε(ω) for ω > 0; DomainError otherwise.
cplx permittivity(const DispersiveMedium &medium, double omega);

// μ(ω) = 1/(1 − χ_m(ω)) for ω > 0; DomainError otherwise.
cplx permeability(const DispersiveMedium &medium, double omega);
cplx permeability_from_chi(cplx chi_m);

// Huttner–Barnett coupling functions, obtained by Fourier-inverting
//   χ_e(t) = θ(t) (1/ε₀) ∫₀^∞ dω g_e²(ω) sin(ωt)/ω.
// With χ(ω) = ∫₀^∞ dt χ(t) e^{iωt} and
//   ∫₀^∞ dt sin(ω′t) e^{iωt} = ω′/(ω′² − ω²) + (iπ/2)[δ(ω − ω′) − δ(ω + ω′)],
// the imaginary part picks out Im χ_e(ω) = π g_e²(ω)/(2ε₀ω) for ω > 0, so
//   g_e(ω) = sqrt(2 ε₀ ω Im χ_e(ω) / π).
// The magnetic relation carries μ₀ in place of 1/ε₀:
//   g_m(ω) = sqrt(2 ω Im χ_m(ω) / (π μ₀)).
// Both default to scaled units (ε₀ = μ₀ = 1). ModelError if Im χ < 0.
double coupling_from_electric_chi(double im_chi_e, double omega,
                                  double epsilon0 = 1.0);
double coupling_from_magnetic_chi(double im_chi_m, double omega,
                                  double mu0 = 1.0);
double coupling_electric(const DispersiveMedium &medium, double omega,
                         double epsilon0 = 1.0);
double coupling_magnetic(const DispersiveMedium &medium, double omega,
                         double mu0 = 1.0);

// Causality audit on a sampled grid: for χ_e and χ_m separately,
//   max_i |Re χ(ω_i) − (2/π) P∫₀^∞ ω′ Im χ(ω′)/(ω′² − ω_i²) dω′| / max_i |χ(ω_i)|,
// with the principal-value integral evaluated from the grid samples only.
// Returns the larger of the two. ConfigurationError if the grid has fewer
// than 4 points inside any pole's damping width, or is not increasing.
double kramers_kronig_residual(const DispersiveMedium &medium,
                               std::span<const double> omega_grid);

// Logarithmic grid helper used by the tests and the CLI audit.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

} // namespace relemit
