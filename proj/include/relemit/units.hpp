#pragma once

// Scaled unit system used by every computational module:
//   ω_A = 1, c = 1, ħ = 1, ε₀ = 1   (hence μ₀ = 1).
// SI values enter and leave only through UnitScale, at the configuration and
// output boundary.

namespace relemit {

namespace si {
inline constexpr double c = 299792458.0;            // m/s
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double epsilon0 = 8.8541878128e-12; // F/m
inline constexpr double mu0 = 1.0 / (epsilon0 * c * c);
} // namespace si

// Conversion factors for one transition frequency ω_A (rad/s).
class UnitScale {
public:
  explicit UnitScale(double omega_a);

  double omega_a() const noexcept { return omega_a_; }

  // Multiply a scaled quantity by these to obtain SI.
  double frequency() const noexcept { return omega_a_; }       // rad/s
  double time() const noexcept { return 1.0 / omega_a_; }      // s
  double wavenumber() const noexcept { return omega_a_ / si::c; } // 1/m
  double velocity() const noexcept { return si::c; }           // m/s
  double mass() const noexcept { return si::hbar * omega_a_ / (si::c * si::c); }
  // Dipole scale sqrt(ε₀ ħ c³)/ω_A, chosen so Γ₀/ω_A = |d|²/(3π) in scaled units.
  double dipole() const noexcept { return dipole_; }
  double pole_strength() const noexcept { return omega_a_ * omega_a_; } // (rad/s)²

private:
  double omega_a_;
  double dipole_;
};

} // namespace relemit
