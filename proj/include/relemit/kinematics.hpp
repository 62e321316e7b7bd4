#pragma once

#include "relemit/types.hpp"

namespace relemit {

// Two-level atom in scaled units (ω_A = c = ħ = 1 once scaled, but the
// transition frequency is kept explicit so the same struct serves tests that
// use other values). `dipole` is the rest-frame transition dipole d₀A.
struct AtomState {
  double transition_frequency = 1.0;
  Vec3 dipole = Vec3::UnitZ();
  double mass = 1.0e9;
  Vec3 velocity = Vec3::Zero();

  // Throws ValidationError naming the field on any invariant violation.
  void validate() const;
};

// Standard Lorentz factor 1/sqrt(1 − v²). DomainError for |v| >= 1.
double lorentz_gamma(const Vec3 &velocity);

// Positive-energy Dirac branch sqrt(q² + M²).
double dirac_energy(const Vec3 &q, double mass);

// (|E_q| − |E_{q−k}|) in the cancellation-free form
//   (2 q·k − k²)/(|E_q| + |E_{q−k}|).
double energy_difference_stable(const Vec3 &q, const Vec3 &k, double mass);

// Trace of the positive-energy spinor projectors before and after emission:
//   1 + sqrt((1 − v₁²)(1 − v₂²)) + v₁·v₂.
// Equals 2 whenever v₁ = v₂. DomainError at or above c.
double spinor_overlap_factor(const Vec3 &v1, const Vec3 &v2);

// Doppler-shifted resonance ω* = ω_A/γ − δω + v·k. May be <= 0, in which
// case the mode cannot be emitted.
double resonance_frequency(const AtomState &atom, double delta_omega,
                           const WaveVector &k);

// Centre-of-mass wavevector q with ħq = γ M v.
Vec3 atom_momentum(const AtomState &atom);

// Lab-frame transition dipole of the moving atom: the component along the
// velocity is Lorentz-contracted, d = d⊥ + d∥/γ.
Vec3 lab_frame_dipole(const AtomState &atom);

// Photon emission bookkeeping for one wavevector.
struct EmissionKinematics {
  WaveVector k;
  Vec3 v_before;
  Vec3 v_after; // v − k/(γM), as printed for the recoil
  double resonance = 0.0;
};

EmissionKinematics emission_kinematics(const AtomState &atom, double delta_omega,
                                       const WaveVector &k);

} // namespace relemit
