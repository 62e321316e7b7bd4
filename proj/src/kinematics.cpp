#include "relemit/kinematics.hpp"

#include "relemit/errors.hpp"

#include <cmath>
#include <string>

namespace relemit {

void AtomState::validate() const {
  if (!(transition_frequency > 0.0))
    throw ValidationError("atom.transition_frequency", "must be > 0");
  if (!(dipole.allFinite()) || !(dipole.norm() > 0.0))
    throw ValidationError("atom.dipole", "must be a finite non-zero vector");
  if (!(mass > 0.0))
    throw ValidationError("atom.mass", "must be > 0");
  if (!velocity.allFinite() || !(velocity.norm() < 1.0))
    throw ValidationError("atom.velocity",
                          "speed must be below c, got |v|/c = " +
                              std::to_string(velocity.norm()));
}

double lorentz_gamma(const Vec3 &velocity) {
  const double v2 = velocity.squaredNorm();
  if (!(v2 < 1.0))
    throw DomainError("lorentz_gamma: |v| must be < c");
  return 1.0 / std::sqrt(1.0 - v2);
}

double dirac_energy(const Vec3 &q, double mass) {
  if (!(mass > 0.0))
    throw DomainError("dirac_energy: mass must be > 0");
  return std::hypot(q.norm(), mass);
}

double energy_difference_stable(const Vec3 &q, const Vec3 &k, double mass) {
  const double e_before = dirac_energy(q, mass);
  const double e_after = dirac_energy(q - k, mass);
  return (2.0 * q.dot(k) - k.squaredNorm()) / (e_before + e_after);
}

double spinor_overlap_factor(const Vec3 &v1, const Vec3 &v2) {
  const double a = v1.squaredNorm();
  const double b = v2.squaredNorm();
  if (!(a < 1.0) || !(b < 1.0))
    throw DomainError("spinor_overlap_factor: velocities must be below c");
  if (v1 == v2)
    return 2.0;
  return 1.0 + std::sqrt((1.0 - a) * (1.0 - b)) + v1.dot(v2);
}

double resonance_frequency(const AtomState &atom, double delta_omega,
                           const WaveVector &k) {
  return atom.transition_frequency / lorentz_gamma(atom.velocity) - delta_omega +
         atom.velocity.dot(k.components());
}

Vec3 atom_momentum(const AtomState &atom) {
  return lorentz_gamma(atom.velocity) * atom.mass * atom.velocity;
}

Vec3 lab_frame_dipole(const AtomState &atom) {
  const double speed = atom.velocity.norm();
  if (speed == 0.0)
    return atom.dipole;
  const Vec3 vhat = atom.velocity / speed;
  const double parallel = atom.dipole.dot(vhat);
  return atom.dipole - (1.0 - 1.0 / lorentz_gamma(atom.velocity)) * parallel * vhat;
}

EmissionKinematics emission_kinematics(const AtomState &atom, double delta_omega,
                                       const WaveVector &k) {
  const double gamma = lorentz_gamma(atom.velocity);
  return {k, atom.velocity, atom.velocity - k.components() / (gamma * atom.mass),
          resonance_frequency(atom, delta_omega, k)};
}

} // namespace relemit
