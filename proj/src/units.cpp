#include "relemit/units.hpp"

#include "relemit/errors.hpp"

#include <cmath>

namespace relemit {

UnitScale::UnitScale(double omega_a)
    : omega_a_(omega_a),
      dipole_(std::sqrt(si::epsilon0 * si::hbar * si::c * si::c * si::c) / omega_a) {
  if (!(omega_a > 0.0) || !std::isfinite(omega_a))
    throw ValidationError("atom.transition_frequency", "must be finite and > 0");
}

} // namespace relemit
