#include "relemit/errors.hpp"

namespace relemit {

int exit_code(const std::exception &e) noexcept {
  if (dynamic_cast<const IoError *>(&e))
    return 3;
  if (dynamic_cast<const ConvergenceError *>(&e) ||
      dynamic_cast<const InstabilityError *>(&e))
    return 2;
  // Validation, parse, domain, model and configuration faults all trace back
  // to the inputs.
  return 1;
}

} // namespace relemit
