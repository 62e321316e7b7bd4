#include "relemit/tensor_green.hpp"

#include "relemit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace relemit {

namespace {

RealTensor3 transverse_projector(const Vec3 &khat) {
  return RealTensor3::Identity() - khat * khat.transpose();
}

} // namespace

ComplexTensor3 BulkGreen::tensor(const Vec3 &khat) const {
  const RealTensor3 pl = khat * khat.transpose();
  const RealTensor3 pt = RealTensor3::Identity() - pl;
  return transverse * pt.cast<cplx>() + longitudinal * pl.cast<cplx>();
}

RealTensor3 BulkGreen::imaginary(const Vec3 &khat) const {
  const RealTensor3 pl = khat * khat.transpose();
  return transverse.imag() * (RealTensor3::Identity() - pl) + longitudinal.imag() * pl;
}

BulkGreen bulk_green_k(cplx epsilon, cplx mu, double k, double omega) {
  if (!(omega > 0.0))
    throw DomainError("bulk_green_k: omega must be > 0");
  if (!(k >= 0.0))
    throw DomainError("bulk_green_k: |k| must be >= 0");
  const cplx denom = k * k - epsilon * mu * omega * omega;
  if (denom == cplx(0.0, 0.0) ||
      (denom.imag() == 0.0 &&
       std::abs(denom.real()) <= 4.0 * std::numeric_limits<double>::epsilon() * k * k))
    throw SingularityError(
        "bulk_green_k: transverse pole on the real axis (lossless medium at k = "
        "sqrt(eps mu) omega); give the medium non-zero damping");
  return {mu / denom, -1.0 / (epsilon * omega * omega)};
}

BulkGreen bulk_green_k(const DispersiveMedium &medium, double k, double omega) {
  return bulk_green_k(permittivity(medium, omega), permeability(medium, omega), k,
                      omega);
}

ComplexTensor3 bulk_green_tensor(const DispersiveMedium &medium, const WaveVector &k,
                                 double omega) {
  return bulk_green_k(medium, k.magnitude(), omega).tensor(k.direction());
}

RealTensor3 ShellDescriptor::weight(const Vec3 &khat) const {
  return scale * transverse_projector(khat);
}

ShellDescriptor vacuum_im_green_shell(double omega) {
  if (!(omega > 0.0))
    throw DomainError("vacuum_im_green_shell: omega must be > 0");
  return {omega, kShellNormalization * std::numbers::pi / (2.0 * omega)};
}

double fluctuation_identity_residual(cplx epsilon, cplx mu, double k, double omega) {
  const BulkGreen g = bulk_green_k(epsilon, mu, k, omega);
  const double w2 = omega * omega;
  const double t_rhs =
      std::norm(g.transverse) * (w2 * epsilon.imag() + k * k * mu.imag() / std::norm(mu));
  const double l_rhs = std::norm(g.longitudinal) * w2 * epsilon.imag();
  auto rel = [](double lhs, double rhs) {
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    return scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
  };
  return std::max(rel(g.transverse.imag(), t_rhs), rel(g.longitudinal.imag(), l_rhs));
}

double fluctuation_identity_residual(const DispersiveMedium &medium, double k,
                                     double omega) {
  return fluctuation_identity_residual(permittivity(medium, omega),
                                       permeability(medium, omega), k, omega);
}

SmoothBulk::SmoothBulk(DispersiveMedium m) : medium(std::move(m)) {
  if (!medium.is_lossy())
    throw ModelError("SmoothBulk: medium is lossless; the k-space Green tensor has a "
                     "pole on the integration path (use the vacuum shell instead)");
}

} // namespace relemit
