#pragma once

#include "relemit/material.hpp"
#include "relemit/types.hpp"

#include <variant>

namespace relemit {

// Fourier convention: f(k) = ∫d³r e^{−ik·r} f(r), inverse carries (2π)⁻³.
// In this convention ∇ → ik and ∇×∇× → k²I − kk, so the homogeneous-medium
// Helmholtz operator [∇×μ⁻¹∇× − ω²ε] inverts blockwise on the transverse
// and longitudinal projectors.

// Scalar blocks of the bulk Green tensor:
//   G(k, ω) = transverse·(I − k̂k̂) + longitudinal·k̂k̂,
//   transverse   = μ/(k² − εμω²),   longitudinal = −1/(εω²).
struct BulkGreen {
  cplx transverse;
  cplx longitudinal;

  ComplexTensor3 tensor(const Vec3 &khat) const;
  // Im G as a real symmetric tensor.
  RealTensor3 imaginary(const Vec3 &khat) const;
};

// Throws DomainError for ω <= 0 and SingularityError when the transverse
// denominator vanishes (lossless medium on its light cone).
BulkGreen bulk_green_k(cplx epsilon, cplx mu, double k, double omega);
BulkGreen bulk_green_k(const DispersiveMedium &medium, double k, double omega);
ComplexTensor3 bulk_green_tensor(const DispersiveMedium &medium,
                                 const WaveVector &k, double omega);

// Vacuum calibration constant multiplying the printed shell weight. In
// scaled units (c = 1) the two candidate normalizations π/(2ωc) and
// πc/(2ω) coincide, and the free-space rate Γ₀ is reproduced with 1.
inline constexpr double kShellNormalization = 1.0;

// Vacuum Im G concentrated on the light-cone sphere:
//   Im G(k, ω) = W(k̂) δ(|k| − ω),   W(k̂) = scale·(I − k̂k̂),
//   scale = kShellNormalization · π/(2ω).
struct ShellDescriptor {
  double radius = 0.0;
  double scale = 0.0;
  RealTensor3 weight(const Vec3 &khat) const;
};

ShellDescriptor vacuum_im_green_shell(double omega);

// (a × T)_{ij} = ε_{ikl} a_k T_{lj}: cross product applied to every column.
template <class Scalar>
Eigen::Matrix<Scalar, 3, 3> left_cross(const Vec3 &a,
                                       const Eigen::Matrix<Scalar, 3, 3> &t) {
  Eigen::Matrix<Scalar, 3, 3> out;
  for (int j = 0; j < 3; ++j) {
    out(0, j) = a(1) * t(2, j) - a(2) * t(1, j);
    out(1, j) = a(2) * t(0, j) - a(0) * t(2, j);
    out(2, j) = a(0) * t(1, j) - a(1) * t(0, j);
  }
  return out;
}

// (T × a)_{ij} = T_{ik} ε_{kjl} a_l: cross product applied to every row.
template <class Scalar>
Eigen::Matrix<Scalar, 3, 3> right_cross(const Eigen::Matrix<Scalar, 3, 3> &t,
                                        const Vec3 &a) {
  Eigen::Matrix<Scalar, 3, 3> out;
  for (int i = 0; i < 3; ++i) {
    out(i, 0) = t(i, 1) * a(2) - t(i, 2) * a(1);
    out(i, 1) = t(i, 2) * a(0) - t(i, 0) * a(2);
    out(i, 2) = t(i, 0) * a(1) - t(i, 1) * a(0);
  }
  return out;
}

// k-space diagonal form of the fluctuation–dissipation integral relation:
//   Im g_T = |g_T|² (ω² Im ε + k² Im μ/|μ|²),   Im g_L = |g_L|² ω² Im ε.
// Returns the larger relative residual of the two blocks.
double fluctuation_identity_residual(cplx epsilon, cplx mu, double k, double omega);
double fluctuation_identity_residual(const DispersiveMedium &medium, double k,
                                     double omega);

// Green-tensor providers understood by the emission and dynamics modules.
struct SmoothBulk {
  DispersiveMedium medium;
  // Throws ModelError for a lossless medium (pole on the integration path).
  explicit SmoothBulk(DispersiveMedium m);
};

struct VacuumShell {};

using GreenSource = std::variant<SmoothBulk, VacuumShell>;

} // namespace relemit
