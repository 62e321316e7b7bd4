#pragma once

#include "relemit/kinematics.hpp"
#include "relemit/tensor_green.hpp"
#include "relemit/types.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace relemit {

// Angular, radial and principal-value controls. Wavenumbers are in units of
// ω_A/c, frequencies in units of ω_A.
struct QuadratureSpec {
  int n_polar = 32;
  int n_azimuthal = 32;
  // Initial panels of every adaptive radial / frequency integral. The
  // Lamb-shift guard cell is omega_cutoff / (21 * radial_nodes), the spacing
  // of the initial Gauss–Kronrod nodes.
  int radial_nodes = 8;
  double k_max = 4.0;
  double omega_cutoff = 10.0;
  double pv_window = 0.25;
  double rel_tol = 1e-9;
  std::size_t max_panels = 2000;
  // Polar integration is composite Gauss–Legendre; a segment is bisected
  // while its n_polar-node and n_polar/2-node values differ by more than
  // angular_tol relative to the total.
  double angular_tol = 1e-7;
  int max_polar_segments = 64;

  void validate() const;
  // Every node count doubled; used for the convergence property.
  QuadratureSpec refined() const;
};

enum class ShiftKind { zero, fixed, self_consistent };

struct ShiftMode {
  ShiftKind kind = ShiftKind::zero;
  double value = 0.0; // scaled δω for ShiftKind::fixed

  // "zero", "fixed:<value>" or "self-consistent". The fixed value is taken
  // in the units the caller works in. ValidationError otherwise.
  static ShiftMode parse(const std::string &text);
  std::string str() const;
};

struct EmissionOptions {
  ShiftMode shift;
  // Replace the constant spinor trace 2 by spinor_overlap_factor(v, v′).
  bool exact_spinor = false;
  int threads = 1;
};

struct RoentgenBracket {
  double static_term = 0.0;
  double motion_left = 0.0;
  double recoil_right = 0.0;
  double cross = 0.0;

  double total() const { return static_term + motion_left + recoil_right + cross; }
  std::array<double, 4> terms() const {
    return {static_term, motion_left, recoil_right, cross};
  }
};

// The four terms of d·[ωI + (v×k×)]·ImG·[ωI + (×k×w)]·d with w = v − k/(γM):
//   static       ω² d·ImG·d
//   motion_left  ω d·(v×k×ImG)·d
//   recoil_right ω d·(ImG×k×w)·d
//   cross        d·(v×k×ImG×k×w)·d
// Cross products associate right to left on the left and left to right on
// the right, using left_cross / right_cross.
RoentgenBracket roentgen_bracket(const Vec3 &d, const Vec3 &velocity,
                                 const WaveVector &k, double omega,
                                 const RealTensor3 &im_g, double mass, double gamma);
// Shell form: ImG = shell.weight(k̂).
RoentgenBracket roentgen_bracket(const Vec3 &d, const Vec3 &velocity,
                                 const WaveVector &k, double omega,
                                 const ShellDescriptor &shell, double mass,
                                 double gamma);

struct NodeCounts {
  std::size_t angular = 0;
  std::size_t radial_evaluations = 0;
};

// All rates and shifts in units of ω_A.
struct EmissionResult {
  double gamma_total = 0.0;
  std::array<double, 4> gamma_terms{};
  double lamb_shift = 0.0;
  bool has_lamb_shift = false;
  std::array<double, 4> shift_terms{};
  double omega_cutoff = 0.0;
  // Σ_segments |Γ(n nodes) − Γ(n/2 nodes)| + radial error, relative to Γ.
  double quadrature_error_estimate = 0.0;
  NodeCounts node_counts;
  double delta_omega_used = 0.0;
  int shift_iterations = 0;
};

// Γ with the resonance delta collapsed at ω* = ω_A/γ − δω + v·k and modes
// with ω* <= 0 dropped. δω comes from opts.shift (self_consistent iterates
// the shift first). ConvergenceError if a radial integral misses rel_tol.
EmissionResult decay_rate(const AtomState &atom, const GreenSource &source,
                          const QuadratureSpec &quad, const EmissionOptions &opts = {});

struct LambShift {
  double value = 0.0;
  std::array<double, 4> terms{};
  double omega_cutoff = 0.0;
  double error_estimate = 0.0; // absolute
  NodeCounts node_counts;
};

// Principal-value shift with hard frequency cutoff quad.omega_cutoff. The
// δω inside the denominator is opts.shift (zero or fixed; self_consistent
// is rejected here, use self_consistent_shift). ConfigurationError when a
// pole falls within one guard cell of the cutoff.
LambShift lamb_shift(const AtomState &atom, const GreenSource &source,
                     const QuadratureSpec &quad, const EmissionOptions &opts = {});

struct SelfConsistentShift {
  double delta_omega = 0.0;
  EmissionResult rate;
  int iterations = 0;
  std::vector<double> history;
};

// δω_{n+1} = lamb_shift(δω_n) from δω_0 = 0 until |Δ| < tolerance (units of
// ω_A) or max_iterations; ConvergenceError carrying the iterates otherwise.
SelfConsistentShift self_consistent_shift(const AtomState &atom,
                                          const GreenSource &source,
                                          const QuadratureSpec &quad,
                                          const EmissionOptions &opts = {},
                                          double tolerance = 1e-8,
                                          int max_iterations = 20);

// Emission spectral function used by the memory kernel:
//   J(ν) = N ∫d³k ∫₀^Λ dω (S/2) bracket(k, ω) δ(ω − Δ_E(k) − ν),
// with Δ_E the exact Dirac energy difference and Λ = quad.omega_cutoff.
// J(ω_A/γ − δω) is the decay rate up to recoil and the cutoff.
double spectral_rate(const AtomState &atom, const GreenSource &source,
                     const QuadratureSpec &quad, const EmissionOptions &opts,
                     double nu);

// Γ₀/ω_A = ω_A²|d|²/(3π) in scaled units (rest frame, no medium).
double free_space_rate(const AtomState &atom);

namespace detail {

// Direction set used by every k-space quadrature: Gauss–Legendre in u with
// the aberration map cos θ = (u + β)/(1 + βu) about the velocity axis,
// uniform in φ. weight includes the 2π/n_az and the map's Jacobian.
struct AngularNode {
  Vec3 khat;
  double weight;
};
std::vector<AngularNode> angular_grid(const Vec3 &velocity, int n_polar,
                                      int n_azimuthal);
// Same, with the polar rule restarted at every cos θ in `polar_breaks`
// (n_polar nodes per segment) so integrands with a kink there stay smooth
// segment by segment.
std::vector<AngularNode> angular_grid(const Vec3 &velocity, int n_polar,
                                      int n_azimuthal,
                                      std::vector<double> polar_breaks);

// Bracket for ImG = transverse·(I − k̂k̂) + longitudinal·k̂k̂ evaluated with
// vectors only; must agree with roentgen_bracket.
// P∫₀^upper h(x)/(x − pole) dx by the same symmetric-window subtraction the
// Lamb shift uses (window half-width quad.pv_window·pole).
double principal_value(const std::function<double(double)> &h, double upper,
                       double pole, const QuadratureSpec &quad);
RoentgenBracket bracket_projected(const Vec3 &d, const Vec3 &velocity,
                                  const Vec3 &k, double omega, double transverse,
                                  double longitudinal, double mass, double gamma);

} // namespace detail

} // namespace relemit
