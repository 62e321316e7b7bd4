#pragma once

#include "relemit/emission.hpp"

#include <complex>
#include <string>
#include <vector>

namespace relemit {

// Uniform τ-grid tabulation of the memory kernel
//   M(τ) = −(1/2π) e^{iω_c τ} ∫dν J(ν) e^{−iντ},   ω_c = ω_A/γ − δω,
// where J is spectral_rate(). With J(ω_c) = Γ this gives
// 2 Re ∫₀^∞ M dτ = −Γ in the Markov limit.
struct MemoryKernel {
  double step = 0.0;
  std::vector<cplx> samples; // M(n·step), n = 0, 1, ...
  double delta_omega = 0.0;  // enters the −iδω C term and ω_c
  double carrier = 0.0;      // ω_c
  double markov_rate = 0.0;  // decay_rate() Γ for the same inputs
  // Spectral grid the kernel was transformed from.
  double nu_min = 0.0;
  double nu_max = 0.0;
  std::vector<double> spectral;
  std::vector<std::string> warnings;

  // Kernel built from explicit samples (tests, model kernels).
  static MemoryKernel from_samples(double step, std::vector<cplx> samples,
                                   double delta_omega = 0.0, double markov_rate = 0.0);
};

struct DynamicsOptions {
  EmissionOptions emission;
  // Uniform ν nodes for the spectral function (Filon hat quadrature).
  int spectral_nodes = 2048;
  // Markov reference phase: +iδω as printed, or −iδω when false.
  bool markov_phase_as_printed = true;
};

// k′-resolved kernel: −(1/((2π)³π)) ∫₀^Λ dω (S/2) e^{i(ω_c + Δ_E(k′) − ω)τ} bracket.
// For VacuumShell the ω-integral collapses on |k′| and the value returned is
// the coefficient of δ(|k′| − ω) (zero for |k′| >= Λ). Warnings, if
// requested, flag a bracket that has not decayed at the cutoff.
cplx kernel_at(const AtomState &atom, const GreenSource &source, const WaveVector &k,
               double tau, const QuadratureSpec &quad, const DynamicsOptions &opts = {},
               std::vector<std::string> *warnings = nullptr);

// Tabulates M on τ_n = n·step, n < count. ConfigurationError unless
// step <= 2π/(50 Λ).
MemoryKernel build_memory_kernel(const AtomState &atom, const GreenSource &source,
                                 double step, std::size_t count,
                                 const QuadratureSpec &quad,
                                 const DynamicsOptions &opts = {});

struct AmplitudeTrajectory {
  std::vector<double> times;
  std::vector<cplx> amplitude;
  std::vector<cplx> markov;
  std::vector<double> survival;
  std::vector<double> markov_survival;
};

// Ċ = −iδω C + ∫₀^t M(t − t′) C(t′) dt′, C(0) = 1, trapezoid quadrature of the
// memory integral with an Euler predictor and one trapezoid corrector per
// step. The history sum uses blocked online convolution (FFT for long
// lags). InstabilityError if |C| exceeds 1 + 1e-3.
AmplitudeTrajectory evolve_amplitude(const MemoryKernel &kernel, double t_end,
                                     double step, bool markov_phase_as_printed = true);

// exp((−Γ/2 + iδω) t) as printed; phase_as_printed = false flips the phase.
cplx markov_amplitude(double gamma, double delta_omega, double t,
                      bool phase_as_printed = true);

namespace detail {
// ∫₀^h (1 − x/h) e^{−ixτ} dx, the Filon weight of a left end half-hat.
cplx half_hat_weight(double h, double tau);
} // namespace detail

} // namespace relemit
