#include "relemit/dynamics.hpp"

#include "relemit/errors.hpp"
#include "relemit/numerics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

namespace relemit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};
// 1/((2π)³ π) in scaled units.
constexpr double kKernelPrefactor = 1.0 / (8.0 * kPi * kPi * kPi * kPi);

double resolve_shift(const AtomState &atom, const GreenSource &source,
                     const QuadratureSpec &quad, const EmissionOptions &opts) {
  switch (opts.shift.kind) {
  case ShiftKind::zero:
    return 0.0;
  case ShiftKind::fixed:
    return opts.shift.value;
  case ShiftKind::self_consistent:
    return self_consistent_shift(atom, source, quad, opts).delta_omega;
  }
  return 0.0;
}

double bracket_total(const AtomState &atom, const Vec3 &k, double omega,
                     double transverse, double longitudinal, bool exact_spinor) {
  const double g = lorentz_gamma(atom.velocity);
  const Vec3 d = lab_frame_dipole(atom);
  double t = detail::bracket_projected(d, atom.velocity, k, omega, transverse,
                                       longitudinal, atom.mass, g)
                 .total();
  if (exact_spinor)
    t *= 0.5 * spinor_overlap_factor(atom.velocity, atom.velocity - k / (g * atom.mass));
  return t;
}

// sin²(x)/x² with the removable point filled in.
double sinc2(double x) {
  if (std::abs(x) < 1e-4)
    return 1.0 - x * x / 3.0;
  const double s = std::sin(x) / x;
  return s * s;
}

struct FftBuffer {
  fftw_complex *data = nullptr;
  explicit FftBuffer(std::size_t n)
      : data(static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!data)
      throw std::bad_alloc();
  }
  ~FftBuffer() { fftw_free(data); }
  FftBuffer(const FftBuffer &) = delete;
  FftBuffer &operator=(const FftBuffer &) = delete;
  cplx *get() { return reinterpret_cast<cplx *>(data); }
};

struct FftPlan {
  fftw_plan plan = nullptr;
  FftPlan(int n, fftw_complex *in, fftw_complex *out, int sign)
      : plan(fftw_plan_dft_1d(n, in, out, sign, FFTW_ESTIMATE)) {}
  ~FftPlan() {
    if (plan)
      fftw_destroy_plan(plan);
  }
  FftPlan(const FftPlan &) = delete;
  FftPlan &operator=(const FftPlan &) = delete;
  void run() const { fftw_execute(plan); }
};

// Level-b stage of the online convolution: lags [b, 2b) applied to a
// completed block of b history samples.
class ConvolutionLevel {
public:
  ConvolutionLevel(std::size_t b, const std::vector<cplx> &m, bool use_fft)
      : b_(b), use_fft_(use_fft), slice_(b, cplx{}) {
    for (std::size_t l = 0; l < b; ++l)
      if (b + l < m.size())
        slice_[l] = m[b + l];
    if (use_fft_) {
      const std::size_t n = 2 * b;
      buf_ = std::make_unique<FftBuffer>(n);
      spec_ = std::make_unique<FftBuffer>(n);
      forward_ = std::make_unique<FftPlan>(static_cast<int>(n), buf_->data, buf_->data,
                                           FFTW_FORWARD);
      backward_ = std::make_unique<FftPlan>(static_cast<int>(n), buf_->data,
                                            buf_->data, FFTW_BACKWARD);
      cplx *x = buf_->get();
      std::fill(x, x + n, cplx{});
      std::copy(slice_.begin(), slice_.end(), x);
      forward_->run();
      std::copy(x, x + n, spec_->get());
    }
  }

  std::size_t size() const { return b_; }

  // block[i] = C_{first + i}; adds Σ M_{n−j} C_j over lags in [b, 2b) to
  // acc[first + b + o], o ∈ [0, 2b − 1).
  void apply(const cplx *block, std::size_t first, std::vector<cplx> &acc) const {
    const std::size_t base = first + b_;
    if (base >= acc.size())
      return;
    const std::size_t outputs = std::min(2 * b_ - 1, acc.size() - base);
    if (!use_fft_) {
      for (std::size_t o = 0; o < outputs; ++o) {
        // o = i + l with i the block offset and l the lag offset.
        const std::size_t i_lo = o >= b_ ? o - b_ + 1 : 0;
        const std::size_t i_hi = std::min(o, b_ - 1);
        cplx s{};
        for (std::size_t i = i_lo; i <= i_hi; ++i)
          s += slice_[o - i] * block[i];
        acc[base + o] += s;
      }
      return;
    }
    const std::size_t n = 2 * b_;
    cplx *x = buf_->get();
    std::copy(block, block + b_, x);
    std::fill(x + b_, x + n, cplx{});
    forward_->run();
    const cplx *ms = spec_->get();
    for (std::size_t i = 0; i < n; ++i)
      x[i] *= ms[i];
    backward_->run();
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t o = 0; o < outputs; ++o)
      acc[base + o] += x[o] * inv;
  }

private:
  std::size_t b_;
  bool use_fft_;
  std::vector<cplx> slice_;
  std::unique_ptr<FftBuffer> buf_, spec_;
  std::unique_ptr<FftPlan> forward_, backward_;
};

constexpr std::size_t kDirectLimit = 32;

} // namespace

MemoryKernel MemoryKernel::from_samples(double step, std::vector<cplx> samples,
                                        double delta_omega, double markov_rate) {
  if (!(step > 0.0))
    throw ConfigurationError("memory kernel step must be > 0");
  if (samples.empty())
    throw ConfigurationError("memory kernel needs at least one sample");
  MemoryKernel k;
  k.step = step;
  k.samples = std::move(samples);
  k.delta_omega = delta_omega;
  k.markov_rate = markov_rate;
  return k;
}

namespace detail {

cplx half_hat_weight(double h, double tau) {
  const double th = h * tau;
  if (std::abs(th) < 1e-2) {
    const double t2 = th * th;
    return h * cplx(0.5 - t2 / 24.0 + t2 * t2 / 720.0,
                    -th / 6.0 + th * t2 / 120.0);
  }
  const cplx e = std::exp(cplx(0.0, -th));
  return h * ((1.0 - e) / (kI * th) - kI * e / th + (1.0 - e) / (th * th));
}

} // namespace detail

cplx kernel_at(const AtomState &atom, const GreenSource &source, const WaveVector &k,
               double tau, const QuadratureSpec &quad, const DynamicsOptions &opts,
               std::vector<std::string> *warnings) {
  quad.validate();
  atom.validate();
  if (!(tau >= 0.0))
    throw DomainError("kernel_at: tau must be >= 0");
  const double delta = resolve_shift(atom, source, quad, opts.emission);
  const double carrier = atom.transition_frequency / lorentz_gamma(atom.velocity) - delta;
  const Vec3 &kv = k.components();
  const double kn = k.magnitude();
  const double detuning = energy_difference_stable(atom_momentum(atom), kv, atom.mass);
  const double cutoff = quad.omega_cutoff;
  const bool exact = opts.emission.exact_spinor;

  if (std::holds_alternative<VacuumShell>(source)) {
    if (!(kn > 0.0) || kn >= cutoff) {
      if (warnings && kn >= cutoff)
        warnings->push_back("kernel_at: |k| beyond omega_cutoff, mode excluded");
      return {};
    }
    const auto shell = vacuum_im_green_shell(kn);
    const double b = bracket_total(atom, kv, kn, shell.scale, 0.0, exact);
    return -kKernelPrefactor * b * std::exp(kI * ((carrier + detuning - kn) * tau));
  }

  const auto &medium = std::get<SmoothBulk>(source).medium;
  auto bracket = [&](double w) {
    const auto g = bulk_green_k(medium, kn, w);
    return bracket_total(atom, kv, w, g.transverse.imag(), g.longitudinal.imag(), exact);
  };
  auto f = [&](double w) -> std::array<double, 2> {
    if (!(w > 0.0))
      return {0.0, 0.0};
    const double b = bracket(w);
    const double phase = (carrier + detuning - w) * tau;
    return {b * std::cos(phase), b * std::sin(phase)};
  };
  std::vector<double> breaks;
  const int panels = quad.radial_nodes + static_cast<int>(std::ceil(cutoff * tau / kPi));
  for (int i = 0; i <= panels; ++i)
    breaks.push_back(cutoff * i / panels);
  const auto r = numerics::integrate_adaptive_n<2>(f, breaks, quad.rel_tol, 0.0,
                                                   quad.max_panels);
  if (warnings) {
    double peak = 0.0;
    for (int i = 1; i <= 64; ++i)
      peak = std::max(peak, std::abs(bracket(cutoff * i / 64.0)));
    if (std::abs(bracket(cutoff)) > 1e-3 * peak)
      warnings->push_back("kernel_at: bracket has not decayed at omega_cutoff");
    if (!r.converged)
      warnings->push_back("kernel_at: frequency integral did not reach rel_tol");
  }
  return -kKernelPrefactor * cplx(r.value[0], r.value[1]);
}

MemoryKernel build_memory_kernel(const AtomState &atom, const GreenSource &source,
                                 double step, std::size_t count,
                                 const QuadratureSpec &quad, const DynamicsOptions &opts) {
  quad.validate();
  atom.validate();
  const double limit = 2.0 * kPi / (50.0 * quad.omega_cutoff);
  if (!(step > 0.0) || step > limit) {
    std::ostringstream msg;
    msg << "build_memory_kernel: step " << step << " exceeds 2π/(50·omega_cutoff) = "
        << limit;
    throw ConfigurationError(msg.str());
  }
  if (count < 2)
    throw ConfigurationError("build_memory_kernel: need at least two samples");
  if (opts.spectral_nodes < 3)
    throw ValidationError("dynamics.spectral_nodes", "must be >= 3");

  MemoryKernel kernel;
  kernel.step = step;
  kernel.delta_omega = resolve_shift(atom, source, quad, opts.emission);
  kernel.carrier =
      atom.transition_frequency / lorentz_gamma(atom.velocity) - kernel.delta_omega;
  EmissionOptions rate_opts = opts.emission;
  rate_opts.shift = {ShiftKind::fixed, kernel.delta_omega};
  kernel.markov_rate = decay_rate(atom, source, quad, rate_opts).gamma_total;

  const double speed = atom.velocity.norm();
  const double cutoff = quad.omega_cutoff;
  if (std::holds_alternative<VacuumShell>(source)) {
    kernel.nu_min = 0.0;
    kernel.nu_max = cutoff * (1.0 + speed) * (1.0 + 1e-9);
  } else {
    kernel.nu_min = -speed * quad.k_max;
    kernel.nu_max = cutoff + speed * quad.k_max;
  }
  const std::size_t nodes = static_cast<std::size_t>(opts.spectral_nodes);
  const double h = (kernel.nu_max - kernel.nu_min) / static_cast<double>(nodes - 1);
  kernel.spectral.assign(nodes, 0.0);
  EmissionOptions inner = opts.emission;
  inner.threads = 1;
  numerics::parallel_for(nodes, opts.emission.threads, [&](std::size_t j) {
    kernel.spectral[j] =
        spectral_rate(atom, source, quad, inner, kernel.nu_min + h * static_cast<double>(j));
  });

  double peak = 0.0;
  for (double v : kernel.spectral)
    peak = std::max(peak, std::abs(v));
  // Largest ν with support inside the cutoff.
  const double tail = std::abs(kernel.spectral[nodes - 2]);
  // The vacuum shell ends sharply at Λ by construction; only a medium
  // whose weight should have died out by then gets the warning.
  if (!std::holds_alternative<VacuumShell>(source) && tail > 1e-3 * peak)
    kernel.warnings.push_back(
        "spectral weight has not decayed at omega_cutoff; the kernel carries a "
        "cutoff tail ~1/τ");

  kernel.samples.assign(count, cplx{});
  const std::vector<double> &J = kernel.spectral;
  numerics::parallel_for(count, opts.emission.threads, [&](std::size_t n) {
    const double tau = step * static_cast<double>(n);
    const double th = h * tau;
    const cplx z = std::polar(1.0, -th);
    cplx interior{};
    for (std::size_t j = nodes - 2; j >= 1; --j)
      interior = interior * z + J[j];
    interior *= z; // lowest interior power is z¹
    const cplx a = detail::half_hat_weight(h, tau);
    const cplx zn = std::polar(1.0, -th * static_cast<double>(nodes - 1));
    const cplx sum = interior * (h * sinc2(0.5 * th)) + J[0] * a +
                     J[nodes - 1] * zn * std::conj(a);
    kernel.samples[n] =
        -sum * std::polar(1.0, (kernel.carrier - kernel.nu_min) * tau) / (2.0 * kPi);
  });
  return kernel;
}

AmplitudeTrajectory evolve_amplitude(const MemoryKernel &kernel, double t_end,
                                     double step, bool markov_phase_as_printed) {
  if (!(step > 0.0) || std::abs(step - kernel.step) > 1e-12 * kernel.step)
    throw ConfigurationError("evolve_amplitude: step must equal the kernel grid step");
  if (!(t_end >= 0.0))
    throw ConfigurationError("evolve_amplitude: t_end must be >= 0");
  const auto steps = static_cast<std::size_t>(std::llround(t_end / step));
  if (steps + 1 > kernel.samples.size())
    throw ConfigurationError("evolve_amplitude: kernel grid shorter than t_end");

  const std::vector<cplx> &m = kernel.samples;
  const cplx rot = -kI * kernel.delta_omega;
  std::vector<cplx> c(steps + 1);
  c[0] = 1.0;
  // acc[n] collects Σ_{j=1}^{n−1} M_{n−j} C_j as history blocks complete.
  std::vector<cplx> acc(steps + 1, cplx{});

  std::vector<ConvolutionLevel> levels;
  for (std::size_t b = 1; b <= std::max<std::size_t>(steps, 1); b *= 2)
    levels.emplace_back(b, m, b > kDirectLimit);

  auto memory = [&](std::size_t n, cplx cn) {
    return step * (0.5 * m[n] * c[0] + acc[n] + 0.5 * m[0] * cn);
  };
  cplx f_prev = rot * c[0]; // memory integral vanishes at t = 0
  for (std::size_t n = 1; n <= steps; ++n) {
    const cplx predictor = c[n - 1] + step * f_prev;
    const cplx f_pred = rot * predictor + memory(n, predictor);
    c[n] = c[n - 1] + 0.5 * step * (f_prev + f_pred);
    f_prev = rot * c[n] + memory(n, c[n]);
    if (!(std::abs(c[n]) <= 1.0 + 1e-3)) {
      std::ostringstream msg;
      msg << "evolve_amplitude: |C| = " << std::abs(c[n]) << " at t = " << step * n
          << " exceeds 1 + 1e-3";
      throw InstabilityError(msg.str());
    }
    // C_n closes every block whose 1-based end is n.
    for (const auto &level : levels) {
      const std::size_t b = level.size();
      if (n % b != 0)
        break;
      level.apply(&c[n - b + 1], n - b + 1, acc);
    }
  }

  AmplitudeTrajectory out;
  out.times.resize(steps + 1);
  out.amplitude = c;
  out.markov.resize(steps + 1);
  out.survival.resize(steps + 1);
  out.markov_survival.resize(steps + 1);
  for (std::size_t n = 0; n <= steps; ++n) {
    const double t = step * static_cast<double>(n);
    out.times[n] = t;
    out.markov[n] = markov_amplitude(kernel.markov_rate, kernel.delta_omega, t,
                                     markov_phase_as_printed);
    out.survival[n] = std::norm(c[n]);
    out.markov_survival[n] = std::norm(out.markov[n]);
  }
  return out;
}

cplx markov_amplitude(double gamma, double delta_omega, double t,
                      bool phase_as_printed) {
  const double phase = phase_as_printed ? delta_omega : -delta_omega;
  return std::exp(cplx(-0.5 * gamma, phase) * t);
}

} // namespace relemit
