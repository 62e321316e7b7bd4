#include "relemit/emission.hpp"

#include "relemit/errors.hpp"
#include "relemit/numerics.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace relemit {

namespace {

using Terms = std::array<double, 4>;
constexpr double kPi = std::numbers::pi;
// 2/((2π)³ ħ ε₀ c²) in scaled units; the shift carries an extra 1/(2π).
constexpr double kRatePrefactor = 2.0 / (8.0 * kPi * kPi * kPi);
constexpr double kShiftPrefactor = kRatePrefactor / (2.0 * kPi);
constexpr double kInf = std::numeric_limits<double>::infinity();

Terms scaled(Terms t, double s) {
  for (double &x : t)
    x *= s;
  return t;
}

void add_to(Terms &acc, const Terms &t, double s = 1.0) {
  for (std::size_t i = 0; i < 4; ++i)
    acc[i] += s * t[i];
}

double total_of(const Terms &t) { return t[0] + t[1] + t[2] + t[3]; }

// Everything the integrands need about the emitter.
struct Emitter {
  Vec3 d;
  Vec3 v;
  Vec3 q;
  double gamma;
  double mass;
  double nu; // ω_A/γ − δω
  bool exact_spinor;
  double scale; // |d|² ω_A³, sets absolute tolerances
};

Emitter make_emitter(const AtomState &atom, double delta_omega, bool exact_spinor) {
  atom.validate();
  const double g = lorentz_gamma(atom.velocity);
  const double w = atom.transition_frequency;
  return {lab_frame_dipole(atom), atom.velocity, atom_momentum(atom), g, atom.mass,
          w / g - delta_omega, exact_spinor, atom.dipole.squaredNorm() * w * w * w};
}

Terms bracket_terms(const Emitter &e, const Vec3 &k, double omega, double transverse,
                    double longitudinal) {
  const auto b = detail::bracket_projected(e.d, e.v, k, omega, transverse,
                                           longitudinal, e.mass, e.gamma);
  Terms t = b.terms();
  if (e.exact_spinor) {
    const Vec3 after = e.v - k / (e.gamma * e.mass);
    t = scaled(t, 0.5 * spinor_overlap_factor(e.v, after));
  }
  return t;
}

std::vector<double> panel_breaks(double lo, double hi, int panels,
                                 const std::vector<double> &extra = {}) {
  std::vector<double> breaks;
  for (int i = 0; i <= panels; ++i)
    breaks.push_back(lo + (hi - lo) * i / panels);
  breaks.back() = hi;
  for (double x : extra)
    if (x > lo && x < hi)
      breaks.push_back(x);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  return breaks;
}

// Sub-interval of [lo, hi] on which nu + beta k > 0.
std::pair<double, double> positive_window(double nu, double beta, double lo, double hi) {
  if (beta == 0.0)
    return nu > 0.0 ? std::pair{lo, hi} : std::pair{lo, lo};
  const double kb = -nu / beta;
  if (beta > 0.0)
    lo = std::max(lo, kb);
  else
    hi = std::min(hi, kb);
  return {lo, hi};
}

std::vector<double> pole_frequencies(const DispersiveMedium &medium) {
  std::vector<double> out;
  for (const auto &p : medium.electric_poles())
    out.push_back(p.resonance);
  for (const auto &p : medium.magnetic_poles())
    out.push_back(p.resonance);
  return out;
}

// Breakpoints that isolate the transverse light-cone peak and the medium
// resonances along a radial line on which ω = omega_of(k).
template <class OmegaOf>
std::vector<double> radial_features(const DispersiveMedium &medium, double lo,
                                    double hi, OmegaOf omega_of) {
  std::vector<double> out;
  if (!(hi > lo))
    return out;
  auto mismatch = [&](double k) {
    const double w = omega_of(k);
    if (!(w > 0.0))
      return kInf;
    const cplx em = permittivity(medium, w) * permeability(medium, w);
    return std::abs(k * k - em * w * w) / (k * k + std::abs(em) * w * w);
  };
  constexpr int samples = 256;
  const double step = (hi - lo) / samples;
  std::vector<double> m(samples + 1);
  for (int i = 0; i <= samples; ++i)
    m[i] = mismatch(lo + i * step);
  for (int i = 1; i < samples; ++i) {
    if (!(m[i] <= m[i - 1] && m[i] <= m[i + 1]))
      continue;
    double k = lo + i * step;
    // Polish with k = Re n(ω) ω(k); keep the grid value if it wanders off.
    double kp = k;
    for (int it = 0; it < 40; ++it) {
      const double w = omega_of(kp);
      if (!(w > 0.0))
        break;
      const cplx n = std::sqrt(permittivity(medium, w) * permeability(medium, w));
      const double next = n.real() * w;
      const bool done = std::abs(next - kp) <= 1e-15 * kp;
      kp = next;
      if (done)
        break;
    }
    if (std::abs(kp - k) < 2.0 * step)
      k = kp;
    out.push_back(k);
    const double w = omega_of(k);
    if (w > 0.0) {
      const cplx em = permittivity(medium, w) * permeability(medium, w);
      const double width =
          std::max(std::abs(em.imag()) * w * w / (2.0 * k), 1e-14 * k);
      for (double f : {1.0, 8.0, 64.0}) {
        out.push_back(k - f * width);
        out.push_back(k + f * width);
      }
    }
  }
  // ω(k) is affine (or very nearly so); map pole frequencies back to k.
  const double w0 = omega_of(lo);
  const double slope = (omega_of(hi) - w0) / (hi - lo);
  if (slope != 0.0)
    for (double res : pole_frequencies(medium))
      out.push_back(lo + (res - w0) / slope);
  return out;
}

[[noreturn]] void radial_failure(const char *what, const Vec3 &khat, double error,
                                 double value) {
  std::ostringstream msg;
  msg << what << ": radial integral not converged along k̂ = (" << khat.x() << ", "
      << khat.y() << ", " << khat.z() << "), error " << error << ", value " << value
      << "; loosen quadrature.rel_tol or raise quadrature.max_panels";
  throw ConvergenceError(msg.str(), {error, value});
}

// --- angular drivers --------------------------------------------------------

struct DirectionValue {
  Terms value{};
  double error = 0.0;
  std::size_t evaluations = 0;
};
using DirectionFn = std::function<DirectionValue(const Vec3 &khat)>;

struct PolarFrame {
  Vec3 axis, e1, e2;
  double beta;

  explicit PolarFrame(const Vec3 &v) : beta(v.norm()) {
    axis = beta > 0.0 ? Vec3(v / beta) : Vec3::UnitZ();
    const Vec3 seed = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    e1 = axis.cross(seed).normalized();
    e2 = axis.cross(e1);
  }
  // Aberration map u → cos θ and its Jacobian.
  double cos_theta(double u) const { return (u + beta) / (1.0 + beta * u); }
  double jacobian(double u) const {
    const double den = 1.0 + beta * u;
    return (1.0 - beta * beta) / (den * den);
  }
  double to_u(double c) const { return (c - beta) / (1.0 - beta * c); }
  Vec3 direction(double c, double phi) const {
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    return c * axis + s * (std::cos(phi) * e1 + std::sin(phi) * e2);
  }
};

const numerics::GaussRule &cached_rule(int n) {
  static std::mutex guard;
  static std::map<int, numerics::GaussRule> rules;
  std::lock_guard lock(guard);
  auto it = rules.find(n);
  if (it == rules.end())
    it = rules.emplace(n, numerics::gauss_legendre(n)).first;
  return it->second;
}

// Directions of one polar segment [ua, ub] with n_polar × n_az nodes.
void append_segment(std::vector<detail::AngularNode> &out, const PolarFrame &frame,
                    double ua, double ub, int n_polar, int n_az) {
  const auto &rule = cached_rule(n_polar);
  const double mid = 0.5 * (ua + ub);
  const double half = 0.5 * (ub - ua);
  const double dphi = 2.0 * kPi / n_az;
  for (int i = 0; i < n_polar; ++i) {
    const double u = mid + half * rule.nodes[i];
    const double c = frame.cos_theta(u);
    const double w = half * rule.weights[i] * frame.jacobian(u) * dphi;
    for (int j = 0; j < n_az; ++j)
      out.push_back({frame.direction(c, dphi * (j + 0.5)), w});
  }
}

struct SphereIntegral {
  Terms value{};
  double angular_error = 0.0;
  double radial_error = 0.0;
  std::size_t directions = 0;
  std::size_t evaluations = 0;
};

// Weighted sum over a fixed node set, reduced in node order.
SphereIntegral sum_nodes(const DirectionFn &fn,
                         const std::vector<detail::AngularNode> &nodes, int threads) {
  std::vector<DirectionValue> values(nodes.size());
  numerics::parallel_for(nodes.size(), threads,
                         [&](std::size_t i) { values[i] = fn(nodes[i].khat); });
  SphereIntegral out;
  std::vector<double> column(nodes.size());
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      column[i] = nodes[i].weight * values[i].value[c];
    out.value[c] = numerics::pairwise_sum(column);
  }
  for (std::size_t i = 0; i < nodes.size(); ++i)
    column[i] = nodes[i].weight * values[i].error;
  out.radial_error = numerics::pairwise_sum(column);
  out.directions = nodes.size();
  for (const auto &v : values)
    out.evaluations += v.evaluations;
  return out;
}

// Composite Gauss–Legendre in the aberration variable with bisection of the
// segment whose n / n/2 comparison is worst.
SphereIntegral integrate_sphere(const DirectionFn &fn, const Vec3 &velocity,
                                const QuadratureSpec &quad,
                                const std::vector<double> &polar_breaks, int threads,
                                double abs_floor) {
  const PolarFrame frame(velocity);
  std::vector<double> ends{-1.0, 1.0};
  for (double c : polar_breaks)
    if (c > -1.0 && c < 1.0)
      ends.push_back(frame.to_u(c));
  std::sort(ends.begin(), ends.end());
  ends.erase(std::unique(ends.begin(), ends.end()), ends.end());

  struct Segment {
    double ua, ub;
    SphereIntegral fine;
    double estimate;
  };
  const int np = quad.n_polar, na = quad.n_azimuthal;
  const int np2 = std::max(2, np / 2), na2 = std::max(2, na / 2);
  auto evaluate = [&](double ua, double ub) {
    std::vector<detail::AngularNode> fine, coarse;
    append_segment(fine, frame, ua, ub, np, na);
    append_segment(coarse, frame, ua, ub, np2, na2);
    Segment s{ua, ub, sum_nodes(fn, fine, threads), 0.0};
    const auto c = sum_nodes(fn, coarse, threads);
    for (std::size_t t = 0; t < 4; ++t)
      s.estimate += std::abs(s.fine.value[t] - c.value[t]);
    s.fine.directions += c.directions;
    s.fine.evaluations += c.evaluations;
    return s;
  };

  std::vector<Segment> segments;
  for (std::size_t i = 0; i + 1 < ends.size(); ++i)
    segments.push_back(evaluate(ends[i], ends[i + 1]));
  auto summary = [&] {
    std::sort(segments.begin(), segments.end(),
              [](const Segment &l, const Segment &r) { return l.ua < r.ua; });
    SphereIntegral out;
    std::vector<double> column(segments.size());
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t i = 0; i < segments.size(); ++i)
        column[i] = segments[i].fine.value[c];
      out.value[c] = numerics::pairwise_sum(column);
    }
    for (const auto &s : segments) {
      out.angular_error += s.estimate;
      out.radial_error += s.fine.radial_error;
      out.directions += s.fine.directions;
      out.evaluations += s.fine.evaluations;
    }
    return out;
  };
  for (;;) {
    const auto now = summary();
    const double size = std::abs(now.value[0]) + std::abs(now.value[1]) +
                        std::abs(now.value[2]) + std::abs(now.value[3]);
    if (now.angular_error <= std::max(quad.angular_tol * size, abs_floor) ||
        static_cast<int>(segments.size()) >= quad.max_polar_segments)
      return now;
    const auto worst = std::max_element(
        segments.begin(), segments.end(),
        [](const Segment &l, const Segment &r) { return l.estimate < r.estimate; });
    const double ua = worst->ua, ub = worst->ub, um = 0.5 * (ua + ub);
    *worst = evaluate(ua, um);
    segments.push_back(evaluate(um, ub));
  }
}

// --- integrands per direction -----------------------------------------------

DirectionFn rate_integrand(const Emitter &e, const GreenSource &source,
                           const QuadratureSpec &quad) {
  if (std::holds_alternative<VacuumShell>(source)) {
    return [&e](const Vec3 &khat) {
      DirectionValue out;
      if (!(e.nu > 0.0))
        return out;
      // Composed delta: ω = |k| = ν/(1 − v·k̂), Jacobian 1/(1 − v·k̂).
      const double a = 1.0 - e.v.dot(khat);
      const double k = e.nu / a;
      const auto shell = vacuum_im_green_shell(k);
      out.value = scaled(bracket_terms(e, k * khat, k, shell.scale, 0.0), k * k / a);
      out.evaluations = 1;
      return out;
    };
  }
  const auto &medium = std::get<SmoothBulk>(source).medium;
  return [&e, &quad, &medium](const Vec3 &khat) {
    DirectionValue out;
    const double beta = e.v.dot(khat);
    const auto [lo, hi] = positive_window(e.nu, beta, 0.0, quad.k_max);
    if (!(hi > lo))
      return out;
    auto omega_of = [&](double k) { return e.nu + beta * k; };
    auto f = [&](double k) -> Terms {
      const double w = omega_of(k);
      if (!(w > 0.0) || k == 0.0)
        return {};
      const auto g = bulk_green_k(medium, k, w);
      return scaled(
          bracket_terms(e, k * khat, w, g.transverse.imag(), g.longitudinal.imag()),
          k * k);
    };
    const auto breaks =
        panel_breaks(lo, hi, quad.radial_nodes, radial_features(medium, lo, hi, omega_of));
    const auto r = numerics::integrate_adaptive_n<4>(
        f, breaks, quad.rel_tol, quad.rel_tol * 1e-3 * e.scale, quad.max_panels);
    if (!r.converged)
      radial_failure("decay_rate", khat, r.error, total_of(r.value));
    out.value = r.value;
    out.error = r.error;
    out.evaluations = r.evaluations;
    return out;
  };
}

// P∫_0^U h(x)/(x − p) dx with symmetric-window pole subtraction.
template <class H>
DirectionValue principal_value(H h, double upper, double pole,
                               const QuadratureSpec &quad, double abs_tol,
                               const std::vector<double> &features, bool &converged) {
  DirectionValue out;
  auto piece = [&](double a, double b, auto &&g) {
    if (!(b > a))
      return;
    const int panels = std::max(
        1, static_cast<int>(std::ceil(quad.radial_nodes * (b - a) / upper)));
    const auto r = numerics::integrate_adaptive_n<4>(
        g, panel_breaks(a, b, panels, features), quad.rel_tol, abs_tol, quad.max_panels);
    add_to(out.value, r.value);
    out.error += r.error;
    out.evaluations += r.evaluations;
    converged = converged && r.converged;
  };
  auto plain = [&](double x) { return scaled(h(x), 1.0 / (x - pole)); };
  if (!(pole > 0.0) || pole >= upper) {
    piece(0.0, upper, plain);
    return out;
  }
  const double half = quad.pv_window * pole;
  const double lo = std::max(pole - half, 0.0);
  const double hi = std::min(pole + half, upper);
  const Terms hp = h(pole);
  auto subtracted = [&](double x) {
    Terms t = h(x);
    for (std::size_t c = 0; c < 4; ++c)
      t[c] = (t[c] - hp[c]) / (x - pole);
    return t;
  };
  piece(0.0, lo, plain);
  piece(lo, pole, subtracted);
  piece(pole, hi, subtracted);
  piece(hi, upper, plain);
  // ∫ hp/(x − p) over the window; zero when the window is symmetric.
  if (hi - pole != pole - lo)
    add_to(out.value, hp, std::log((hi - pole) / (pole - lo)));
  return out;
}

DirectionFn shift_integrand(const Emitter &e, const GreenSource &source,
                            const QuadratureSpec &quad) {
  const double cutoff = quad.omega_cutoff;
  const double abs_tol = quad.rel_tol * 1e-3 * e.scale;
  if (std::holds_alternative<VacuumShell>(source)) {
    return [&e, &quad, cutoff, abs_tol](const Vec3 &khat) {
      // On the shell k = ω; the denominator ω − ν − v·k is a (k − ν/a).
      const double a = 1.0 - e.v.dot(khat);
      auto h = [&](double k) -> Terms {
        if (k <= 0.0)
          return {};
        const auto shell = vacuum_im_green_shell(k);
        return scaled(bracket_terms(e, k * khat, k, shell.scale, 0.0), k * k / a);
      };
      bool ok = true;
      auto out = principal_value(h, cutoff, e.nu / a, quad, abs_tol, {}, ok);
      if (!ok)
        radial_failure("lamb_shift", khat, out.error, total_of(out.value));
      return out;
    };
  }
  const auto &medium = std::get<SmoothBulk>(source).medium;
  return [&e, &quad, &medium, cutoff, abs_tol](const Vec3 &khat) {
    const double beta = e.v.dot(khat);
    const auto poles = pole_frequencies(medium);
    std::size_t evals = 0;
    bool ok = true;
    auto radial = [&](double k) -> Terms {
      if (k <= 0.0)
        return {};
      auto h = [&](double w) -> Terms {
        if (w <= 0.0)
          return {};
        const auto g = bulk_green_k(medium, k, w);
        return scaled(
            bracket_terms(e, k * khat, w, g.transverse.imag(), g.longitudinal.imag()),
            k * k);
      };
      // Light cone in ω at fixed k: ω = k / Re n(ω).
      std::vector<double> features = poles;
      double w = k;
      for (int it = 0; it < 40; ++it) {
        const cplx n = std::sqrt(permittivity(medium, w) * permeability(medium, w));
        const double next = k / n.real();
        if (!(next > 0.0))
          break;
        const bool done = std::abs(next - w) <= 1e-14 * w;
        w = next;
        if (done)
          break;
      }
      features.push_back(w);
      const auto r =
          principal_value(h, cutoff, e.nu + beta * k, quad, abs_tol, features, ok);
      evals += r.evaluations;
      return r.value;
    };
    const auto r = numerics::integrate_adaptive_n<4>(
        radial, panel_breaks(0.0, quad.k_max, quad.radial_nodes), quad.rel_tol, abs_tol,
        quad.max_panels);
    if (!r.converged || !ok)
      radial_failure("lamb_shift", khat, r.error, total_of(r.value));
    return DirectionValue{r.value, r.error, evals};
  };
}

DirectionFn spectral_integrand(const Emitter &e, const GreenSource &source,
                               const QuadratureSpec &quad, double nu) {
  const double cutoff = quad.omega_cutoff;
  if (std::holds_alternative<VacuumShell>(source)) {
    return [&e, cutoff, nu](const Vec3 &khat) {
      DirectionValue out;
      if (!(nu > 0.0))
        return out;
      // F(k) = k − Δ_E(k k̂) − ν increases: F′ = 1 − v′·k̂ with |v′| < 1.
      auto F = [&](double k) {
        return k - energy_difference_stable(e.q, k * khat, e.mass) - nu;
      };
      auto slope = [&](double k) {
        const Vec3 after = e.q - k * khat;
        return 1.0 - after.dot(khat) / dirac_energy(after, e.mass);
      };
      if (!(F(cutoff) > 0.0))
        return out;
      double lo = 0.0, hi = cutoff;
      double k = std::clamp(nu / (1.0 - e.v.dot(khat)), lo, hi);
      for (int it = 0; it < 100; ++it) {
        const double f = F(k);
        (f > 0.0 ? hi : lo) = k;
        double next = k - f / slope(k);
        if (!(next > lo && next < hi))
          next = 0.5 * (lo + hi);
        const bool done = std::abs(next - k) <= 1e-15 * k;
        k = next;
        if (done)
          break;
      }
      const auto shell = vacuum_im_green_shell(k);
      out.value = scaled(bracket_terms(e, k * khat, k, shell.scale, 0.0),
                         k * k / slope(k));
      out.evaluations = 1;
      return out;
    };
  }
  const auto &medium = std::get<SmoothBulk>(source).medium;
  return [&e, &quad, &medium, cutoff, nu](const Vec3 &khat) {
    DirectionValue out;
    auto omega_of = [&](double k) {
      return nu + energy_difference_stable(e.q, k * khat, e.mass);
    };
    // ω(k) is monotone on [0, k_max] since k_max ≪ γM; keep 0 < ω < Λ.
    const double w0 = omega_of(0.0), w1 = omega_of(quad.k_max);
    double lo = 0.0, hi = quad.k_max;
    for (double level : {0.0, cutoff}) {
      if ((w0 - level) * (w1 - level) < 0.0) {
        auto g = [&](double k) { return omega_of(k) - level; };
        boost::math::tools::eps_tolerance<double> tol(52);
        std::uintmax_t iters = 200;
        const auto r = boost::math::tools::toms748_solve(g, 0.0, quad.k_max, tol, iters);
        const double kc = 0.5 * (r.first + r.second);
        if ((level == 0.0) == (w1 > w0))
          lo = std::max(lo, kc);
        else
          hi = std::min(hi, kc);
      } else if (level == 0.0 ? std::max(w0, w1) <= 0.0
                              : std::min(w0, w1) >= cutoff) {
        return out;
      }
    }
    if (!(hi > lo))
      return out;
    auto f = [&](double k) -> Terms {
      const double w = omega_of(k);
      if (!(w > 0.0 && w < cutoff) || k == 0.0)
        return {};
      const auto g = bulk_green_k(medium, k, w);
      return scaled(
          bracket_terms(e, k * khat, w, g.transverse.imag(), g.longitudinal.imag()),
          k * k);
    };
    const auto breaks =
        panel_breaks(lo, hi, quad.radial_nodes, radial_features(medium, lo, hi, omega_of));
    const auto r = numerics::integrate_adaptive_n<4>(
        f, breaks, quad.rel_tol, quad.rel_tol * 1e-3 * e.scale, quad.max_panels);
    if (!r.converged)
      radial_failure("spectral_rate", khat, r.error, total_of(r.value));
    out.value = r.value;
    out.error = r.error;
    out.evaluations = r.evaluations;
    return out;
  };
}

// Polar angles (cos θ about v̂) at which the bulk radial integrand changes
// character: the cap ν/(−v·k̂) reaching k_max, and the light-cone peak
// k = Re n(ω) ω crossing k_max.
std::vector<double> bulk_polar_breaks(const DispersiveMedium &medium, double nu,
                                      double speed, double k_max) {
  std::vector<double> out;
  if (!(speed > 0.0))
    return out;
  out.push_back(-nu / (speed * k_max));
  const double w_hi = nu + speed * k_max;
  const double w_lo = std::max(nu - speed * k_max, 1e-9);
  if (!(w_hi > w_lo))
    return out;
  auto excess = [&](double w) {
    return std::sqrt(permittivity(medium, w) * permeability(medium, w)).real() * w -
           k_max;
  };
  constexpr int samples = 2048;
  const double step = (w_hi - w_lo) / samples;
  double prev_w = w_lo;
  double prev = excess(prev_w);
  for (int i = 1; i <= samples; ++i) {
    const double w = w_lo + i * step;
    const double cur = excess(w);
    if ((prev < 0.0) != (cur < 0.0)) {
      boost::math::tools::eps_tolerance<double> tol(50);
      std::uintmax_t iters = 100;
      const auto r =
          boost::math::tools::toms748_solve(excess, prev_w, w, prev, cur, tol, iters);
      out.push_back((0.5 * (r.first + r.second) - nu) / (speed * k_max));
    }
    prev_w = w;
    prev = cur;
  }
  return out;
}

double resolve_fixed_shift(const EmissionOptions &opts) {
  return opts.shift.kind == ShiftKind::fixed ? opts.shift.value : 0.0;
}

void check_cutoff_cell(double nu, const QuadratureSpec &quad) {
  const double cell = quad.omega_cutoff / (21.0 * quad.radial_nodes);
  if (std::abs(quad.omega_cutoff - nu) < cell) {
    std::ostringstream msg;
    msg << "lamb_shift: resonance " << nu << " lies within one grid cell (" << cell
        << ") of omega_cutoff " << quad.omega_cutoff;
    throw ConfigurationError(msg.str());
  }
}

} // namespace

void QuadratureSpec::validate() const {
  if (n_polar < 2)
    throw ValidationError("quadrature.n_polar", "must be >= 2");
  if (n_azimuthal < 2)
    throw ValidationError("quadrature.n_azimuthal", "must be >= 2");
  if (radial_nodes < 2)
    throw ValidationError("quadrature.radial_nodes", "must be >= 2");
  if (!(k_max > 1.0) || !std::isfinite(k_max))
    throw ValidationError("quadrature.k_max", "must be finite and > 1");
  if (!(omega_cutoff > 1.0) || !std::isfinite(omega_cutoff))
    throw ValidationError("quadrature.omega_cutoff", "must be finite and > 1");
  if (!(pv_window > 0.0 && pv_window < 1.0))
    throw ValidationError("quadrature.pv_window", "must lie in (0, 1)");
  if (!(rel_tol > 0.0 && rel_tol < 1.0))
    throw ValidationError("quadrature.rel_tol", "must lie in (0, 1)");
  if (max_panels < 16)
    throw ValidationError("quadrature.max_panels", "must be >= 16");
  if (!(angular_tol > 0.0 && angular_tol < 1.0))
    throw ValidationError("quadrature.angular_tol", "must lie in (0, 1)");
  if (max_polar_segments < 1)
    throw ValidationError("quadrature.max_polar_segments", "must be >= 1");
}

QuadratureSpec QuadratureSpec::refined() const {
  QuadratureSpec q = *this;
  q.n_polar *= 2;
  q.n_azimuthal *= 2;
  q.radial_nodes *= 2;
  return q;
}

ShiftMode ShiftMode::parse(const std::string &text) {
  if (text == "zero")
    return {};
  if (text == "self-consistent" || text == "self_consistent")
    return {ShiftKind::self_consistent, 0.0};
  if (text.rfind("fixed:", 0) == 0) {
    const std::string number = text.substr(6);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(number, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used == 0 || used != number.size() || !std::isfinite(value))
      throw ValidationError("run.shift_mode", "bad fixed value '" + number + "'");
    return {ShiftKind::fixed, value};
  }
  throw ValidationError("run.shift_mode",
                        "expected zero, fixed:<value> or self-consistent, got '" +
                            text + "'");
}

std::string ShiftMode::str() const {
  switch (kind) {
  case ShiftKind::zero:
    return "zero";
  case ShiftKind::self_consistent:
    return "self-consistent";
  case ShiftKind::fixed: {
    std::ostringstream s;
    s.precision(17);
    s << "fixed:" << value;
    return s.str();
  }
  }
  return "zero";
}

namespace detail {

std::vector<AngularNode> angular_grid(const Vec3 &velocity, int n_polar,
                                      int n_azimuthal) {
  return angular_grid(velocity, n_polar, n_azimuthal, {});
}

std::vector<AngularNode> angular_grid(const Vec3 &velocity, int n_polar,
                                      int n_azimuthal,
                                      std::vector<double> polar_breaks) {
  const PolarFrame frame(velocity);
  std::vector<double> ends{-1.0, 1.0};
  for (double c : polar_breaks)
    if (c > -1.0 && c < 1.0)
      ends.push_back(frame.to_u(c));
  std::sort(ends.begin(), ends.end());
  ends.erase(std::unique(ends.begin(), ends.end()), ends.end());
  std::vector<AngularNode> grid;
  for (std::size_t s = 0; s + 1 < ends.size(); ++s)
    append_segment(grid, frame, ends[s], ends[s + 1], n_polar, n_azimuthal);
  return grid;
}

double principal_value(const std::function<double(double)> &h, double upper,
                       double pole, const QuadratureSpec &quad) {
  quad.validate();
  bool ok = true;
  const auto r = ::relemit::principal_value(
      [&](double x) { return Terms{h(x), 0.0, 0.0, 0.0}; }, upper, pole, quad, 0.0,
      {}, ok);
  if (!ok)
    throw ConvergenceError("principal_value: tolerance not reached");
  return r.value[0];
}

RoentgenBracket bracket_projected(const Vec3 &d, const Vec3 &velocity, const Vec3 &k,
                                  double omega, double transverse, double longitudinal,
                                  double mass, double gamma) {
  const double kn = k.norm();
  const Vec3 khat = kn > 0.0 ? Vec3(k / kn) : Vec3::UnitZ();
  auto apply = [&](const Vec3 &x) {
    const double along = khat.dot(x);
    return Vec3(transverse * (x - along * khat) + longitudinal * along * khat);
  };
  // v×k×(T d) = (T d)·left and (T×k×w) d = T right.
  const Vec3 w = velocity - k / (gamma * mass);
  const Vec3 left = velocity * k.dot(d) - velocity.dot(k) * d;
  const Vec3 right = w * k.dot(d) - w.dot(k) * d;
  const Vec3 td = apply(d);
  const Vec3 tr = apply(right);
  return {omega * omega * d.dot(td), omega * left.dot(td), omega * d.dot(tr),
          left.dot(tr)};
}

} // namespace detail

RoentgenBracket roentgen_bracket(const Vec3 &d, const Vec3 &velocity,
                                 const WaveVector &k, double omega,
                                 const RealTensor3 &im_g, double mass, double gamma) {
  const Vec3 &kv = k.components();
  const Vec3 w = velocity - kv / (gamma * mass);
  const RealTensor3 left = left_cross(velocity, left_cross(kv, im_g));
  const RealTensor3 right = right_cross(right_cross(im_g, kv), w);
  const RealTensor3 both = left_cross(velocity, left_cross(kv, right));
  return {omega * omega * d.dot(im_g * d), omega * d.dot(left * d),
          omega * d.dot(right * d), d.dot(both * d)};
}

RoentgenBracket roentgen_bracket(const Vec3 &d, const Vec3 &velocity,
                                 const WaveVector &k, double omega,
                                 const ShellDescriptor &shell, double mass,
                                 double gamma) {
  return roentgen_bracket(d, velocity, k, omega, shell.weight(k.direction()), mass,
                          gamma);
}

double free_space_rate(const AtomState &atom) {
  const double w = atom.transition_frequency;
  return w * w * w * atom.dipole.squaredNorm() / (3.0 * kPi);
}

EmissionResult decay_rate(const AtomState &atom, const GreenSource &source,
                          const QuadratureSpec &quad, const EmissionOptions &opts) {
  quad.validate();
  if (opts.shift.kind == ShiftKind::self_consistent)
    return self_consistent_shift(atom, source, quad, opts).rate;
  const double delta = resolve_fixed_shift(opts);
  const Emitter e = make_emitter(atom, delta, opts.exact_spinor);
  std::vector<double> breaks;
  if (const auto *bulk = std::get_if<SmoothBulk>(&source))
    breaks = bulk_polar_breaks(bulk->medium, e.nu, e.v.norm(), quad.k_max);
  const auto r = integrate_sphere(rate_integrand(e, source, quad), e.v, quad, breaks,
                                  opts.threads, 1e-300);

  EmissionResult out;
  out.gamma_terms = scaled(r.value, kRatePrefactor);
  out.gamma_total = total_of(out.gamma_terms);
  const double abs_err = kRatePrefactor * (r.angular_error + r.radial_error);
  out.quadrature_error_estimate =
      out.gamma_total != 0.0 ? abs_err / std::abs(out.gamma_total) : abs_err;
  out.omega_cutoff = quad.omega_cutoff;
  out.node_counts = {r.directions, r.evaluations};
  out.delta_omega_used = delta;
  return out;
}

LambShift lamb_shift(const AtomState &atom, const GreenSource &source,
                     const QuadratureSpec &quad, const EmissionOptions &opts) {
  quad.validate();
  if (opts.shift.kind == ShiftKind::self_consistent)
    throw ConfigurationError(
        "lamb_shift: self-consistent mode needs self_consistent_shift()");
  const Emitter e = make_emitter(atom, resolve_fixed_shift(opts), opts.exact_spinor);
  check_cutoff_cell(e.nu, quad);
  const auto r = integrate_sphere(shift_integrand(e, source, quad), e.v, quad, {},
                                  opts.threads, 1e-300);
  LambShift out;
  out.terms = scaled(r.value, kShiftPrefactor);
  out.value = total_of(out.terms);
  out.omega_cutoff = quad.omega_cutoff;
  out.error_estimate = kShiftPrefactor * (r.angular_error + r.radial_error);
  out.node_counts = {r.directions, r.evaluations};
  return out;
}

SelfConsistentShift self_consistent_shift(const AtomState &atom,
                                          const GreenSource &source,
                                          const QuadratureSpec &quad,
                                          const EmissionOptions &opts, double tolerance,
                                          int max_iterations) {
  SelfConsistentShift out;
  EmissionOptions step = opts;
  double delta = 0.0;
  out.history.push_back(delta);
  for (int n = 1; n <= max_iterations; ++n) {
    step.shift = {ShiftKind::fixed, delta};
    const LambShift shift = lamb_shift(atom, source, quad, step);
    out.history.push_back(shift.value);
    const double change = std::abs(shift.value - delta);
    delta = shift.value;
    if (change < tolerance * atom.transition_frequency) {
      out.delta_omega = delta;
      out.iterations = n;
      step.shift = {ShiftKind::fixed, delta};
      out.rate = decay_rate(atom, source, quad, step);
      out.rate.lamb_shift = shift.value;
      out.rate.shift_terms = shift.terms;
      out.rate.has_lamb_shift = true;
      out.rate.shift_iterations = n;
      return out;
    }
  }
  throw ConvergenceError("self_consistent_shift: no convergence in " +
                             std::to_string(max_iterations) + " iterations",
                         out.history);
}

double spectral_rate(const AtomState &atom, const GreenSource &source,
                     const QuadratureSpec &quad, const EmissionOptions &opts,
                     double nu) {
  const Emitter e = make_emitter(atom, 0.0, opts.exact_spinor);
  const auto grid = detail::angular_grid(e.v, quad.n_polar, quad.n_azimuthal);
  const auto r = sum_nodes(spectral_integrand(e, source, quad, nu), grid, opts.threads);
  return kRatePrefactor * total_of(r.value);
}

} // namespace relemit
