#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace relemit::numerics {

// Gauss–Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussRule gauss_legendre(int n);

// Fixed-order pairwise summation: the reduction tree depends only on the
// length of the input, so results are bit-stable across thread counts.
double pairwise_sum(std::span<const double> values);

// Runs body(i) for i in [0, n) on up to `threads` threads with a static
// schedule. The first exception thrown by any iteration is rethrown.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)> &body);

// 21-point Kronrod extension of the 10-point Gauss rule on [-1, 1]:
// shared abscissae, Kronrod weights, and Gauss weights (zero at
// Kronrod-only nodes). Index 0 is the centre.
struct KronrodTable {
  std::array<double, 11> x;
  std::array<double, 11> wk;
  std::array<double, 11> wg;
};
const KronrodTable &kronrod21();

template <std::size_t N> struct AdaptiveResultN {
  std::array<double, N> value{};
  double error = 0.0; // absolute, summed over components and panels
  std::size_t evaluations = 0;
  bool converged = false;
};

// Globally adaptive 21-point Gauss–Kronrod for integrands returning
// std::array<double, N>: the panel with the largest error is bisected
// first. Initial panels are the consecutive `breaks` (sorted). Stops when
// error <= max(abs_tol, rel_tol * Σ|value_c|) or after `max_panels` panels.
template <std::size_t N, class F>
AdaptiveResultN<N> integrate_adaptive_n(F &&f, std::span<const double> breaks,
                                        double rel_tol, double abs_tol = 0.0,
                                        std::size_t max_panels = 400) {
  using Values = std::array<double, N>;
  struct Panel {
    double a, b;
    Values value;
    double error;
  };
  const auto &t = kronrod21();
  auto evaluate = [&](double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    Values k{}, g{};
    auto accumulate = [&](const Values &fx, double wk, double wg) {
      for (std::size_t c = 0; c < N; ++c) {
        k[c] += wk * fx[c];
        g[c] += wg * fx[c];
      }
    };
    accumulate(f(mid), t.wk[0], t.wg[0]);
    for (std::size_t i = 1; i < t.x.size(); ++i) {
      accumulate(f(mid - half * t.x[i]), t.wk[i], t.wg[i]);
      accumulate(f(mid + half * t.x[i]), t.wk[i], t.wg[i]);
    }
    Panel p{a, b, {}, 0.0};
    for (std::size_t c = 0; c < N; ++c) {
      p.value[c] = k[c] * half;
      p.error += std::abs((k[c] - g[c]) * half);
    }
    return p;
  };
  auto by_error = [](const Panel &l, const Panel &r) { return l.error < r.error; };

  AdaptiveResultN<N> out;
  std::vector<Panel> heap;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    if (breaks[i + 1] > breaks[i])
      heap.push_back(evaluate(breaks[i], breaks[i + 1]));
  out.evaluations = 21 * heap.size();

  auto totals = [&] {
    Values v{};
    double e = 0.0;
    for (const auto &p : heap) {
      for (std::size_t c = 0; c < N; ++c)
        v[c] += p.value[c];
      e += p.error;
    }
    return std::pair{v, e};
  };
  auto target = [&](const Values &v) {
    double s = 0.0;
    for (double x : v)
      s += std::abs(x);
    return std::max(abs_tol, rel_tol * s);
  };

  std::make_heap(heap.begin(), heap.end(), by_error);
  auto [value, error] = totals();
  while (!heap.empty() && error > target(value) && heap.size() < max_panels) {
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const Panel worst = heap.back();
    const double m = 0.5 * (worst.a + worst.b);
    if (!(m > worst.a && m < worst.b)) {
      std::push_heap(heap.begin(), heap.end(), by_error);
      break;
    }
    heap.back() = evaluate(worst.a, m);
    std::push_heap(heap.begin(), heap.end(), by_error);
    heap.push_back(evaluate(m, worst.b));
    std::push_heap(heap.begin(), heap.end(), by_error);
    out.evaluations += 42;
    // Running totals only steer the loop; the result is re-summed below.
    error = 0.0;
    for (const auto &p : heap)
      error += p.error;
    for (std::size_t c = 0; c < N; ++c) {
      value[c] = 0.0;
      for (const auto &p : heap)
        value[c] += p.value[c];
    }
  }
  // Sum in abscissa order so the result does not depend on heap layout.
  std::sort(heap.begin(), heap.end(),
            [](const Panel &l, const Panel &r) { return l.a < r.a; });
  std::tie(value, error) = totals();
  out.value = value;
  out.error = error;
  out.converged = error <= target(value);
  return out;
}

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

AdaptiveResult integrate_adaptive(const std::function<double(double)> &f,
                                  std::span<const double> breaks, double rel_tol,
                                  double abs_tol = 0.0, std::size_t max_panels = 400);

} // namespace relemit::numerics
