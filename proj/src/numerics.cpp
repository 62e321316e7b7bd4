#include "relemit/numerics.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <exception>
#include <mutex>
#include <stdexcept>

namespace relemit::numerics {

GaussRule gauss_legendre(int n) {
  if (n < 1)
    throw std::invalid_argument("gauss_legendre: n must be positive");
  GaussRule rule;
  rule.nodes.reserve(n);
  rule.weights.reserve(n);
  // legendre_p_zeros returns the non-negative roots in ascending order.
  const auto zeros = boost::math::legendre_p_zeros<double>(n);
  auto weight = [n](double x) {
    const double dp = boost::math::legendre_p_prime<double>(n, x);
    return 2.0 / ((1.0 - x * x) * dp * dp);
  };
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
    if (*it == 0.0)
      continue;
    rule.nodes.push_back(-*it);
    rule.weights.push_back(weight(*it));
  }
  for (double x : zeros) {
    rule.nodes.push_back(x);
    rule.weights.push_back(weight(x));
  }
  return rule;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values)
      s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)> &body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
  const long count = static_cast<long>(n);
#pragma omp parallel for num_threads(threads) schedule(static)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(guard);
      if (!failure)
        failure = std::current_exception();
    }
  }
  if (failure)
    std::rethrow_exception(failure);
}

const KronrodTable &kronrod21() {
  static const KronrodTable table = [] {
    using kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;
    using gauss = boost::math::quadrature::gauss<double, 10>;
    KronrodTable t{};
    const auto &x = kronrod::abscissa();
    const auto &wk = kronrod::weights();
    const auto &wg = gauss::weights();
    for (std::size_t i = 0; i < t.x.size(); ++i) {
      t.x[i] = x[i];
      t.wk[i] = wk[i];
      // Gauss nodes sit at the odd positions of the shared table.
      t.wg[i] = (i % 2 == 1) ? wg[i / 2] : 0.0;
    }
    return t;
  }();
  return table;
}

AdaptiveResult integrate_adaptive(const std::function<double(double)> &f,
                                  std::span<const double> breaks, double rel_tol,
                                  double abs_tol, std::size_t max_panels) {
  const auto r = integrate_adaptive_n<1>(
      [&f](double x) { return std::array<double, 1>{f(x)}; }, breaks, rel_tol,
      abs_tol, max_panels);
  return {r.value[0], r.error, r.evaluations, r.converged};
}

} // namespace relemit::numerics
