#include "relemit/errors.hpp"
#include "relemit/numerics.hpp"
#include "relemit/tensor_green.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace relemit;
using doctest::Approx;

namespace {

int levi(int i, int j, int k) {
  return (i - j) * (j - k) * (k - i) / 2;
}

Vec3 random_unit(std::mt19937_64 &rng) {
  std::normal_distribution<double> n;
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

ComplexTensor3 random_tensor(std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ComplexTensor3 t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      t(i, j) = {u(rng), u(rng)};
  return t;
}

const DispersiveMedium lossy({{0.5, 1.3, 0.2}}, {{0.2, 1.6, 0.3}});

} // namespace

TEST_SUITE("tensor_green") {

TEST_CASE("wave vector") {
  const WaveVector k(Vec3(3.0, 4.0, 0.0));
  CHECK(k.magnitude() == 5.0);
  CHECK(std::abs(k.direction().norm() - 1.0) < 1e-12);
  CHECK(WaveVector().direction() == Vec3::UnitZ());
}

TEST_CASE("vacuum reduction of the bulk tensor") {
  for (double k : {0.3, 1.7, 4.0})
    for (double w : {0.5, 1.0, 2.5}) {
      const auto g = bulk_green_k(cplx(1.0), cplx(1.0), k, w);
      CHECK(std::abs(g.transverse - 1.0 / (k * k - w * w)) < 1e-14 * std::abs(g.transverse));
      CHECK(std::abs(g.longitudinal + 1.0 / (w * w)) < 1e-15);
    }
}

TEST_CASE("longitudinal block does not depend on |k|") {
  const Vec3 khat = Vec3(1.0, -2.0, 0.5).normalized();
  const double w = 0.9;
  const cplx eps = permittivity(lossy, w);
  for (double k : {0.1, 1.0, 3.0, 30.0}) {
    const auto t = bulk_green_tensor(lossy, WaveVector(k, khat), w);
    const cplx kgk = khat.transpose() * t * khat;
    CHECK(std::abs(kgk + 1.0 / (eps * w * w)) < 1e-13);
  }
}

TEST_CASE("symbolic expansion of Im of the transverse block") {
  // g = μ/(k² − εμω²); Im g = |g|²(ω² Im ε + k² Im μ/|μ|²) by direct expansion.
  for (double k : {0.2, 1.1, 2.9})
    for (double w : {0.4, 1.3, 2.2}) {
      const cplx eps = permittivity(lossy, w), mu = permeability(lossy, w);
      const cplx g = mu / (k * k - eps * mu * w * w);
      const double rhs = std::norm(g) * (w * w * eps.imag() + k * k * mu.imag() / std::norm(mu));
      CHECK(bulk_green_k(lossy, k, w).transverse.imag() == Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("lossless light cone is a singularity") {
  CHECK_THROWS_AS(bulk_green_k(cplx(1.0), cplx(1.0), 2.0, 2.0), SingularityError);
  CHECK_THROWS_AS(bulk_green_k(lossy, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(SmoothBulk(DispersiveMedium::vacuum()), ModelError);
}

TEST_CASE("Im G is real symmetric and positive semidefinite") {
  std::mt19937_64 rng(7);
  for (int s = 0; s < 200; ++s) {
    const Vec3 khat = random_unit(rng);
    const double k = 4.0 * std::uniform_real_distribution<double>()(rng);
    const double w = 0.05 + 3.0 * std::uniform_real_distribution<double>()(rng);
    const auto g = bulk_green_k(lossy, k, w);
    const RealTensor3 im = g.imaginary(khat);
    CHECK((im - im.transpose()).norm() < 1e-14 * (1.0 + im.norm()));
    CHECK((im - g.tensor(khat).imag()).norm() < 1e-14 * (1.0 + im.norm()));
    const ComplexTensor3 t = g.tensor(khat);
    CHECK((t - t.transpose()).norm() < 1e-14 * (1.0 + t.norm()));
    for (int j = 0; j < 5; ++j) {
      const Vec3 d = random_unit(rng);
      CHECK(d.dot(im * d) >= -1e-14 * im.norm());
    }
  }
}

TEST_CASE("shell descriptor") {
  const double w = 1.3;
  const auto shell = vacuum_im_green_shell(w);
  const double s = std::numbers::pi / (2.0 * w);
  CHECK(shell.scale == Approx(kShellNormalization * s).epsilon(1e-15));
  CHECK(shell.weight(Vec3::UnitX()).trace() == Approx(2.0 * s).epsilon(1e-15));
  CHECK(vacuum_im_green_shell(2.0).radius == 2.0);

  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const Vec3 khat = random_unit(rng);
    CHECK((shell.weight(khat) * khat).norm() < 1e-15);
  }
  CHECK_THROWS_AS(vacuum_im_green_shell(0.0), DomainError);
}

// Area of the near-vacuum transverse Lorentzian over |k| approaches the
// shell weight π/(2ω) as the loss goes to zero.
TEST_CASE("near-vacuum Lorentzian area matches the shell weight") {
  const double w = 1.0;
  double previous = 1.0;
  for (double delta : {1e-2, 1e-3, 1e-4}) {
    const cplx e(1.0, delta);
    auto f = [&](double k) { return bulk_green_k(e, e, k, w).transverse.imag(); };
    const double width = 4.0 * delta;
    std::vector<double> breaks{0.0};
    for (double x : {w - 50 * width, w - width, w, w + width, w + 50 * width, 20.0})
      if (x > breaks.back())
        breaks.push_back(x);
    const auto r = numerics::integrate_adaptive(f, breaks, 1e-10, 0.0, 20000);
    // Beyond k = 20, Im g ≈ Im μ/k² = δ/k².
    const double tail = delta / 20.0;
    const double area = r.value + tail;
    const double rel = std::abs(area / vacuum_im_green_shell(w).scale - 1.0);
    CHECK(rel < 5.0 * delta);
    CHECK(rel <= previous);
    previous = rel;
  }
}

TEST_CASE("left_cross examples") {
  const ComplexTensor3 id = ComplexTensor3::Identity();
  const ComplexTensor3 twice = left_cross(Vec3::UnitZ(), left_cross(Vec3::UnitZ(), id));
  ComplexTensor3 want = -id;
  want(2, 2) += 1.0;
  CHECK((twice - want).norm() < 1e-15);

  std::mt19937_64 rng(3);
  const ComplexTensor3 t = random_tensor(rng);
  CHECK(left_cross(Vec3::Zero(), t).norm() == 0.0);
  CHECK(right_cross(t, Vec3::Zero()).norm() == 0.0);
}

TEST_CASE("double cross against an index-sum oracle") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int s = 0; s < 100; ++s) {
    const ComplexTensor3 t = random_tensor(rng);
    const Vec3 a(n(rng), n(rng), n(rng)), b(n(rng), n(rng), n(rng));
    const Vec3 d(n(rng), n(rng), n(rng));
    // (a×b×T)_{ij} = ε_{ipq} a_p ε_{qrs} b_r T_{sj}
    ComplexTensor3 left = ComplexTensor3::Zero(), right = ComplexTensor3::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int p = 0; p < 3; ++p)
          for (int q = 0; q < 3; ++q)
            for (int r = 0; r < 3; ++r)
              for (int u = 0; u < 3; ++u) {
                left(i, j) += double(levi(i, p, q) * levi(q, r, u)) * a(p) * b(r) * t(u, j);
                // (T×b×a)_{ij} = T_{ip} ε_{pqr} b_r ε_{qju} a_u
                right(i, j) += double(levi(p, q, r) * levi(q, j, u)) * t(i, p) * b(r) * a(u);
              }
    const ComplexTensor3 l = left_cross(a, left_cross(b, t));
    const ComplexTensor3 r = right_cross(right_cross(t, b), a);
    CHECK((l - left).norm() < 1e-12 * (1.0 + left.norm()));
    CHECK((r - right).norm() < 1e-12 * (1.0 + right.norm()));
    const cplx dl = d.transpose() * l * d, dr = d.transpose() * left * d;
    CHECK(std::abs(dl - dr) < 1e-12 * (1.0 + std::abs(dr)));
  }
}

TEST_CASE("right_cross duality and sign convention") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  for (int s = 0; s < 100; ++s) {
    const ComplexTensor3 t = random_tensor(rng);
    const Vec3 a(n(rng), n(rng), n(rng));
    const ComplexTensor3 lhs = right_cross(t, a);
    const ComplexTensor3 rhs = -left_cross(a, ComplexTensor3(t.transpose())).transpose();
    CHECK((lhs - rhs).norm() < 1e-13 * (1.0 + lhs.norm()));
  }
  // Row i of I×ẑ is ê_i × ẑ.
  const Eigen::Matrix3d r = right_cross(Eigen::Matrix3d(Eigen::Matrix3d::Identity()), Vec3::UnitZ());
  for (int i = 0; i < 3; ++i) {
    const Vec3 row = r.row(i).transpose();
    CHECK((row - Vec3::Unit(i).cross(Vec3::UnitZ())).norm() == 0.0);
  }
}

TEST_CASE("fluctuation identity residual") {
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const double k = 0.05 + 0.45 * i, w = 0.1 + 0.3 * j;
      CHECK(fluctuation_identity_residual(lossy, k, w) < 1e-10);
    }
  const cplx e(1.0, 1e-9);
  CHECK(fluctuation_identity_residual(e, e, 0.5, 1.0) < 1e-6);
  const double at_zero = fluctuation_identity_residual(lossy, 0.0, 0.8);
  CHECK(std::isfinite(at_zero));
  CHECK(at_zero < 1e-10);
}

}
