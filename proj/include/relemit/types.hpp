#pragma once

#include <Eigen/Dense>

#include <complex>

namespace relemit {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using RealTensor3 = Eigen::Matrix3d;
// Row index = field point, column index = source point.
using ComplexTensor3 = Eigen::Matrix3cd;

// Photon wavevector k′ (scaled units of ω_A/c).
class WaveVector {
public:
  WaveVector() : components_(Vec3::Zero()) {}
  explicit WaveVector(const Vec3 &components) : components_(components) {}
  WaveVector(double magnitude, const Vec3 &direction)
      : components_(magnitude * direction.normalized()) {}

  const Vec3 &components() const noexcept { return components_; }
  double magnitude() const noexcept { return components_.norm(); }
  // Unit direction; ẑ for the null vector so projectors stay well defined.
  Vec3 direction() const {
    const double m = magnitude();
    return m > 0.0 ? Vec3(components_ / m) : Vec3::UnitZ();
  }

private:
  Vec3 components_;
};

} // namespace relemit
