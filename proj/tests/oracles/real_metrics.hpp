#pragma once

// Real metrics used only by tests.

#include <cmath>
#include <span>

#include "finsler/geometry.hpp"
#include "oracles/riemann.hpp"

namespace oracle {

/// G = u^T A(x) u on R^3 with a non-conformal, x-dependent A.
class WarpedRiemann final : public finsler::RealFamily<WarpedRiemann> {
 public:
  int real_dim() const override { return 3; }
  std::string family() const override { return "warped_test"; }
  finsler::Json definition() const override { return {{"family", "warped_test"}}; }

  template <class T>
  static T entry(std::span<const T> x, int i, int j) {
    using std::cos;
    using std::sin;
    const T w[3] = {sin(x[0]), x[1] * x[2], cos(x[1])};
    T r = w[i] * w[j] * 0.3;
    if (i == j) r = r + (1.0 + 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
    return r;
  }

  template <class T>
  T formula(std::span<const T> x, std::span<const T> u) const {
    T s = T(0.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s = s + entry<T>(x, i, j) * u[i] * u[j];
    return s;
  }

  static MatrixField matrix() {
    return [](const LVec& x) {
      LMat A(3, 3);
      std::span<const long double> xs(x.data(), 3);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) A(i, j) = entry<long double>(xs, i, j);
      return A;
    };
  }
};

/// Funk metric of the unit ball in R^2 (non-Riemannian, flag curvature -1/4), squared.
class FunkMetric final : public finsler::RealFamily<FunkMetric> {
 public:
  int real_dim() const override { return 2; }
  std::string family() const override { return "funk_test"; }
  finsler::Json definition() const override { return {{"family", "funk_test"}}; }
  bool in_domain(std::span<const double> x) const override { return x[0] * x[0] + x[1] * x[1] < 1.0; }
  double domain_radius() const override { return 1.0; }

  template <class T>
  T formula(std::span<const T> x, std::span<const T> u) const {
    using std::sqrt;
    const T xx = x[0] * x[0] + x[1] * x[1];
    const T uu = u[0] * u[0] + u[1] * u[1];
    const T xu = x[0] * u[0] + x[1] * u[1];
    const T a = 1.0 - xx;
    const T F = (sqrt(a * uu + xu * xu) + xu) / a;
    return F * F;
  }
};

}  // namespace oracle
