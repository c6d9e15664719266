#include <gtest/gtest.h>

#include "finsler/cartan.hpp"
#include "finsler/metrics.hpp"
#include "finsler/sampling.hpp"
#include "oracles/catalog.hpp"
#include "oracles/hermitian.hpp"
#include "oracles/real_metrics.hpp"
#include "oracles/riemann.hpp"

using namespace finsler;

namespace {

Vec random_point(Rng& rng, int dim, double radius) { return rng.unit_vector(dim) * (radius * rng.uniform()); }

oracle::LVec lvec(const Vec& v) { return v.cast<long double>(); }

/// Real matrix of the realified Hermitian form h: G = a^T P a + b^T P b + 2 a^T Q b.
oracle::MatrixField realified(const oracle::HFun& h) {
  return [h](const oracle::LVec& x) {
    const int n = static_cast<int>(x.size() / 2);
    CVec z(n);
    for (int a = 0; a < n; ++a) z[a] = cd(static_cast<double>(x[a]), static_cast<double>(x[n + a]));
    const CMat H = h(z);
    oracle::LMat A(2 * n, 2 * n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        A(a, b) = A(n + a, n + b) = H(a, b).real();
        A(a, n + b) = H(a, b).imag();
        A(n + a, b) = -H(a, b).imag();
      }
    return A;
  };
}

}  // namespace

TEST(Cartan, EuclideanCoefficientsVanish) {
  auto m = realify_metric(oracle::metric("euclidean2"));
  Rng rng(3);
  auto d = cartan(*m, random_point(rng, 4, 3.0), rng.unit_vector(4));
  EXPECT_LT(d.spray.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(d.nonlinear.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(d.horizontal.max_abs(), 1e-15);
  EXPECT_LT(d.vertical.max_abs(), 1e-15);
  EXPECT_LT(d.riemann.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(d.flag_curvature(rng.unit_vector(4)), 0.0, 1e-14);
}

TEST(Cartan, LocallyMinkowskiIsFlat) {
  Rng rng(5);
  for (const char* name : {"minkowski2", "minkowski_p3", "szabo_euclid"}) {
    auto m = realify_metric(oracle::metric(name));
    for (int s = 0; s < 10; ++s) {
      const Vec x = random_point(rng, 4, 2.0), u = rng.unit_vector(4), X = rng.unit_vector(4);
      auto d = cartan(*m, x, u);
      EXPECT_LT(d.horizontal.max_abs(), 1e-9) << name;
      EXPECT_LT(d.nonlinear.cwiseAbs().maxCoeff(), 1e-9) << name;
      EXPECT_NEAR(d.flag_curvature(X), 0.0, 1e-7) << name;
    }
  }
}

TEST(Cartan, PoincareDiskCenterAndFlags) {
  auto m = realify_metric(oracle::metric("poincare_disk"));
  Rng rng(7);
  auto c = cartan(*m, Vec::Zero(2), rng.unit_vector(2));
  EXPECT_LT(c.nonlinear.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(c.flag_curvature(rng.unit_vector(2)), -4.0, 1e-12);
  for (int s = 0; s < 50; ++s) {
    const Vec x = random_point(rng, 2, 0.9);
    EXPECT_NEAR(flag_curvature(*m, x, rng.unit_vector(2), rng.unit_vector(2)), -4.0, 1e-5);
  }
}

TEST(Cartan, RiemannianMatchesChristoffelOracle) {
  oracle::WarpedRiemann m;
  const auto A = oracle::WarpedRiemann::matrix();
  Rng rng(11);
  for (int s = 0; s < 8; ++s) {
    const Vec x = random_point(rng, 3, 1.2), u = rng.normal_vector(3), X = rng.normal_vector(3);
    const oracle::LMat gam = oracle::christoffel(A, lvec(x));
    auto d = cartan(m, x, u);
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) {
        double nl = 0.0;
        for (int k = 0; k < 3; ++k) {
          EXPECT_NEAR(d.horizontal(j, i, k), static_cast<double>(gam(j, i * 3 + k)), 1e-9);
          nl += static_cast<double>(gam(j, i * 3 + k)) * u[k];
        }
        EXPECT_NEAR(d.nonlinear(j, i), nl, 1e-9);
      }
    const double K = static_cast<double>(oracle::sectional_curvature(A, lvec(x), lvec(u), lvec(X)));
    EXPECT_NEAR(d.flag_curvature(X), K, 1e-6);
    // Either vector may be the flag pole.
    EXPECT_NEAR(flag_curvature(m, x, X, u), K, 1e-6);
    // No fibre dependence for a quadratic metric.
    auto d2 = cartan(m, x, rng.normal_vector(3), 3);
    for (std::size_t k = 0; k < d.horizontal.size(); ++k)
      EXPECT_NEAR(d.horizontal.data()[k], d2.horizontal.data()[k], 1e-10);
    EXPECT_LT(d.vertical.max_abs(), 1e-10);
  }
}

TEST(Cartan, RealifiedHermitianMatchesOracle) {
  struct Case {
    const char* name;
    oracle::HFun h;
    double radius;
  };
  const std::vector<Case> cases = {{"poincare_ball2", oracle::ball_h, 0.8},
                                   {"bidisk", oracle::bidisk_h, 0.8},
                                   {"conformal2", [](const CVec& z) { return oracle::conformal_h(z, 0.5); }, 1.5}};
  Rng rng(13);
  for (const auto& c : cases) {
    auto m = realify_metric(oracle::metric(c.name));
    const auto A = realified(c.h);
    for (int s = 0; s < 6; ++s) {
      Vec x = Vec::Zero(4);
      if (std::string(c.name) == "bidisk") {
        x[0] = 0.6 * rng.uniform(-1, 1);
        x[2] = 0.6 * rng.uniform(-1, 1);
        x[1] = 0.6 * rng.uniform(-1, 1);
        x[3] = 0.6 * rng.uniform(-1, 1);
      } else {
        x = random_point(rng, 4, c.radius);
      }
      const Vec u = rng.normal_vector(4), X = rng.normal_vector(4);
      const double K = static_cast<double>(oracle::sectional_curvature(A, lvec(x), lvec(u), lvec(X)));
      EXPECT_NEAR(flag_curvature(*m, x, u, X), K, 1e-6) << c.name;
    }
  }
}

TEST(Cartan, FunkMetricHasConstantFlagCurvature) {
  oracle::FunkMetric m;
  Rng rng(17);
  double vertical = 0.0;
  for (int s = 0; s < 30; ++s) {
    const Vec x = random_point(rng, 2, 0.7), u = rng.unit_vector(2), X = rng.unit_vector(2);
    auto d = cartan(m, x, u);
    vertical = std::max(vertical, d.vertical.max_abs());
    EXPECT_LT(d.cartan_radial, 1e-10);
    EXPECT_NEAR(d.flag_curvature(X), -0.25, 1e-8);
  }
  EXPECT_GT(vertical, 1e-2);  // genuinely non-Riemannian away from the center
}

TEST(Cartan, FlagCurvatureInvariances) {
  Rng rng(19);
  for (const char* name : {"szabo_poincare", "unitary_exp", "szabo_k3"}) {
    auto m = realify_metric(oracle::metric(name));
    for (int s = 0; s < 5; ++s) {
      const Vec x = random_point(rng, 4, 0.6), u = rng.unit_vector(4), X = rng.unit_vector(4);
      auto d = cartan(*m, x, u);
      const double k = d.flag_curvature(X);
      const double c = rng.uniform(-3, 3);
      EXPECT_NEAR(d.flag_curvature(X + c * u), k, 1e-8) << name;
      EXPECT_NEAR(d.flag_curvature(-2.5 * X), k, 1e-8) << name;
      // Flag curvature only depends on the direction of the pole.
      EXPECT_NEAR(flag_curvature(*m, x, 3.0 * u, X), k, 1e-8) << name;
    }
  }
}

TEST(Cartan, CartanTensorAnnihilatesDirection) {
  Rng rng(23);
  for (const char* name : {"szabo_poincare", "minkowski_p3", "szabo_k3", "unitary_exp"}) {
    auto m = realify_metric(oracle::metric(name));
    for (int s = 0; s < 5; ++s) {
      auto d = cartan(*m, random_point(rng, 4, 0.6), rng.unit_vector(4), 3);
      EXPECT_LT(d.cartan_radial, 1e-10) << name;
    }
  }
}

TEST(Cartan, SprayValuesAgree) {
  Rng rng(29);
  auto m = realify_metric(oracle::metric("szabo_poincare"));
  const Vec x = random_point(rng, 4, 0.6), u = rng.normal_vector(4);
  auto d = cartan(*m, x, u);
  const Vec s = spray(*m, x, u);
  EXPECT_LT((s - d.spray).cwiseAbs().maxCoeff(), 1e-12);
  // Homogeneity: G^i(x, lambda u) = lambda^2 G^i(x, u), and N u = 2 G.
  EXPECT_LT((spray(*m, x, 2.0 * u) - 4.0 * s).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((d.nonlinear * u - 2.0 * s).cwiseAbs().maxCoeff(), 1e-12);
  const auto sj = spray_jet(*m, x, u, 3);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(sj[i].value(), s[i], 1e-12);
}

TEST(Cartan, Errors) {
  auto m = realify_metric(oracle::metric("poincare_disk"));
  Vec x(2), u(2);
  x << 0.1, 0.2;
  u << 1.0, 0.5;
  auto d = cartan(*m, x, u);
  EXPECT_THROW(d.flag_curvature(3.0 * u), DegeneracyError);
  EXPECT_THROW(cartan(*m, x, u, 5), ConfigError);
  auto d3 = cartan(*m, x, u, 3);
  EXPECT_THROW(d3.flag_curvature(Vec::Unit(2, 0)), StructuralError);
  Vec far(2);
  far << 1.2, 0.0;
  EXPECT_THROW(cartan(*m, far, u), DomainError);
}
