#include <gtest/gtest.h>

#include <cmath>

#include "finsler/schwarz.hpp"
#include "oracles/catalog.hpp"

using namespace finsler;

namespace {

CVec cvec(std::initializer_list<cd> v) {
  CVec r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (cd x : v) r[i++] = x;
  return r;
}

HolomorphicMap map(const Json& j) { return HolomorphicMap::from_json(j); }

SchwarzOptions small_plan() {
  SchwarzOptions o;
  o.plan.radii = 4;
  o.plan.angles = 5;
  o.plan.directions = 3;
  o.plan.r_max = 0.9;
  return o;
}

}  // namespace

TEST(Gaussian, ClosedFormDensities) {
  const DensityJet poincare = [](const RJet& s, const RJet& t) {
    const RJet q = 1.0 - (s * s + t * t);
    return 1.0 / (q * q);
  };
  for (cd z : {cd(0, 0), cd(0.3, -0.4), cd(0.9, 0.05)}) EXPECT_NEAR(gaussian_curvature(poincare, z), -4.0, 1e-8);
  const DensityJet flat = [](const RJet& s, const RJet&) { return 0.0 * s + 3.0; };
  EXPECT_EQ(gaussian_curvature(flat, cd(0.2, 0.1)), 0.0);
  const DensityJet gauss = [](const RJet& s, const RJet& t) { return exp(s * s + t * t); };
  EXPECT_NEAR(gaussian_curvature(gauss, 0.0), -2.0, 1e-14);
  EXPECT_NEAR(gaussian_curvature(gauss, cd(0.5, 0.5)), -2.0 * std::exp(-0.5), 1e-13);
  // Stencil route on the same densities.
  auto pv = [](double s, double t) { const double q = 1 - s * s - t * t; return 1.0 / (q * q); };
  EXPECT_NEAR(gaussian_curvature_stencil(pv, cd(0.3, -0.4)), -4.0, 1e-6);
  auto gv = [](double s, double t) { return std::exp(s * s + t * t); };
  EXPECT_NEAR(gaussian_curvature_stencil(gv, 0.0), -2.0, 1e-6);
  const DensityJet bad = [](const RJet& s, const RJet&) { return 0.0 * s - 1.0; };
  EXPECT_THROW(gaussian_curvature(bad, 0.0), DomainError);
}

TEST(Pullback, IdentityAndSquare) {
  auto P = oracle::metric("poincare_disk");
  const DiskProbe id = DiskProbe::linear(cvec({0.0}), cvec({1.0}));
  std::vector<cd> grid;
  for (double r : {0.0, 0.2, 0.5, 0.8, 0.95})
    for (double a : {0.0, 1.0, 2.5}) grid.push_back(std::polar(r, a));
  for (const auto& row : pullback(map({{"type", "identity"}}), *P, *P, id, grid)) EXPECT_NEAR(row.ratio, 1.0, 1e-14);
  const auto rows = pullback(map({{"type", "power"}, {"k", 2}}), *P, *P, id, grid);
  for (const auto& row : rows) {
    const double t = std::norm(row.zeta);
    EXPECT_NEAR(row.ratio, 4 * t / ((1 + t) * (1 + t)), 1e-12) << row.zeta;
    EXPECT_LE(row.ratio, 1.0);
  }
  // zeta = 0: sigma^2 vanishes, ratio 0.
  EXPECT_EQ(rows.front().sigma2, 0.0);
  EXPECT_EQ(rows.front().ratio, 0.0);
}

TEST(Pullback, RemovableZero) {
  // phi(zeta) = zeta^2 into the disk, f = identity: both densities vanish at 0 and the ratio is 1.
  auto P = oracle::metric("poincare_disk");
  DiskProbe sq = DiskProbe::quadratic(cvec({0.0}), cvec({0.0}), cvec({0.5}));
  const auto rows = pullback(map({{"type", "identity"}}), *P, *P, sq, {0.0, cd(0.3, 0.2)});
  EXPECT_TRUE(rows[0].removable);
  EXPECT_NEAR(rows[0].ratio, 1.0, 1e-9);
  EXPECT_NEAR(rows[1].ratio, 1.0, 1e-14);
}

TEST(Pullback, RangeViolationFlagged) {
  auto P = oracle::metric("poincare_disk");
  const auto rows =
      pullback(map({{"type", "power"}, {"k", 1}, {"c", 3.0}}), *P, *P, DiskProbe::linear(cvec({0.0}), cvec({1.0})), {0.1, 0.5});
  EXPECT_FALSE(rows[0].range_violation);
  EXPECT_TRUE(rows[1].range_violation);
}

TEST(Pullback, ReparameterizationCovariance) {
  // Densities pick up |h'|^2, the ratio is invariant.
  auto B = oracle::metric("poincare_ball2");
  auto S = oracle::metric("szabo_poincare");
  const DiskProbe phi = DiskProbe::quadratic(cvec({cd(0.1, 0.0), cd(0.0, -0.1)}), cvec({cd(0.4, 0.1), cd(0.2, 0.3)}),
                                             cvec({cd(0.1, -0.2), cd(0.05, 0.1)}));
  const cd a(0.2, -0.1);
  const double theta = 0.7;
  const DiskProbe psi = phi.precomposed(a, theta);
  const HolomorphicMap f = map({{"type", "product"},
                                {"maps", Json::array({{{"type", "power"}, {"k", 2}}, {{"type", "mobius"}, {"a", {0.1, 0.2}}}})}});
  for (cd w : {cd(0.0, 0.0), cd(0.3, 0.2), cd(-0.4, 0.1)}) {
    const cd h = std::polar(1.0, theta) * (w - a) / (1.0 - std::conj(a) * w);
    const double dh2 = std::norm(std::polar(1.0, theta) * (1.0 - std::norm(a)) / std::pow(1.0 - std::conj(a) * w, 2));
    const auto r1 = pullback(f, *S, *B, psi, {w})[0];
    const auto r0 = pullback(f, *S, *B, phi, {h})[0];
    EXPECT_NEAR(r1.lambda2, r0.lambda2 * dh2, 1e-12);
    EXPECT_NEAR(r1.sigma2, r0.sigma2 * dh2, 1e-12);
    EXPECT_NEAR(r1.ratio, r0.ratio, 1e-9);
    // Curvature of the density is also invariant.
    EXPECT_NEAR(gaussian_curvature(pullback_density_jet(*S, nullptr, psi, w)),
                gaussian_curvature(pullback_density_jet(*S, nullptr, phi, h)), 1e-9);
  }
}

TEST(Curvature, Bounds) {
  SamplePlan plan;
  plan.radii = 3;
  plan.angles = 3;
  plan.directions = 3;
  auto P = oracle::metric("poincare_disk");
  EXPECT_NEAR(curvature_bounds(*P, CurvatureRole::domain, plan).value, -4.0, 1e-6);
  EXPECT_NEAR(curvature_bounds(*P, CurvatureRole::target, plan).value, -4.0, 1e-6);
  auto M = oracle::metric("minkowski_p3");
  EXPECT_NEAR(curvature_bounds(*M, CurvatureRole::domain, plan).value, 0.0, 1e-7);
  EXPECT_THROW(curvature_bounds(*M, CurvatureRole::target, plan), HypothesisError);
  for (double c : {0.5, 3.0}) {
    auto S = instantiate({{"family", "hermitian"}, {"complex_dim", 1}, {"factors", Json::array({{{"type", "poincare"}, {"dim", 1}, {"scale", c}}})}});
    EXPECT_NEAR(curvature_bounds(*S, CurvatureRole::target, plan).value, -4.0 / c, 1e-6) << c;
  }
}

TEST(Certify, IdentityAndMobius) {
  auto P = oracle::metric("poincare_disk");
  const auto o = small_plan();
  for (const Json& f : {Json{{"type", "identity"}}, Json{{"type", "mobius"}, {"a", {0.3, -0.2}}, {"theta", 1.1}}}) {
    const SchwarzCertificate c = certify_schwarz(map(f), *P, *P, o);
    EXPECT_NEAR(c.max_ratio, 1.0, 1e-6) << f.dump();
    EXPECT_NEAR(c.bound, 1.0, 1e-6);
    EXPECT_TRUE(c.passed) << c.to_json().dump();
    EXPECT_TRUE(c.hypotheses_met);
    EXPECT_EQ(c.samples, 4 * 5 * 17 + 17);
  }
}

TEST(Certify, SquareMap) {
  auto P = oracle::metric("poincare_disk");
  const SchwarzCertificate c = certify_schwarz(map({{"type", "power"}, {"k", 2}}), *P, *P, small_plan());
  EXPECT_TRUE(c.passed);
  const double t = c.argmax_z.squaredNorm();
  EXPECT_NEAR(c.max_ratio, 4 * t / ((1 + t) * (1 + t)), 1e-8);
  EXPECT_LT(c.max_ratio, 1.0);
  EXPECT_GT(c.zero_derivative, 0);  // the origin
}

TEST(Certify, MinkowskiIntoDiskFails) {
  auto M = oracle::metric("minkowski2");
  auto P = oracle::metric("poincare_disk");
  const Json lin = {{"type", "linear"}, {"matrix", Json::array({Json::array({0.2, Json::array({0.0, 0.1})})})}};
  const SchwarzCertificate c = certify_schwarz(map(lin), *M, *P, small_plan());
  EXPECT_NEAR(c.bound, 0.0, 1e-7);
  EXPECT_GT(c.max_ratio, 1e-3);
  EXPECT_FALSE(c.passed);
  EXPECT_TRUE(c.hypotheses_met);
  const Json cst = {{"type", "constant"}, {"n", 2}, {"value", Json::array({Json::array({0.3, 0.1})})}};
  const SchwarzCertificate k = certify_schwarz(map(cst), *M, *P, small_plan());
  EXPECT_EQ(k.max_ratio, 0.0);
  EXPECT_TRUE(k.passed);
}

TEST(Certify, HypothesesUnmetStillRuns) {
  auto P = oracle::metric("poincare_disk");
  auto E = oracle::metric("euclidean1");
  const SchwarzCertificate c = certify_schwarz(map({{"type", "identity"}}), *P, *E, small_plan());
  EXPECT_FALSE(c.hypotheses_met);
  EXPECT_FALSE(c.passed);
  EXPECT_GT(c.max_ratio, 0.0);
  EXPECT_NE(c.status().find("hypotheses unmet"), std::string::npos);
}

TEST(Maximality, HermitianEqualityAndFinslerBound) {
  Rng rng(21);
  for (const char* name : {"poincare_disk", "poincare_ball2", "bidisk", "hermitian_const2"}) {
    auto m = oracle::metric(name);
    const int n = m->complex_dim();
    for (int k = 0; k < 3; ++k) {
      const CVec z = to_complex_vector(0.3 * rng.normal_vector(2 * n) / std::sqrt(2.0 * n));
      const CVec v = to_complex_vector(rng.normal_vector(2 * n));
      const MaximalityResult r = maximality_check(*m, z, v);
      EXPECT_TRUE(r.passed) << name << " excess " << r.excess;
      EXPECT_NEAR(r.extremal, r.KG, 1e-4) << name;
    }
  }
  for (const char* name : {"szabo_poincare", "szabo_k3", "unitary_exp", "minkowski_p3"}) {
    auto m = oracle::metric(name);
    for (int k = 0; k < 3; ++k) {
      const CVec z = to_complex_vector(0.3 * rng.normal_vector(4) / 2.0), v = to_complex_vector(rng.normal_vector(4));
      const MaximalityResult r = maximality_check(*m, z, v);
      EXPECT_TRUE(r.passed) << name << " excess " << r.excess;
    }
  }
}

TEST(Comparison, PoincareEqualityFixesConvention) {
  auto P = oracle::metric("poincare_disk");
  const DiskProbe id = DiskProbe::linear(cvec({0.0}), cvec({1.0}));
  for (cd z : {cd(0, 0), cd(0.5, 0.2)}) {
    const ComparisonResult c = curvature_comparison(*P, nullptr, id, z, -4.0);
    EXPECT_NEAR(c.margin, 0.0, 1e-9 * c.rhs);
  }
  auto B = oracle::metric("poincare_ball2");
  const DiskProbe phi = DiskProbe::quadratic(cvec({cd(0.1, 0.0), cd(0.0, -0.1)}), cvec({cd(0.4, 0.1), cd(0.2, 0.3)}),
                                             cvec({cd(0.1, -0.2), cd(0.05, 0.1)}));
  for (cd z : {cd(0, 0), cd(0.3, -0.2)}) EXPECT_GE(curvature_comparison(*B, nullptr, phi, z, -4.0).margin, -1e-9);
}

TEST(Maps, Validation) {
  EXPECT_THROW(map({{"type", "mobius"}, {"a", 1.5}}), ConfigError);
  EXPECT_THROW(map({{"type", "warp"}}), ConfigError);
  EXPECT_THROW(map({{"type", "power"}, {"k", 0}}), ConfigError);
  auto P = oracle::metric("poincare_ball2");
  auto D = oracle::metric("poincare_disk");
  EXPECT_THROW(certify_schwarz(map({{"type", "identity"}}), *P, *D), StructuralError);
}
