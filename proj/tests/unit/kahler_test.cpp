#include <gtest/gtest.h>

#include "finsler/kahler.hpp"
#include "finsler/metric_checks.hpp"
#include "oracles/catalog.hpp"

using namespace finsler;

namespace {

UnitaryProfile profile(const Json& j) { return UnitaryProfile::from_json(j); }

Json poly(std::initializer_list<std::array<double, 3>> terms, double t_max = 0.0) {
  Json t = Json::array();
  for (const auto& x : terms) t.push_back({static_cast<int>(x[0]), static_cast<int>(x[1]), x[2]});
  Json j = {{"kind", "poly"}, {"terms", t}};
  if (t_max > 0.0) j["t_max"] = t_max;
  return j;
}

MetricPtr unitary(const Json& prof) { return instantiate({{"family", "unitary"}, {"complex_dim", 2}, {"profile", prof}}); }

}  // namespace

TEST(Kahler, PoincareBallIsStronglyKahler) {
  auto k = classify(*oracle::metric("poincare_ball2"), SamplePlan{});
  EXPECT_LT(k.residual_strong, 1e-9);
  EXPECT_LT(k.residual_kahler, 1e-9);
  EXPECT_LT(k.residual_weak, 1e-9);
  EXPECT_EQ(k.classification, KahlerClass::strongly_kahler);
}

TEST(Kahler, MinkowskiResidualsVanish) {
  for (const char* name : {"minkowski2", "minkowski_p3", "szabo_euclid"}) {
    auto k = classify(*oracle::metric(name), SamplePlan{});
    EXPECT_LT(k.residual_strong, 1e-12) << name;
    EXPECT_EQ(k.classification, KahlerClass::strongly_kahler) << name;
  }
}

TEST(Kahler, ConformalHermitianIsNotWeaklyKahler) {
  auto k = classify(*oracle::metric("conformal2"), SamplePlan{});
  EXPECT_GT(k.residual_weak, 1e-3);
  EXPECT_EQ(k.classification, KahlerClass::none);
}

TEST(Kahler, ConformalTorsionMatchesDirectComputation) {
  // h = (1 + c|z|^2) I: Gamma^a_{b;m} = c conj(z_m) delta_ab / phi, so T^a_{m n} = c (conj(z_m) d_an - conj(z_n) d_am) / phi.
  auto m = oracle::metric("conformal2");
  CVec z(2), v(2);
  z << cd(0.3, -0.2), cd(0.1, 0.4);
  v << cd(1.0, 0.5), cd(-0.3, 0.8);
  const auto d = chern_finsler(*m, z, v, 3);
  const double phi = 1.0 + 0.5 * z.squaredNorm();
  for (int a = 0; a < 2; ++a)
    for (int mu = 0; mu < 2; ++mu)
      for (int nu = 0; nu < 2; ++nu) {
        const cd expect = 0.5 * (std::conj(z[mu]) * double(a == nu) - std::conj(z[nu]) * double(a == mu)) / phi;
        EXPECT_LT(std::abs(d.torsion(a, mu, nu) - expect), 1e-13);
      }
}

TEST(Kahler, SzaboWithNonKahlerFactorFails) {
  auto m = instantiate({{"family", "szabo"},
                        {"k", 2},
                        {"eps", 0.5},
                        {"factors", Json::array({{{"type", "conformal"}, {"dim", 2}, {"scale", 0.5}},
                                                 {{"type", "euclidean"}, {"dim", 1}}})}});
  auto k = classify(*m, SamplePlan{});
  EXPECT_LT(k.classification, KahlerClass::kahler);
  auto kk = classify(*oracle::metric("szabo_poincare"), SamplePlan{});
  EXPECT_EQ(kk.classification, KahlerClass::strongly_kahler);
}

TEST(Kahler, ResidualChainIsMonotone) {
  for (const auto& name : oracle::all_names()) {
    auto m = oracle::metric(name);
    auto k = classify(*m, SamplePlan{});
    EXPECT_GE(k.residual_strong, k.residual_kahler) << name;
    EXPECT_GE(k.residual_kahler, k.residual_weak) << name;
    for (const auto& s : k.report.samples) {
      EXPECT_GE(s["strong"].get<double>(), s["kahler"].get<double>());
      EXPECT_GE(s["kahler"].get<double>(), s["weak"].get<double>());
    }
  }
  for (const auto& name : oracle::weakly_kahler_names())
    EXPECT_TRUE(classify(*oracle::metric(name), SamplePlan{}).at_least(KahlerClass::weakly_kahler)) << name;
}

TEST(Kahler, ProfilePredicate) {
  EXPECT_TRUE(is_kahler_profile(profile({{"kind", "const"}, {"c", 1.0}})));
  EXPECT_TRUE(is_kahler_profile(profile({{"kind", "exp"}, {"c", 1.0}})));
  EXPECT_TRUE(is_kahler_profile(profile({{"kind", "inverse"}})));
  EXPECT_TRUE(is_kahler_profile(profile(poly({{0, 0, 1.0}, {1, 0, 1.0}, {0, 1, 1.0}}))));           // 1 + t + s
  EXPECT_TRUE(is_kahler_profile(profile(poly({{0, 0, 1.0}, {2, 0, 0.5}, {1, 1, 1.0}}))));           // 1 + t^2/2 + t s
  EXPECT_FALSE(is_kahler_profile(profile(poly({{0, 0, 1.0}, {0, 2, 1.0}}))));                       // 1 + s^2
  EXPECT_FALSE(is_kahler_profile(profile(poly({{0, 0, 1.0}, {1, 2, 1.0}}))));                       // 1 + t s^2
  EXPECT_FALSE(is_kahler_profile(profile(poly({{0, 0, 1.0}, {1, 0, 1.0}}))));                       // 1 + t
  EXPECT_FALSE(is_kahler_profile(profile(poly({{0, 0, 1.0}, {0, 1, 1.0}}))));                       // 1 + s
}

TEST(Kahler, UnInvariantCheckAgrees) {
  SamplePlan plan;
  plan.radii = 3;
  plan.angles = 4;
  plan.directions = 4;
  for (const Json& p : {Json{{"kind", "const"}, {"c", 1.0}}, Json{{"kind", "exp"}, {"c", 1.0}}, Json{{"kind", "inverse"}},
                        poly({{0, 0, 1.0}, {1, 2, 1.0}}, 0.9), poly({{0, 0, 1.0}, {1, 0, 1.0}, {0, 1, 1.0}})}) {
    const UnitaryProfile prof = profile(p);
    ASSERT_TRUE(check_metric(*unitary(p), plan).passed) << p.dump();
    auto r = un_invariant_kahler_check(prof, 2, plan);
    EXPECT_TRUE(r.passed) << p.dump() << " " << r.summary.dump();
  }
}

TEST(Kahler, PdeResidualExamples) {
  auto one = weakly_kahler_pde_residual(profile({{"kind", "const"}, {"c", 1.0}}));
  EXPECT_TRUE(one.passed);
  EXPECT_EQ(one.summary["max_residual"].get<double>(), 0.0);
  auto inv = weakly_kahler_pde_residual(profile({{"kind", "inverse"}}));
  EXPECT_TRUE(inv.passed);
  EXPECT_LT(inv.summary["max_residual"].get<double>(), 1e-10);
  auto s2 = weakly_kahler_pde_residual(profile(poly({{0, 0, 1.0}, {0, 2, 1.0}})));
  EXPECT_FALSE(s2.passed);
  EXPECT_GT(s2.summary["max_residual"].get<double>(), 1e-3);
  EXPECT_GT(s2.summary["max_abs_lhs"].get<double>(), 1e-3);
}

TEST(Kahler, PdeLhsMatchesHandExpansion) {
  // phi = 1 + s^2: (1 - s^2)(1 + 2ts - s^2) 4s + 2s(t - s)(2s + 6s^3).
  const UnitaryProfile p = profile(poly({{0, 0, 1.0}, {0, 2, 1.0}}));
  for (double t : {0.2, 0.55, 0.9})
    for (double s : {0.0, 0.3 * t, t}) {
      const double expect = (1 - s * s) * (1 + 2 * t * s - s * s) * 4 * s + 2 * s * (t - s) * (2 * s + 6 * s * s * s);
      EXPECT_NEAR(weakly_kahler_lhs(p, t, s).first, expect, 1e-13);
    }
  // phi = e^t (1 + s) is f + f' s with f = e^t: every product carries phi_s - phi_t + s phi_st = 0, phi_ss = 0.
  const UnitaryProfile e = profile({{"kind", "exp"}, {"c", 1.0}});
  EXPECT_NEAR(weakly_kahler_lhs(e, 0.7, 0.3).first, 0.0, 1e-14);
}

TEST(Kahler, PdeAndClassificationCrossValidate) {
  SamplePlan plan;
  plan.radii = 3;
  plan.angles = 4;
  plan.directions = 4;
  for (const Json& p : {Json{{"kind", "const"}, {"c", 2.0}}, Json{{"kind", "exp"}, {"c", 0.5}}, Json{{"kind", "inverse"}},
                        poly({{0, 0, 1.0}, {0, 2, 1.0}}, 0.9), poly({{0, 0, 1.0}, {1, 2, 1.0}}, 0.9),
                        poly({{0, 0, 1.0}, {2, 0, 0.5}, {1, 1, 1.0}})}) {
    auto m = unitary(p);
    ASSERT_TRUE(check_metric(*m, plan).passed) << p.dump();
    const bool pde = weakly_kahler_pde_residual(profile(p)).passed;
    const bool weak = classify(*m, plan).at_least(KahlerClass::weakly_kahler);
    EXPECT_EQ(pde, weak) << p.dump();
  }
}

TEST(Kahler, RejectsRealMetric) {
  EXPECT_THROW(classify(*realify_metric(oracle::metric("poincare_disk")), SamplePlan{}), StructuralError);
  EXPECT_THROW(weakly_kahler_pde_residual(profile({{"kind", "inverse"}}), ProfileGrid{0, 20, 0.0}), ConfigError);
}
