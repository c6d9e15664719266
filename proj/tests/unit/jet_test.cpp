#include <gtest/gtest.h>

#include <chrono>
#include <vector>

#include "finsler/jet.hpp"
#include "finsler/sampling.hpp"
#include "finsler/wirtinger.hpp"
#include "oracles/expr.hpp"
#include "oracles/finite_diff.hpp"

using namespace finsler;

namespace {

std::vector<int> exps_of(const JetLayout& L, std::size_t k) {
  auto e = L.exponents(k);
  return std::vector<int>(e.begin(), e.end());
}

}  // namespace

TEST(Jet, LiftSingleVariable) {
  const std::vector<double> x{2.0};
  const std::vector<int> act{0};
  auto j = lift(x, act, 2);
  EXPECT_EQ(j[0].value(), 2.0);
  EXPECT_EQ(j[0].d(0), 1.0);
  EXPECT_EQ(j[0].dd(0, 0), 0.0);
}

TEST(Jet, BilinearMixedPartial) {
  const std::vector<double> x{1.0, 3.0};
  const std::vector<int> act{0, 1};
  auto j = lift(x, act, 2);
  RJet f = j[0] * j[1];
  EXPECT_EQ(f.dd(0, 1), 1.0);
  EXPECT_EQ(f.dd(0, 0), 0.0);
  EXPECT_EQ(f.value(), 3.0);
}

TEST(Jet, FourthPowerFourthDerivative) {
  const std::vector<double> x{1.0};
  auto j = lift(x, std::vector<int>{0}, 4);
  RJet f = j[0] * j[0] * j[0] * j[0];
  const std::vector<int> e{4};
  EXPECT_DOUBLE_EQ(f.partial(e), 24.0);
  EXPECT_DOUBLE_EQ(ipow(j[0], 4).partial(e), 24.0);
}

TEST(Jet, LiftRejectsBadRequests) {
  const std::vector<double> x{1.0, 2.0};
  EXPECT_THROW(lift(x, std::vector<int>{0}, 5), ConfigError);
  EXPECT_THROW(lift(x, std::vector<int>{}, 2), ConfigError);
  EXPECT_THROW(lift(x, std::vector<int>{3}, 2), ConfigError);
}

TEST(Jet, LayoutCounts) {
  const JetLayout& L = JetLayout::get(3);
  EXPECT_EQ(L.size(0), 1u);
  EXPECT_EQ(L.size(1), 4u);
  EXPECT_EQ(L.size(2), 10u);
  EXPECT_EQ(L.size(4), 35u);
  for (std::size_t k = 0; k < L.size(4); ++k) {
    auto e = exps_of(L, k);
    EXPECT_EQ(L.find(e), static_cast<std::int32_t>(k));
  }
}

TEST(Jet, OrderTruncationPropagates) {
  const std::vector<double> x{0.5, -0.25};
  auto a = lift(x, std::vector<int>{0, 1}, 4);
  auto b = lift(x, std::vector<int>{0, 1}, 2);
  RJet f = a[0] * b[1];
  EXPECT_EQ(f.order(), 2);
  EXPECT_EQ(derivative(f, 0).order(), 1);
  EXPECT_THROW(f.partial(std::vector<int>{2, 1}), StructuralError);
}

TEST(Jet, DivisionByZeroValueIsDomainError) {
  auto a = lift(std::vector<double>{0.0}, std::vector<int>{0}, 2);
  EXPECT_THROW(reciprocal(a[0]), DomainError);
  EXPECT_THROW(sqrt(a[0]), DomainError);
  EXPECT_THROW(log(a[0]), DomainError);
}

TEST(Jet, ProductRuleIsExactConvolution) {
  Rng rng(7);
  const int nv = 3;
  const JetLayout& L = JetLayout::get(nv);
  for (int trial = 0; trial < 20; ++trial) {
    RJet f(L, 4, 0.0), g(L, 4, 0.0);
    for (std::size_t k = 0; k < L.size(4); ++k) {
      f[k] = std::floor(rng.uniform(-9.0, 10.0));
      g[k] = std::floor(rng.uniform(-9.0, 10.0));
    }
    RJet h = f * g;
    std::vector<double> conv(L.size(4), 0.0);
    std::vector<int> e(nv);
    for (std::size_t i = 0; i < L.size(4); ++i)
      for (std::size_t j = 0; j < L.size(4); ++j) {
        int deg = L.degree(i) + L.degree(j);
        if (deg > 4) continue;
        for (int v = 0; v < nv; ++v) e[v] = L.exponents(i)[v] + L.exponents(j)[v];
        conv[static_cast<std::size_t>(L.find(e))] += f[i] * g[j];
      }
    for (std::size_t k = 0; k < L.size(4); ++k) EXPECT_EQ(h[k], conv[k]);
  }
}

TEST(Jet, ElementaryFunctionsMatchFiniteDifferences) {
  const std::vector<double> x{0.3, -0.7};
  auto j = lift(x, std::vector<int>{0, 1}, 4);
  const JetLayout& L = JetLayout::get(2);
  auto check = [&](const RJet& f, const oracle::LFun& g) {
    std::vector<long double> xl(x.begin(), x.end());
    for (std::size_t k = 1; k < L.size(4); ++k) {
      auto e = exps_of(L, k);
      const long double ref = oracle::partial(g, xl, e);
      EXPECT_NEAR(f.partial(e), static_cast<double>(ref), 1e-7 * std::max(1.0L, std::fabs(ref)));
    }
  };
  check(exp(j[0] * j[1]), [](const auto& y) { return std::exp(y[0] * y[1]); });
  check(log(j[0] * j[0] + j[1] * j[1]), [](const auto& y) { return std::log(y[0] * y[0] + y[1] * y[1]); });
  check(sqrt(j[0] * j[0] + 2.0 + j[1]), [](const auto& y) { return std::sqrt(y[0] * y[0] + 2.0L + y[1]); });
  check(pow(j[0] * j[0] + 1.0, -1.5), [](const auto& y) { return std::pow(y[0] * y[0] + 1.0L, -1.5L); });
  check(sin(j[0]) * cos(j[1]), [](const auto& y) { return std::sin(y[0]) * std::cos(y[1]); });
  check(j[0] / (j[1] * j[1] + 1.0), [](const auto& y) { return y[0] / (y[1] * y[1] + 1.0L); });
}

TEST(Jet, RandomCompositesMatchRichardson) {
  Rng rng(20240601);
  const int nv = 3;
  const JetLayout& L = JetLayout::get(nv);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto e = oracle::random_expr(rng, nv, 4);
    std::vector<double> x(nv);
    for (auto& c : x) c = rng.uniform(-0.8, 0.8);
    RJet f = e->eval(lift(x, 4));
    std::vector<long double> xl(x.begin(), x.end());
    oracle::LFun g = [&](const std::vector<long double>& y) { return e->eval(y); };
    for (std::size_t k = 0; k < L.size(4); ++k) {
      auto ex = exps_of(L, k);
      const long double ref = oracle::partial(g, xl, ex);
      const double err = std::fabs(f.partial(ex) - static_cast<double>(ref)) / std::max(1.0L, std::fabs(ref));
      worst = std::max(worst, err);
      ASSERT_LT(err, 1e-6) << e->str() << " partial " << k;
    }
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(Jet, InverseOfJetMatrix) {
  const std::vector<double> x{0.2, 0.4};
  auto j = lift(x, 3);
  std::vector<RJet> a{j[0] + 2.0, j[1], j[0] * j[1], exp(j[1])};
  auto inv = inverse(a, 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      RJet s = a[r * 2] * inv[c] + a[r * 2 + 1] * inv[2 + c];
      const double target = r == c ? 1.0 : 0.0;
      for (std::size_t k = 0; k < s.size(); ++k) EXPECT_NEAR(s[k], k == 0 ? target : 0.0, 1e-13);
    }
}

TEST(Jet, InverseRejectsSingular) {
  auto j = lift(std::vector<double>{1.0}, 2);
  std::vector<RJet> a{j[0], j[0], j[0], j[0]};
  EXPECT_THROW(inverse(a, 2), DegeneracyError);
}

TEST(Wirtinger, ModulusSquared) {
  auto j = lift(std::vector<double>{0.3, -0.2}, 2);
  auto w = wirtinger(j[0] * j[0] + j[1] * j[1]);
  EXPECT_NEAR(std::abs(w.mixed(0, 0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(w(std::vector<int>{2}, std::vector<int>{0})), 0.0, 1e-15);
}

TEST(Wirtinger, RealPart) {
  auto j = lift(std::vector<double>{0.3, -0.2}, 1);
  auto w = wirtinger(j[0]);
  const auto d = w(std::vector<int>{1}, std::vector<int>{0});
  EXPECT_DOUBLE_EQ(d.real(), 0.5);
  EXPECT_DOUBLE_EQ(d.imag(), 0.0);
}

TEST(Wirtinger, FourthPowerOfModulus) {
  auto j = lift(std::vector<double>{1.0, 0.0}, 2);
  RJet r = j[0] * j[0] + j[1] * j[1];
  auto w = wirtinger(r * r);
  EXPECT_NEAR(w.mixed(0, 0).real(), 4.0, 1e-14);
  EXPECT_NEAR(w.mixed(0, 0).imag(), 0.0, 1e-14);
}

TEST(Wirtinger, HermitianSymmetry) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto e = oracle::random_expr(rng, 4, 3);
    std::vector<double> x(4);
    for (auto& c : x) c = rng.uniform(-0.5, 0.5);
    auto w = wirtinger(e->eval(lift(x, 2)));
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) EXPECT_NEAR(std::abs(w.mixed(a, b) - std::conj(w.mixed(b, a))), 0.0, 1e-12);
  }
}

TEST(Wirtinger, OddDimensionRejected) {
  auto j = lift(std::vector<double>{1.0, 2.0, 3.0}, 2);
  EXPECT_THROW(wirtinger(j[0]), StructuralError);
  EXPECT_THROW(standard_pairs(3), StructuralError);
}
