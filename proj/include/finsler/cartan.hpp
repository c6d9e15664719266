#pragma once

// Cartan connection, geodesic spray and flag curvature of a real Finsler metric.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "finsler/geometry.hpp"
#include "finsler/tensor.hpp"

namespace finsler {

struct CartanData {
  int m = 0;
  Vec x, u;
  double G = 0.0;
  Mat g;              ///< g_ij = G_ij / 2
  Mat g_inverse;
  Vec spray;          ///< G^i; geodesics solve x'' + 2 G^i(x, x') = 0
  Mat nonlinear;      ///< (j, i) -> Gamma^j_{;i} = dG^j/du^i
  RTensor horizontal; ///< (j, i, k) -> Gamma^j_{i;k}
  RTensor vertical;   ///< (j, i, k) -> Gamma^j_{ik} = g^{jl} dg_ik/du^l / 2
  double cartan_radial = 0.0;  ///< max |dg_ij/du^k u^k|, zero by homogeneity
  bool has_curvature = false;
  Mat riemann;        ///< (i, k) -> R^i_k, the Riemann curvature of the spray in direction u

  double pairing(const Vec& a, const Vec& b) const { return a.dot(g * b); }

  /// Flag curvature of the flag with pole u and transverse edge X.
  double flag_curvature(const Vec& X) const {
    if (!has_curvature) throw StructuralError("curvature was not computed (order < 4)");
    if (X.size() != m) throw StructuralError("flag vector has wrong dimension");
    const double uu = pairing(u, u), XX = pairing(X, X), uX = pairing(u, X);
    const double den = uu * XX - uX * uX;
    if (!(den > 1e-12 * uu * XX)) throw DegeneracyError("flag is degenerate: u and X are linearly dependent");
    return pairing(riemann * X, X) / den;
  }
};

namespace detail {

/// Spray coefficients G^i as jets of order o - 2 from a jet of G of order o in (x, u).
inline std::vector<RJet> spray_from_jet(const RJet& G, const Vec& u, std::vector<RJet>* g_out = nullptr,
                                        std::vector<RJet>* ginv_out = nullptr) {
  const int m = static_cast<int>(u.size());
  const auto M = static_cast<std::size_t>(m);
  const JetLayout& L = *G.layout();
  const int o = G.order();
  std::vector<RJet> Gu(M), Gx(M), g(M * M);
  for (int l = 0; l < m; ++l) {
    Gu[l] = derivative(G, m + l);
    Gx[l] = derivative(G, l);
  }
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < m; ++l) g[i * M + l] = derivative(Gu[i], m + l).scaled(0.5);
  const std::vector<RJet> ginv = inverse(g, m);
  // A_l = G_{u^l x^k} u^k - G_{x^l}
  std::vector<RJet> A(M);
  for (int l = 0; l < m; ++l) {
    RJet s = -Gx[l];
    for (int k = 0; k < m; ++k) s = s + derivative(Gu[l], k) * RJet::variable(L, o, m + k, u[k]);
    A[l] = s;
  }
  std::vector<RJet> S(M);
  for (int i = 0; i < m; ++i) {
    RJet s(0.0);
    for (int l = 0; l < m; ++l) s = s + ginv[i * M + l] * A[l];
    S[i] = s.scaled(0.25);
  }
  if (g_out) *g_out = std::move(g);
  if (ginv_out) *ginv_out = ginv;
  return S;
}

}  // namespace detail

/// Spray coefficients G^i(x, u), values only.
inline Vec spray(const Metric& m, const Vec& x, const Vec& u) {
  const int dim = m.real_dim();
  const RJet G = metric_jet(m, x, u, 2);
  Mat g(dim, dim), B(dim, dim);
  Vec gx(dim);
  for (int i = 0; i < dim; ++i) {
    gx[i] = G.d(i);
    for (int j = 0; j < dim; ++j) {
      g(i, j) = 0.5 * G.dd(dim + i, dim + j);
      B(i, j) = G.dd(dim + i, j);
    }
  }
  const Vec A = B * u - gx;
  Eigen::LDLT<Mat> ldlt(g);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw DegeneracyError("fundamental tensor is not positive definite");
  return 0.25 * ldlt.solve(A);
}

/// Spray coefficients as jets of order (order - 2) in the 2m variables (x, u).
inline std::vector<RJet> spray_jet(const Metric& m, const Vec& x, const Vec& u, int order) {
  if (order < 2 || order > kMaxJetOrder) throw ConfigError("spray_jet order must be in [2, 4]");
  return detail::spray_from_jet(metric_jet(m, x, u, order), u);
}

/// Connection data at (x, u). order 3 gives connection coefficients, order 4 adds curvature.
inline CartanData cartan(const Metric& m, const Vec& x, const Vec& u, int order = 4) {
  if (order < 3 || order > 4) throw ConfigError("cartan order must be 3 or 4");
  const int dim = m.real_dim();
  const auto M = static_cast<std::size_t>(dim);
  const RJet G = metric_jet(m, x, u, order);

  CartanData d;
  d.m = dim;
  d.x = x;
  d.u = u;
  d.G = G.value();

  std::vector<RJet> g, ginv;
  // Fundamental tensor first, to report degeneracy before the jet inverse.
  d.g.resize(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) d.g(i, j) = 0.5 * G.dd(dim + i, dim + j);
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(d.g, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi > 1e10 * lo)
      throw DegeneracyError("fundamental tensor is not positive definite or has condition number > 1e10");
  }
  const std::vector<RJet> S = detail::spray_from_jet(G, u, &g, &ginv);
  d.g_inverse.resize(dim, dim);
  d.spray.resize(dim);
  for (int i = 0; i < dim; ++i) {
    d.spray[i] = S[i].value();
    for (int j = 0; j < dim; ++j) d.g_inverse(i, j) = ginv[i * M + j].value();
  }

  // N[j*m+i] = dG^j/du^i
  std::vector<RJet> N(M * M);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) N[j * M + i] = derivative(S[j], dim + i);
  d.nonlinear.resize(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) d.nonlinear(j, i) = N[j * M + i].value();

  auto delta = [&](const RJet& f, int k) {
    RJet r = derivative(f, k);
    for (int j = 0; j < dim; ++j) r = r - N[j * M + k] * derivative(f, dim + j);
    return r;
  };

  // dg[(i*m+l)*m+k] = delta_k g_il (values), vg = du^k g_il (values)
  std::vector<double> dg(M * M * M), vg(M * M * M);
  for (int i = 0; i < dim; ++i)
    for (int l = 0; l < dim; ++l)
      for (int k = 0; k < dim; ++k) {
        dg[(i * M + l) * M + k] = delta(g[i * M + l], k).value();
        vg[(i * M + l) * M + k] = g[i * M + l].d(dim + k);
      }
  auto at = [&](const std::vector<double>& t, int a, int b, int c) { return t[(a * M + b) * M + c]; };
  d.horizontal = RTensor(3, dim);
  d.vertical = RTensor(3, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i)
      for (int k = 0; k < dim; ++k) {
        double h = 0.0, v = 0.0;
        for (int l = 0; l < dim; ++l) {
          h += d.g_inverse(j, l) * (at(dg, i, l, k) + at(dg, l, k, i) - at(dg, i, k, l));
          v += d.g_inverse(j, l) * at(vg, i, k, l);
        }
        d.horizontal(j, i, k) = 0.5 * h;
        d.vertical(j, i, k) = 0.5 * v;
      }
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      double s = 0.0;
      for (int k = 0; k < dim; ++k) s += at(vg, i, j, k) * u[k];
      d.cartan_radial = std::max(d.cartan_radial, std::abs(s));
    }

  if (order < 4) return d;

  // R^i_k = 2 dG^i/dx^k - u^j d2G^i/dx^j du^k + 2 G^j d2G^i/du^j du^k - dG^i/du^j dG^j/du^k
  d.has_curvature = true;
  d.riemann.resize(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) {
      double r = 2.0 * S[i].d(k);
      for (int j = 0; j < dim; ++j) {
        r -= u[j] * S[i].dd(j, dim + k);
        r += 2.0 * d.spray[j] * S[i].dd(dim + j, dim + k);
        r -= d.nonlinear(i, j) * d.nonlinear(j, k);
      }
      d.riemann(i, k) = r;
    }
  return d;
}

inline double flag_curvature(const Metric& m, const Vec& x, const Vec& u, const Vec& X) {
  return cartan(m, x, u, 4).flag_curvature(X);
}

}  // namespace finsler
