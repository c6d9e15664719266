#pragma once

// Chern-Finsler connection and curvature of a strongly pseudoconvex complex metric.

#include <Eigen/Eigenvalues>
#include <complex>
#include <vector>

#include "finsler/geometry.hpp"
#include "finsler/tensor.hpp"
#include "finsler/verification.hpp"
#include "finsler/wirtinger.hpp"

namespace finsler {

struct ChernFinslerData {
  int n = 0;
  CVec z, v;
  double G = 0.0;
  CVec G_v;            ///< G_a
  CMat levi;           ///< G_{a b-bar}, row a, column b
  CMat levi_inverse;   ///< (tau, a) -> G^{tau-bar a}
  CMat nonlinear;      ///< (b, m) -> Gamma^b_{;m}
  CTensor horizontal;  ///< (a, b, m) -> Gamma^a_{b;m}
  CTensor vertical;    ///< (a, b, g) -> Gamma^a_{bg}
  CTensor torsion;     ///< (a, m, n) -> Gamma^a_{n;m} - Gamma^a_{m;n}
  bool has_curvature = false;
  CTensor r_hh;  ///< (a, b, m, n) -> R^a_{b;m n-bar}
  CTensor r_vh;  ///< (a, b, d, n) -> R^a_{bd;n-bar}
  CTensor r_hv;  ///< (a, b, g, m) -> R^a_{b g-bar;m}
  CTensor r_vv;  ///< (a, b, d, g) -> R^a_{bd g-bar}

  /// <Omega(chi, chi-bar) chi, chi> = G_{a g-bar} R^a_{b;m n-bar} v^b v^m conj(v^n) conj(v^g).
  cd radial_pairing() const {
    if (!has_curvature) throw StructuralError("curvature was not computed (order < 4)");
    cd s = 0.0;
    for (int a = 0; a < n; ++a)
      for (int g = 0; g < n; ++g) {
        cd inner = 0.0;
        for (int b = 0; b < n; ++b)
          for (int m = 0; m < n; ++m)
            for (int nu = 0; nu < n; ++nu) inner += r_hh(a, b, m, nu) * v[b] * v[m] * std::conj(v[nu]);
        s += levi(a, g) * inner * std::conj(v[g]);
      }
    return s;
  }

  /// Complex value of 2 <Omega(chi, chi-bar) chi, chi> / G^2; the imaginary part is rounding.
  cd holomorphic_curvature_complex() const { return 2.0 * radial_pairing() / (G * G); }
  double holomorphic_curvature() const { return holomorphic_curvature_complex().real(); }
};

namespace detail {

/// Derivative operators over the 4n real jet variables (x block, then u block).
struct ChernOps {
  int n;
  CJet dz(const CJet& f, int a) const { return finsler::dz(f, {a, n + a}); }
  CJet dzb(const CJet& f, int a) const { return finsler::dzbar(f, {a, n + a}); }
  CJet dv(const CJet& f, int a) const { return finsler::dz(f, {2 * n + a, 3 * n + a}); }
  CJet dvb(const CJet& f, int a) const { return finsler::dzbar(f, {2 * n + a, 3 * n + a}); }
};

}  // namespace detail

/// Connection data at (z, v). order 3 gives connection coefficients only; order 4 adds curvature.
inline ChernFinslerData chern_finsler(const Metric& m, const CVec& z, const CVec& v, int order = 4) {
  if (!m.is_complex()) throw StructuralError("chern_finsler needs a complex metric");
  if (order < 3 || order > 4) throw ConfigError("chern_finsler order must be 3 or 4");
  const int n = m.complex_dim();
  if (z.size() != n || v.size() != n) throw StructuralError("complex tangent has wrong dimension");
  const Vec x = to_real_vector(z), u = to_real_vector(v);
  const CJet G = to_complex(metric_jet(m, x, u, order));
  const detail::ChernOps op{n};
  const auto N = static_cast<std::size_t>(n);

  ChernFinslerData d;
  d.n = n;
  d.z = z;
  d.v = v;
  d.G = G.value().real();

  std::vector<CJet> Gv(N), Gvb(N);
  for (int a = 0; a < n; ++a) {
    Gv[a] = op.dv(G, a);
    Gvb[a] = op.dvb(G, a);
  }
  // M[a*n+b] = G_{a b-bar}
  std::vector<CJet> M(N * N);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) M[a * N + b] = op.dvb(Gv[a], b);

  d.G_v.resize(n);
  d.levi.resize(n, n);
  for (int a = 0; a < n; ++a) {
    d.G_v[a] = Gv[a].value();
    for (int b = 0; b < n; ++b) d.levi(a, b) = M[a * N + b].value();
  }
  {
    Eigen::SelfAdjointEigenSolver<CMat> es(d.levi, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi > 1e10 * lo)
      throw DegeneracyError("Levi matrix is not positive definite or has condition number > 1e10");
  }
  // Ninv[t*n+a] = G^{t-bar a}
  const std::vector<CJet> Ninv = inverse(M, n);
  d.levi_inverse.resize(n, n);
  for (int t = 0; t < n; ++t)
    for (int a = 0; a < n; ++a) d.levi_inverse(t, a) = Ninv[t * N + a].value();

  // Gamma^b_{;m} = G^{g-bar b} G_{g-bar;m}
  std::vector<CJet> NL(N * N);
  {
    std::vector<CJet> Gvb_z(N * N);
    for (int g = 0; g < n; ++g)
      for (int mu = 0; mu < n; ++mu) Gvb_z[g * N + mu] = op.dz(Gvb[g], mu);
    for (int b = 0; b < n; ++b)
      for (int mu = 0; mu < n; ++mu) {
        CJet s(cd(0.0));
        for (int g = 0; g < n; ++g) s = s + Ninv[g * N + b] * Gvb_z[g * N + mu];
        NL[b * N + mu] = s;
      }
  }
  d.nonlinear.resize(n, n);
  for (int b = 0; b < n; ++b)
    for (int mu = 0; mu < n; ++mu) d.nonlinear(b, mu) = NL[b * N + mu].value();

  std::vector<CJet> NLc(N * N);
  for (std::size_t k = 0; k < N * N; ++k) NLc[k] = conj(NL[k]);

  auto delta = [&](const CJet& f, int mu) {
    CJet r = op.dz(f, mu);
    for (int b = 0; b < n; ++b) r = r - NL[b * N + mu] * op.dv(f, b);
    return r;
  };
  auto delta_bar = [&](const CJet& f, int nu) {
    CJet r = op.dzb(f, nu);
    for (int b = 0; b < n; ++b) r = r - NLc[b * N + nu] * op.dvb(f, b);
    return r;
  };

  // Gamma^a_{b;m} = G^{t-bar a} delta_m(G_{b t-bar}); Gamma^a_{bg} = G^{t-bar a} dv_g G_{b t-bar}
  std::vector<CJet> H(N * N * N), V(N * N * N);
  {
    std::vector<CJet> dM(N * N * N), vM(N * N * N);
    for (int b = 0; b < n; ++b)
      for (int t = 0; t < n; ++t)
        for (int k = 0; k < n; ++k) {
          dM[(b * N + t) * N + k] = delta(M[b * N + t], k);
          vM[(b * N + t) * N + k] = op.dv(M[b * N + t], k);
        }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int k = 0; k < n; ++k) {
          CJet sh(cd(0.0)), sv(cd(0.0));
          for (int t = 0; t < n; ++t) {
            sh = sh + Ninv[t * N + a] * dM[(b * N + t) * N + k];
            sv = sv + Ninv[t * N + a] * vM[(b * N + t) * N + k];
          }
          H[(a * N + b) * N + k] = sh;
          V[(a * N + b) * N + k] = sv;
        }
  }
  d.horizontal = CTensor(3, n);
  d.vertical = CTensor(3, n);
  d.torsion = CTensor(3, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k) {
        d.horizontal(a, b, k) = H[(a * N + b) * N + k].value();
        d.vertical(a, b, k) = V[(a * N + b) * N + k].value();
      }
  for (int a = 0; a < n; ++a)
    for (int mu = 0; mu < n; ++mu)
      for (int nu = 0; nu < n; ++nu) d.torsion(a, mu, nu) = d.horizontal(a, nu, mu) - d.horizontal(a, mu, nu);

  if (order < 4) return d;

  d.has_curvature = true;
  d.r_hh = CTensor(4, n);
  d.r_vh = CTensor(4, n);
  d.r_hv = CTensor(4, n);
  d.r_vv = CTensor(4, n);
  // delta_nu-bar(Gamma^s_{;m}) and dvb_g(Gamma^s_{;m}) at the base point
  std::vector<cd> dbNL(N * N * N), vbNL(N * N * N);
  for (int s = 0; s < n; ++s)
    for (int mu = 0; mu < n; ++mu)
      for (int k = 0; k < n; ++k) {
        dbNL[(s * N + mu) * N + k] = delta_bar(NL[s * N + mu], k).value();
        vbNL[(s * N + mu) * N + k] = op.dvb(NL[s * N + mu], k).value();
      }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k) {
        const CJet& h = H[(a * N + b) * N + k];
        const CJet& w = V[(a * N + b) * N + k];
        for (int l = 0; l < n; ++l) {
          // k plays mu (hh, hv) or delta (vh, vv); l plays nu-bar or gamma-bar.
          cd hh = -delta_bar(h, l).value();
          cd hv = -op.dvb(h, l).value();
          for (int s = 0; s < n; ++s) {
            hh -= d.vertical(a, b, s) * dbNL[(s * N + k) * N + l];
            hv -= d.vertical(a, b, s) * vbNL[(s * N + k) * N + l];
          }
          d.r_hh(a, b, k, l) = hh;
          d.r_hv(a, b, l, k) = hv;
          d.r_vh(a, b, k, l) = -delta_bar(w, l).value();
          d.r_vv(a, b, k, l) = -op.dvb(w, l).value();
        }
      }
  return d;
}

inline ChernFinslerData chern_finsler(const Metric& m, const ComplexTangent& t, int order = 4) {
  return chern_finsler(m, t.z, t.v, order);
}

/// K_G(v) = 2 <Omega(chi, chi-bar) chi, chi> / G(v)^2.
inline double holomorphic_sectional_curvature(const Metric& m, const CVec& z, const CVec& v) {
  return chern_finsler(m, z, v, 4).holomorphic_curvature();
}

/// Compares K_G(v) and K_G(zeta v); zeta v is rescaled back above the slit guard if needed.
inline VerificationReport scale_invariance_check(const Metric& m, const CVec& z, const CVec& v, cd zeta,
                                                 double tolerance = 1e-8) {
  VerificationReport r;
  r.name = "scale_invariance";
  r.tolerance = tolerance;
  if (zeta == cd(0.0)) throw ConfigError("scale factor must be nonzero");
  CVec w = zeta * v;
  // Below the slit guard, use homogeneity of degree 0 to renormalize.
  const double floor = 10.0 * kSlitEpsilon * (1.0 + to_real_vector(z).norm());
  bool renormalized = false;
  if (w.norm() < floor) {
    w = w / w.norm() * v.norm();
    renormalized = true;
  }
  const double k0 = holomorphic_sectional_curvature(m, z, v);
  const double k1 = holomorphic_sectional_curvature(m, z, w);
  const double diff = std::abs(k0 - k1);
  r.summary = {{"K_v", k0}, {"K_zeta_v", k1}, {"difference", diff}, {"renormalized", renormalized}};
  if (!(diff < tolerance)) r.fail("K_G(v) and K_G(zeta v) differ by " + std::to_string(diff));
  return r;
}

}  // namespace finsler
