#pragma once

// Complex-side analytics of the distance from a pole: Levi form of rho^2, the Levi/Hessian identity,
// the realification pairing identity and the gradient pairings.

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "finsler/chern_finsler.hpp"
#include "finsler/shooting.hpp"
#include "finsler/verification.hpp"
#include "finsler/wirtinger.hpp"

namespace finsler {

struct LeviSample {
  CVec z, v;          ///< v normalized to G(z; v) = 1
  double rho = 0.0;
  double levi_value = 0.0;  ///< (H(rho^2)(u,u) + H(rho^2)(Ju,Ju)) / 4, u = real form of v
  double levi_direct = 0.0; ///< Re of d^2 rho^2/dz dzbar v conj(v) from differences of d(rho^2)
  double levi_imag = 0.0;   ///< imaginary part of the direct Hermitian contraction
  double K = 0.0;
  double bound = 0.0;       ///< 2 + rho K
  double margin = 0.0;      ///< bound - levi_value
  double hess_u = 0.0, hess_Ju = 0.0;  ///< H(rho^2) at u and Ju
  double gT_u = 0.0, gT_Ju = 0.0;      ///< g_T norms of u and Ju
};

/// sum_{a,b} A(a,b) v^a conj(w^b)
inline cd hermitian_form(const CMat& A, const CVec& v, const CVec& w) {
  cd s = 0.0;
  for (Eigen::Index a = 0; a < A.rows(); ++a)
    for (Eigen::Index b = 0; b < A.cols(); ++b) s += A(a, b) * v[a] * std::conj(w[b]);
  return s;
}

namespace detail {

/// Real coordinate Hessian of rho^2 at x, column by column from differences of the exact gradient.
inline Mat rho2_coordinate_hessian(const Metric& m, const Vec& p, const Vec& x, const RadialData& R,
                                   const ShootOptions& o) {
  const int dim = m.real_dim();
  Mat H(dim, dim);
  for (int j = 0; j < dim; ++j) {
    const Vec e = Vec::Unit(dim, j);
    const double h = safe_step(m, p, x, e);
    auto g = [&](double s) {
      const Vec y = x + s * e;
      return radial(m, p, y, o, Vec(R.v + R.Y.fullPivLu().solve(y - x))).drho2;
    };
    auto D = [&](double hh) -> Vec { return (-g(2 * hh) + 8 * g(hh) - 8 * g(-hh) + g(-2 * hh)) / (12 * hh); };
    H.col(j) = (16.0 * D(h / 2) - D(h)) / 15.0;
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace detail

/// Levi form of rho^2 at z in direction v, through the real Hessian identity and, independently,
/// through direct differences in z. K is the radial flag bound used in 2 + rho K.
inline LeviSample levi_rho2(const Metric& m, const CVec& pole, const CVec& z, const CVec& v, double K,
                            const ShootOptions& o = {}) {
  if (!m.is_complex()) throw StructuralError("levi_rho2 needs a complex metric");
  const Vec p = to_real_vector(pole), x = to_real_vector(z);
  const double scale = std::isfinite(m.domain_radius()) ? m.domain_radius() : 1.0;
  if ((x - p).norm() < 1e-3 * scale) throw DomainError("point too close to the pole");
  LeviSample s;
  s.z = z;
  s.v = v / std::sqrt(m.value(x, to_real_vector(v)));
  const Vec u = to_real_vector(s.v), Ju = apply_j(u);
  const HessianResult hu = hessian_rho(m, p, x, u, o), hJ = hessian_rho(m, p, x, Ju, o);
  s.rho = hu.rho;
  s.hess_u = hu.hess_rho2;
  s.hess_Ju = hJ.hess_rho2;
  s.gT_u = hu.gTuu;
  s.gT_Ju = hJ.gTuu;
  s.levi_value = 0.25 * (s.hess_u + s.hess_Ju);
  const RadialData R = radial(m, p, x, o);
  const CMat L = complex_hessian_mixed(detail::rho2_coordinate_hessian(m, p, x, R, o));
  const cd c = hermitian_form(L, s.v, s.v);
  s.levi_direct = c.real();
  s.levi_imag = c.imag();
  s.K = K;
  s.bound = 2.0 + s.rho * K;
  s.margin = s.bound - s.levi_value;
  return s;
}

inline std::string levi_csv(const std::vector<LeviSample>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "rho,levi_value,levi_direct,levi_imag,bound,margin,K,hess_u,hess_Ju\n";
  for (const auto& r : rows)
    os << r.rho << ',' << r.levi_value << ',' << r.levi_direct << ',' << r.levi_imag << ',' << r.bound << ','
       << r.margin << ',' << r.K << ',' << r.hess_u << ',' << r.hess_Ju << '\n';
  return os.str();
}

/// Closed-form smooth test functions in Re z, Im z and |z|^2.
struct TestFunction {
  std::string id;
  std::function<RJet(std::span<const RJet>)> f;
};

inline TestFunction test_function(const std::string& id) {
  auto norm2 = [](std::span<const RJet> x) {
    RJet s = x[0] * x[0];
    for (std::size_t i = 1; i < x.size(); ++i) s += x[i] * x[i];
    return s;
  };
  if (id == "norm2") return {id, norm2};
  if (id == "re_z1") return {id, [](std::span<const RJet> x) { return x[0]; }};
  if (id == "im_zn") return {id, [](std::span<const RJet> x) { return x[x.size() - 1]; }};
  if (id == "mixed")
    return {id, [norm2](std::span<const RJet> x) {
              const std::size_t n = x.size() / 2;
              const RJet r2 = norm2(x);
              return x[0] * x[0] * x[n] - 0.5 * r2 * r2 + x[0] * x[x.size() - 1] + 0.2 * x[n] * x[n] * x[n] + 0.7 * x[0];
            }};
  throw ConfigError("unknown test function " + id);
}

inline const std::vector<std::string>& test_function_ids() {
  static const std::vector<std::string> v{"norm2", "re_z1", "im_zn", "mixed"};
  return v;
}

struct LeviIdentity {
  double lhs = 0.0;  ///< 4 f_{a b-bar} X^a conj(X^b), from Wirtinger derivatives
  double rhs = 0.0;  ///< D^2 f(X,X) + D^2 f(JX,JX), Cartan connection at grad f
  double residual = 0.0;
  double scale = 1.0;
};

/// Both sides of L f(X, conj X) = D^2 f(X,X) + D^2 f(JX,JX) at x, with L = 4 d dbar.
inline LeviIdentity levi_identity_residual(const Metric& m, const TestFunction& tf, const Vec& x, const Vec& X) {
  if (!m.is_complex()) throw StructuralError("Levi identity needs a complex metric");
  m.check_point(x);
  const int dim = m.real_dim();
  const JetLayout& L = JetLayout::get(dim);
  std::vector<RJet> xs;
  for (int i = 0; i < dim; ++i) xs.push_back(RJet::variable(L, 2, i, x[i]));
  const RJet f = tf.f(xs);
  LeviIdentity r;
  // Left side: Wirtinger derivatives of the jet of f.
  const WirtingerTable w = wirtinger(f);
  const CVec Xc = to_complex_vector(X);
  cd lhs = 0.0;
  for (int a = 0; a < dim / 2; ++a)
    for (int b = 0; b < dim / 2; ++b) lhs += w.mixed(a, b) * Xc[a] * std::conj(Xc[b]);
  r.lhs = 4.0 * lhs.real();
  // Right side: coordinate Hessian minus the Cartan correction at the reference vector grad f.
  const Vec df = jet_gradient(f, 0, dim);
  const Mat hf = jet_hessian(f, 0, 0, dim);
  const Vec Y = legendre_gradient(m, x, df);
  const CartanData c = cartan(m, x, Y, 3);
  auto D2 = [&](const Vec& a, double* mag) {
    double corr = 0.0, cmag = 0.0;
    for (int k = 0; k < dim; ++k)
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          const double t = c.horizontal(k, i, j) * a[i] * a[j] * df[k];
          corr += t;
          cmag += std::abs(t);
        }
    const double h = a.dot(hf * a);
    *mag += std::abs(h) + cmag;
    return h - corr;
  };
  double mag = 0.0;
  r.rhs = D2(X, &mag) + D2(apply_j(X), &mag);
  r.scale = std::max(1.0, mag);
  r.residual = std::abs(r.lhs - r.rhs) / r.scale;
  return r;
}

struct RealificationIdentity {
  double lhs = 0.0;  ///< (1/2) G°_ab V° W°, second derivatives of the real metric
  double rhs = 0.0;  ///< Re[G_{a b-bar} V conj(W) + G_ab V W], Wirtinger derivatives
  double residual = 0.0;
  double scale = 1.0;
};

/// Pairing identity between the real fundamental tensor and the complex second derivatives at (x, u).
inline RealificationIdentity realification_identity(const Metric& m, const Vec& x, const Vec& u, const CVec& V,
                                                    const CVec& W) {
  if (!m.is_complex()) throw StructuralError("realification identity needs a complex metric");
  const int n = m.complex_dim();
  const RJet j = metric_jet_vertical(m, x, u, 2);
  const Mat Hr = jet_hessian(j, 0, 0, 2 * n);
  RealificationIdentity r;
  const Vec Vr = to_real_vector(V), Wr = to_real_vector(W);
  r.lhs = 0.5 * Vr.dot(Hr * Wr);
  const WirtingerTable w = wirtinger(j);
  cd herm = 0.0, bil = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      herm += w.mixed(a, b) * V[a] * std::conj(W[b]);
      std::vector<int> h(static_cast<std::size_t>(n), 0), an(static_cast<std::size_t>(n), 0);
      h[static_cast<std::size_t>(a)] += 1;
      h[static_cast<std::size_t>(b)] += 1;
      bil += w(h, an) * V[a] * W[b];
    }
  r.rhs = (herm + bil).real();
  r.scale = std::max(1.0, 0.5 * Vr.cwiseAbs().dot(Hr.cwiseAbs() * Wr.cwiseAbs()));
  r.residual = std::abs(r.lhs - r.rhs) / r.scale;
  return r;
}

struct GradientIdentity {
  double rho = 0.0;
  double real_pairing = 0.0;     ///< g_T(grad rho^2, T), expected 2 rho
  double complex_pairing = 0.0;  ///< (1/2) G_{a b-bar}(z; T°) (grad rho^2)°^a conj(T°^b), expected rho
  double complex_imag = 0.0;
  double real_error = 0.0;       ///< relative
  double complex_error = 0.0;    ///< relative
};

inline GradientIdentity gradient_identity(const Metric& m, const Vec& p, const Vec& x, const ShootOptions& o = {}) {
  const RadialData R = radial(m, p, x, o);
  GradientIdentity g;
  g.rho = R.rho;
  const Vec Y = legendre_gradient(m, x, R.drho2);
  const CartanData c = cartan(m, x, R.T, 3);
  g.real_pairing = Y.dot(c.g * R.T);
  g.real_error = std::abs(g.real_pairing - 2 * R.rho) / (2 * R.rho);
  if (m.is_complex()) {
    const ChernFinslerData d = chern_finsler(m, to_complex_vector(x), to_complex_vector(R.T), 3);
    const CVec Yc = to_complex_vector(Y), Tc = to_complex_vector(R.T);
    const cd s = 0.5 * hermitian_form(d.levi, Yc, Tc);
    g.complex_pairing = s.real();
    g.complex_imag = s.imag();
    g.complex_error = std::abs(s - cd(R.rho, 0.0)) / R.rho;
  }
  return g;
}

}  // namespace finsler
