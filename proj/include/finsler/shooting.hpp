#pragma once

// Connecting geodesics by shooting, the distance function from a pole, its gradient and Hessian.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "finsler/geodesic.hpp"
#include "finsler/sampling.hpp"

namespace finsler {

struct ShootOptions {
  double tolerance = 1e-12;  ///< Newton target, relative to max(1, |p|, |q|)
  double accept = 1e-8;      ///< largest residual still reported as converged
  int max_newton = 40;
  int restarts = 16;
  int polyline_segments = 32;
  int polyline_iterations = 4000;
  OdeOptions ode;
};

struct ShootResult {
  Vec v;             ///< initial velocity at p, exp_p(v) = q
  Vec end_velocity;  ///< velocity at q
  Mat Y, Ydot;       ///< d x(1)/dv and d u(1)/dv
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int start = -1;  ///< which initial guess converged
  bool converged = false;
};

namespace detail {

struct ShotEval {
  bool ok = false;
  Vec x, u;
  Mat Y, U;
};

inline ShotEval fire(const Metric& m, const Vec& p, const Vec& v, const OdeOptions& opt) {
  ShotEval e;
  const int dim = m.real_dim();
  if (!(v.norm() >= kSlitEpsilon * (1.0 + p.norm())) || !v.allFinite()) return e;
  static constexpr std::array<double, 2> t{0.0, 1.0};
  try {
    const VariationalPath vp =
        integrate_variational(m, p, v, Mat::Zero(dim, dim), Mat::Identity(dim, dim), std::span<const double>(t), opt);
    if (vp.truncated) return e;
    const auto& s = vp.samples.back();
    e.ok = s.x.allFinite() && s.X.allFinite();
    e.x = s.x;
    e.u = s.u;
    e.Y = s.X;
    e.U = s.U;
  } catch (const DomainError&) {
  } catch (const DegeneracyError&) {
  } catch (const IntegratorError&) {
  }
  return e;
}

/// Damped Newton on F(v) = exp_p(v) - q with Jacobian dx(1)/dv.
inline ShootResult newton_shoot(const Metric& m, const Vec& p, const Vec& q, Vec v, const ShootOptions& o,
                                double scale) {
  ShootResult r;
  ShotEval e = fire(m, p, v, o.ode);
  if (!e.ok) return r;
  double res = (e.x - q).norm();
  auto record = [&] {
    r.v = v;
    r.end_velocity = e.u;
    r.Y = e.Y;
    r.Ydot = e.U;
    r.residual = res;
  };
  record();
  for (int it = 0; it < o.max_newton; ++it) {
    r.iterations = it;
    if (res < o.tolerance * scale) break;
    const Eigen::FullPivLU<Mat> lu(e.Y);
    if (!lu.isInvertible()) break;
    Vec d = lu.solve(q - e.x);
    // Keep trial velocities within a few multiples of the current one.
    const double cap = 2.0 * v.norm() + 1.0;
    if (d.norm() > cap) d *= cap / d.norm();
    double lambda = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls, lambda *= 0.5) {
      const Vec vt = v + lambda * d;
      ShotEval et = fire(m, p, vt, o.ode);
      if (!et.ok) continue;
      const double rt = (et.x - q).norm();
      if (rt < (1.0 - 1e-4 * lambda) * res) {
        v = vt;
        e = std::move(et);
        res = rt;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    record();
  }
  r.iterations = std::max(r.iterations, 1);
  r.converged = r.residual < o.accept * scale;
  return r;
}

}  // namespace detail

/// Discrete energy minimizer between p and q: N+1 vertices, energy N sum G(midpoint, segment).
struct Polyline {
  std::vector<Vec> vertices;
  double length = 0.0;  ///< length of the polygon
  double energy = 0.0;
  int iterations = 0;
};

inline Polyline polyline_geodesic(const Metric& m, const Vec& p, const Vec& q, int segments, int iterations) {
  const int dim = m.real_dim();
  const int N = std::max(2, segments);
  Polyline P;
  for (int k = 0; k <= N; ++k) P.vertices.push_back(p + (q - p) * (double(k) / N));
  auto energy = [&](const std::vector<Vec>& xs, std::vector<Vec>* grad) {
    double E = 0.0;
    if (grad) grad->assign(xs.size(), Vec::Zero(dim));
    for (int k = 0; k < N; ++k) {
      const Vec mid = 0.5 * (xs[k] + xs[k + 1]), d = xs[k + 1] - xs[k];
      if (!m.contains(mid) || !(d.norm() >= kSlitEpsilon * (1.0 + mid.norm()))) {
        if (!m.contains(mid)) return std::numeric_limits<double>::infinity();
        continue;
      }
      if (!grad) {
        E += N * m.value(mid, d);
        continue;
      }
      const RJet G = metric_jet(m, mid, d, 1);
      E += N * G.value();
      const Vec gx = jet_gradient(G, 0, dim), gu = jet_gradient(G, dim, dim);
      (*grad)[k] += N * (0.5 * gx - gu);
      (*grad)[k + 1] += N * (0.5 * gx + gu);
    }
    return E;
  };
  std::vector<Vec> grad;
  double E = energy(P.vertices, &grad);
  double step = 1.0 / (N * 4.0);
  for (int it = 0; it < iterations; ++it) {
    grad.front().setZero();
    grad.back().setZero();
    double gn = 0.0;
    for (const auto& g : grad) gn += g.squaredNorm();
    if (gn < 1e-26) break;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      std::vector<Vec> trial = P.vertices;
      for (int k = 1; k < N; ++k) trial[k] -= step * grad[k];
      const double Et = energy(trial, nullptr);
      if (Et <= E - 1e-4 * step * gn) {
        P.vertices = std::move(trial);
        E = energy(P.vertices, &grad);
        accepted = true;
        step *= 2.0;
        break;
      }
    }
    P.iterations = it + 1;
    if (!accepted) break;
  }
  P.energy = E;
  // Length of the polygon itself (8-point Gauss-Legendre per segment), a true upper bound for the distance.
  for (int k = 0; k < N; ++k) {
    const Vec a = P.vertices[k], d = P.vertices[k + 1] - P.vertices[k];
    if (!(d.norm() >= kSlitEpsilon * (1.0 + a.norm()))) continue;
    for (int j = 0; j < 8; ++j) {
      const Vec y = a + 0.5 * (1.0 + detail::gl8_nodes()[j]) * d;
      P.length += 0.5 * detail::gl8_weights()[j] * std::sqrt(m.value(y, d));
    }
  }
  return P;
}

/// Connecting geodesic from p to q: Newton from the chord, then from a direction lattice, then
/// from the initial segment of a discrete energy minimizer. Never throws on non-convergence.
inline ShootResult shoot(const Metric& m, const Vec& p, const Vec& q, const ShootOptions& o = {},
                         const std::optional<Vec>& guess = std::nullopt) {
  m.check_point(p);
  m.check_point(q);
  const int dim = m.real_dim();
  const double scale = std::max({1.0, p.norm(), q.norm()});
  ShootResult best;
  auto attempt = [&](const Vec& v0, int idx) {
    ShootResult r = detail::newton_shoot(m, p, q, v0, o, scale);
    r.start = idx;
    if (r.residual < best.residual) best = r;
    return r.converged;
  };
  if (guess && attempt(*guess, 0)) return best;
  const Vec chord = q - p;
  const double len = chord.norm();
  if (attempt(chord, 1)) return best;
  const auto dirs = sphere_lattice(dim, o.restarts, 17);
  for (std::size_t i = 0; i < dirs.size(); ++i)
    if (attempt(len * dirs[i], 2 + static_cast<int>(i))) return best;
  const Polyline P = polyline_geodesic(m, p, q, o.polyline_segments, o.polyline_iterations);
  const Vec v0 = (P.vertices[1] - P.vertices[0]) * double(P.vertices.size() - 1);
  attempt(v0, 2 + o.restarts);
  return best;
}

/// rho(q) = sqrt(G(p; v)) for the connecting geodesic; throws ShootingError when shooting fails.
inline double distance(const Metric& m, const Vec& p, const Vec& q, const ShootOptions& o = {}) {
  m.check_point(p);
  m.check_point(q);
  if ((q - p).norm() <= kSlitEpsilon * (1.0 + p.norm())) return 0.0;
  const ShootResult r = shoot(m, p, q, o);
  if (!r.converged) {
    const Polyline P = polyline_geodesic(m, p, q, o.polyline_segments, o.polyline_iterations);
    throw ShootingError("shooting did not converge", r.residual, P.length);
  }
  return std::sqrt(m.value(p, r.v));
}

/// Distance from a pole at a point x, with the connecting geodesic and its Jacobian.
struct RadialData {
  double rho = 0.0;
  Vec v;      ///< initial velocity at the pole, sqrt(G(p; v)) = rho
  Vec T;      ///< unit velocity at x
  Vec drho2;  ///< d(rho^2) = G_u(p; v) Y^{-1}
  Vec drho2_end;  ///< G_u(x; rho T), the same covector by the Gauss lemma
  Mat Y, Ydot;
  ShootResult shot;
};

inline RadialData radial(const Metric& m, const Vec& p, const Vec& x, const ShootOptions& o = {},
                         const std::optional<Vec>& guess = std::nullopt) {
  const int dim = m.real_dim();
  if ((x - p).norm() < 1e-6 * std::max(1.0, p.norm())) throw DomainError("point too close to the pole");
  RadialData d;
  d.shot = shoot(m, p, x, o, guess);
  if (!d.shot.converged) {
    const Polyline P = polyline_geodesic(m, p, x, o.polyline_segments, o.polyline_iterations);
    throw ShootingError("shooting did not converge", d.shot.residual, P.length);
  }
  d.v = d.shot.v;
  d.Y = d.shot.Y;
  d.Ydot = d.shot.Ydot;
  d.rho = std::sqrt(m.value(p, d.v));
  d.T = d.shot.end_velocity / d.rho;
  const Vec Gu = jet_gradient(metric_jet(m, p, d.v, 1), dim, dim);
  const Eigen::FullPivLU<Mat> lu(d.Y.transpose());
  if (!lu.isInvertible()) throw DegeneracyError("exp_p is singular at x (conjugate point)");
  d.drho2 = lu.solve(Gu);
  d.drho2_end = jet_gradient(metric_jet(m, x, d.shot.end_velocity, 1), dim, dim);
  return d;
}

/// Legendre inverse: the Y with g_ij(x, Y) Y^j = df_i, i.e. 1/2 G_u(x; Y) = df.
inline Vec legendre_gradient(const Metric& m, const Vec& x, const Vec& df, double tolerance = 1e-12,
                             int restarts = 8) {
  m.check_point(x);
  const int dim = m.real_dim();
  if (df.size() != dim) throw StructuralError("covector has wrong dimension");
  const double n = df.norm();
  if (!(n > 0.0)) throw DegeneracyError("gradient of a function with df = 0");
  auto residual = [&](const Vec& Y, Vec* F, Mat* J) {
    const RJet G = metric_jet(m, x, Y, 2);
    if (F) *F = 0.5 * jet_gradient(G, dim, dim) - df;
    if (J) *J = 0.5 * jet_hessian(G, dim, dim, dim);
  };
  auto newton = [&](Vec Y) -> std::optional<Vec> {
    try {
      Vec F;
      Mat J;
      residual(Y, &F, &J);
      for (int it = 0; it < 50; ++it) {
        if (F.norm() < tolerance * n) return Y;
        const Vec d = J.ldlt().solve(-F);
        double lambda = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 30; ++ls, lambda *= 0.5) {
          const Vec Yt = Y + lambda * d;
          if (!(Yt.norm() >= kSlitEpsilon * (1.0 + x.norm()))) continue;
          Vec Ft;
          residual(Yt, &Ft, nullptr);
          if (Ft.norm() < (1.0 - 1e-4 * lambda) * F.norm()) {
            Y = Yt;
            moved = true;
            break;
          }
        }
        if (!moved) break;
        residual(Y, &F, &J);
      }
      if (F.norm() < 1e3 * tolerance * n) return Y;
    } catch (const DomainError&) {
    } catch (const DegeneracyError&) {
    }
    return std::nullopt;
  };
  // Riemannian guess: g(x, e)^{-1} df with e the Euclidean direction of df.
  const Vec e = df / n;
  const Mat g0 = 0.5 * jet_hessian(metric_jet(m, x, e, 2), dim, dim, dim);
  if (auto Y = newton(g0.ldlt().solve(df))) return *Y;
  const double mag = g0.ldlt().solve(df).norm();
  for (const Vec& dir : sphere_lattice(dim, restarts, 29))
    if (auto Y = newton(mag * dir)) return *Y;
  throw DegeneracyError("Legendre inversion did not converge");
}

struct HessianResult {
  double rho = 0.0;
  double route_a = 0.0;  ///< H(rho)(u,u) from differences of the exact gradient and the connection correction
  double route_b = 0.0;  ///< I(J, J) for the Jacobi field with J(0) = 0, J(rho) = u
  double difference = 0.0;
  bool agree = false;  ///< |a - b| < 1e-4 max(1, |b|)
  double hess_rho2 = 0.0;  ///< H(rho^2)(u,u) = 2 drho(u)^2 + 2 rho H(rho)(u,u), route b
  double drho_u = 0.0;     ///< d rho(u)
  double gTuu = 0.0;       ///< g_T(u, u)
  int panels = 0;
};

namespace detail {

/// Largest step h such that the segment x +- 2h u stays well inside the domain.
inline double safe_step(const Metric& m, const Vec& p, const Vec& x, const Vec& unit) {
  double h = 1e-3 * std::min(1.0, (x - p).norm());
  while (h > 1e-7 && !(m.contains(x + 4 * h * unit) && m.contains(x - 4 * h * unit))) h *= 0.5;
  return h;
}

}  // namespace detail

/// Hessian of the coordinate function s -> d(rho^2)(x + s u) u, by Richardson-extrapolated 5-point differences.
inline double rho2_coordinate_second(const Metric& m, const Vec& p, const Vec& x, const Vec& u,
                                     const RadialData& R, const ShootOptions& o = {}) {
  const double un = u.norm();
  const Vec e = u / un;
  const double h = detail::safe_step(m, p, x, e);
  auto f = [&](double s) {
    const Vec y = x + s * e;
    const Vec guess = R.v + R.Y.fullPivLu().solve(y - x);
    return radial(m, p, y, o, guess).drho2.dot(e);
  };
  auto D = [&](double hh) { return (-f(2 * hh) + 8 * f(hh) - 8 * f(-hh) + f(-2 * hh)) / (12 * hh); };
  const double d1 = D(h), d2 = D(h / 2);
  return (16.0 * d2 - d1) / 15.0 * un * un;
}

/// H(rho)(u,u) at x for the pole p, by both routes. H(f)(u,u) = u^i u^j (d_i d_j f - Gamma^k_{i;j}(x, grad f) d_k f).
inline HessianResult hessian_rho(const Metric& m, const Vec& p, const Vec& x, const Vec& u, const ShootOptions& o = {},
                                 int panels = 16) {
  m.check_point(x);
  const int dim = m.real_dim();
  if (u.size() != dim) throw StructuralError("vector has wrong dimension");
  HessianResult h;
  const RadialData R = radial(m, p, x, o);
  h.rho = R.rho;
  const CartanData c = cartan(m, x, R.T, 3);
  h.gTuu = u.dot(c.g * u);
  h.drho_u = R.drho2.dot(u) / (2 * R.rho);

  // Route a.
  double corr = 0.0;
  for (int k = 0; k < dim; ++k)
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) corr += c.horizontal(k, i, j) * u[i] * u[j] * R.drho2[k];
  const double hess_a = rho2_coordinate_second(m, p, x, u, R, o) - corr;
  h.route_a = (hess_a - 2 * h.drho_u * h.drho_u) / (2 * R.rho);

  // Route b, refined until two panel counts agree.
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int n = panels; n <= 8 * panels; n *= 2) {
    const PathQuadrature q = sample_path(m, p, R.v, 1.0, n, true, o.ode);
    const NodeField J = jacobi_endpoint_field(q, u);
    h.route_b = index_form(q, J, J);
    h.panels = n;
    if (std::abs(h.route_b - prev) < 1e-10 * std::max(1.0, std::abs(h.route_b))) break;
    prev = h.route_b;
  }
  h.difference = std::abs(h.route_a - h.route_b);
  h.agree = h.difference < 1e-4 * std::max(1.0, std::abs(h.route_b));
  h.hess_rho2 = 2 * h.drho_u * h.drho_u + 2 * R.rho * h.route_b;
  return h;
}

/// Lower bound of radial flag curvatures K(P, T) over geodesic fans from p; K = sqrt(max(0, -inf)).
struct RadialBound {
  double inf_flag = 0.0;
  double sup_flag = 0.0;
  double K = 0.0;
  int samples = 0;
};

inline RadialBound radial_flag_bounds(const Metric& m, const Vec& p, double rho_max, int directions = 12,
                                      int radii = 6, int flags = 4, std::uint64_t seed = 5) {
  m.check_point(p);
  const int dim = m.real_dim();
  if (dim < 2) throw StructuralError("flag curvature needs dimension >= 2");
  RadialBound b;
  b.inf_flag = std::numeric_limits<double>::infinity();
  b.sup_flag = -std::numeric_limits<double>::infinity();
  const auto dirs = sphere_lattice(dim, directions, seed);
  const auto flag_dirs = sphere_lattice(dim, flags + dim, seed + 1);
  std::vector<double> times;
  for (int k = 0; k <= radii; ++k) times.push_back(rho_max * k / radii);
  for (const Vec& d : dirs) {
    const Vec T0 = d / std::sqrt(m.value(p, d));
    const GeodesicPath g = integrate_geodesic(m, p, T0, std::span<const double>(times));
    for (const auto& s : g.samples) {
      const CartanData c = cartan(m, s.x, s.u, 4);
      int used = 0;
      for (const Vec& X : flag_dirs) {
        if (used == flags) break;
        try {
          const double K = c.flag_curvature(X);
          b.inf_flag = std::min(b.inf_flag, K);
          b.sup_flag = std::max(b.sup_flag, K);
          ++b.samples;
          ++used;
        } catch (const DegeneracyError&) {
        }
      }
    }
  }
  b.K = std::sqrt(std::max(0.0, -b.inf_flag));
  return b;
}

}  // namespace finsler
