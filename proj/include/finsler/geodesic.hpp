#pragma once

// Geodesics x'' + 2 G^i(x, x') = 0, exponential map, Jacobi fields and the index form.

#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "finsler/cartan.hpp"
#include "finsler/ode.hpp"

namespace finsler {

struct GeodesicSample {
  double t = 0.0;
  Vec x, u;
  double G = 0.0;
};

struct GeodesicPath {
  std::vector<GeodesicSample> samples;
  double speed = 0.0;       ///< sqrt(G(x0; u0)); constant along the path
  double arc_length = 0.0;  ///< speed times the parameter length actually integrated
  bool normal = false;      ///< G == 1
  bool truncated = false;   ///< stopped at the boundary of the domain
  double energy_drift = 0.0;  ///< max |G(t) - G(0)| / G(0)
  OdeStats stats;

  const GeodesicSample& end() const { return samples.back(); }

  /// t, x..., u..., G per row.
  std::string to_csv() const {
    std::ostringstream os;
    os.precision(17);
    const auto m = samples.empty() ? 0 : samples.front().x.size();
    os << "t";
    for (Eigen::Index i = 0; i < m; ++i) os << ",x" << i;
    for (Eigen::Index i = 0; i < m; ++i) os << ",u" << i;
    os << ",G\n";
    for (const auto& s : samples) {
      os << s.t;
      for (Eigen::Index i = 0; i < m; ++i) os << ',' << s.x[i];
      for (Eigen::Index i = 0; i < m; ++i) os << ',' << s.u[i];
      os << ',' << s.G << '\n';
    }
    return os.str();
  }
};

namespace detail {

inline void geodesic_rhs(const Metric& m, const OdeState& s, OdeState& d) {
  const int dim = m.real_dim();
  const Vec x = Eigen::Map<const Vec>(s.data(), dim);
  const Vec u = Eigen::Map<const Vec>(s.data() + dim, dim);
  if (!m.contains(x)) throw DomainError("geodesic left the domain");
  const Vec S = spray(m, x, u);
  for (int i = 0; i < dim; ++i) {
    d[i] = u[i];
    d[dim + i] = -2.0 * S[i];
  }
}

inline std::vector<double> uniform_times(double r, int n) {
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) t[k] = r * k / n;
  return t;
}

}  // namespace detail

/// Geodesic with x(0) = x0, x'(0) = u0 on [0, r], recorded at the given increasing times (first must be 0).
inline GeodesicPath integrate_geodesic(const Metric& m, const Vec& x0, const Vec& u0, std::span<const double> times,
                                       const OdeOptions& opt = {}) {
  if (times.empty() || times.front() != 0.0) throw ConfigError("geodesic output times must start at 0");
  const double G0 = m.value(x0, u0);
  const int dim = m.real_dim();
  GeodesicPath p;
  p.speed = std::sqrt(G0);
  p.normal = std::abs(G0 - 1.0) < 1e-12;
  OdeState s(2 * static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    s[i] = x0[i];
    s[dim + i] = u0[i];
  }
  auto rhs = [&m](const OdeState& a, OdeState& d, double) { detail::geodesic_rhs(m, a, d); };
  auto obs = [&](double t, const OdeState& a) {
    GeodesicSample g;
    g.t = t;
    g.x = Eigen::Map<const Vec>(a.data(), dim);
    g.u = Eigen::Map<const Vec>(a.data() + dim, dim);
    g.G = m.value(g.x, g.u);
    p.energy_drift = std::max(p.energy_drift, std::abs(g.G - G0) / G0);
    p.samples.push_back(std::move(g));
  };
  p.stats = integrate_ode(rhs, s, 0.0, times, obs, opt);
  p.truncated = p.stats.truncated;
  p.arc_length = p.speed * (p.truncated ? p.stats.t_end : times.back());
  return p;
}

/// Geodesic on [0, r] recorded at n + 1 equally spaced times.
inline GeodesicPath integrate_geodesic(const Metric& m, const Vec& x0, const Vec& u0, double r, int n = 64,
                                       const OdeOptions& opt = {}) {
  if (!(r > 0.0)) throw ConfigError("geodesic length must be positive");
  if (n < 1) throw ConfigError("need at least one output interval");
  const auto t = detail::uniform_times(r, n);
  return integrate_geodesic(m, x0, u0, std::span<const double>(t), opt);
}

/// exp_p(v): endpoint of the geodesic with initial velocity v at time 1.
inline Vec exp_map(const Metric& m, const Vec& p, const Vec& v, const OdeOptions& opt = {}) {
  m.check_point(p);
  if (v.size() != m.real_dim()) throw StructuralError("vector has wrong dimension");
  if (v.norm() < kSlitEpsilon * (1.0 + p.norm())) return p;
  const std::array<double, 2> t{0.0, 1.0};
  const GeodesicPath g = integrate_geodesic(m, p, v, std::span<const double>(t), opt);
  if (g.truncated) throw DomainError("geodesic leaves the domain before time 1");
  return g.end().x;
}

/// Geodesic with first-order sensitivities: X = dx/dc, U = du/dc for k parameters c.
struct VariationalSample {
  double t = 0.0;
  Vec x, u;
  Mat X, U;
};

struct VariationalPath {
  std::vector<VariationalSample> samples;
  OdeStats stats;
  bool truncated = false;
};

/// Integrates the geodesic and its linearization X' = U, U' = -2 (dG/dx X + dG/du U).
inline VariationalPath integrate_variational(const Metric& m, const Vec& x0, const Vec& u0, const Mat& X0,
                                             const Mat& U0, std::span<const double> times,
                                             const OdeOptions& opt = {}) {
  const int dim = m.real_dim();
  const auto k = X0.cols();
  if (X0.rows() != dim || U0.rows() != dim || U0.cols() != k) throw StructuralError("sensitivity shape mismatch");
  m.check_tangent(x0, u0);
  const std::size_t D = static_cast<std::size_t>(dim), K = static_cast<std::size_t>(k);
  OdeState s(2 * D + 2 * D * K);
  Eigen::Map<Vec>(s.data(), dim) = x0;
  Eigen::Map<Vec>(s.data() + D, dim) = u0;
  Eigen::Map<Mat>(s.data() + 2 * D, dim, k) = X0;
  Eigen::Map<Mat>(s.data() + 2 * D + D * K, dim, k) = U0;
  auto rhs = [&](const OdeState& a, OdeState& d, double) {
    const Vec x = Eigen::Map<const Vec>(a.data(), dim);
    const Vec u = Eigen::Map<const Vec>(a.data() + D, dim);
    if (!m.contains(x)) throw DomainError("geodesic left the domain");
    const auto S = spray_jet(m, x, u, 3);
    Mat Sx(dim, dim), Su(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        Sx(i, j) = S[i].d(j);
        Su(i, j) = S[i].d(dim + j);
      }
    const Eigen::Map<const Mat> X(a.data() + 2 * D, dim, k), U(a.data() + 2 * D + D * K, dim, k);
    for (int i = 0; i < dim; ++i) {
      d[i] = u[i];
      d[D + i] = -2.0 * S[i].value();
    }
    Eigen::Map<Mat>(d.data() + 2 * D, dim, k) = U;
    Eigen::Map<Mat>(d.data() + 2 * D + D * K, dim, k) = -2.0 * (Sx * X + Su * U);
  };
  VariationalPath p;
  auto obs = [&](double t, const OdeState& a) {
    VariationalSample v;
    v.t = t;
    v.x = Eigen::Map<const Vec>(a.data(), dim);
    v.u = Eigen::Map<const Vec>(a.data() + D, dim);
    v.X = Eigen::Map<const Mat>(a.data() + 2 * D, dim, k);
    v.U = Eigen::Map<const Mat>(a.data() + 2 * D + D * K, dim, k);
    p.samples.push_back(std::move(v));
  };
  p.stats = integrate_ode(rhs, s, 0.0, times, obs, opt);
  p.truncated = p.stats.truncated;
  return p;
}

struct JacobiSample {
  double t = 0.0;
  Vec x, T;  ///< point and velocity of the geodesic
  Vec J;     ///< field
  Vec dJ;    ///< coordinate derivative dJ/dt
  Vec DJ;    ///< covariant derivative dJ/dt + N(x, T) J
};

/// Jacobi field along the geodesic (x0, T0) with J(0) = J0 and covariant derivative D_T J(0) = DJ0.
inline std::vector<JacobiSample> jacobi_field(const Metric& m, const Vec& x0, const Vec& T0, const Vec& J0,
                                              const Vec& DJ0, std::span<const double> times,
                                              const OdeOptions& opt = {}) {
  const CartanData c0 = cartan(m, x0, T0, 3);
  const Mat X0 = J0, U0 = DJ0 - c0.nonlinear * J0;
  const VariationalPath vp = integrate_variational(m, x0, T0, X0, U0, times, opt);
  if (vp.truncated) throw DomainError("geodesic leaves the domain");
  std::vector<JacobiSample> out;
  for (const auto& s : vp.samples) {
    JacobiSample j;
    j.t = s.t;
    j.x = s.x;
    j.T = s.u;
    j.J = s.X.col(0);
    j.dJ = s.U.col(0);
    j.DJ = j.dJ + cartan(m, s.x, s.u, 3).nonlinear * j.J;
    out.push_back(std::move(j));
  }
  return out;
}

/// Connection and curvature data at Gauss-Legendre nodes of a geodesic on [0, r].
struct PathQuadrature {
  int panels = 0;
  double r = 0.0;
  double speed = 0.0;
  std::vector<double> t, w;
  std::vector<Vec> x, T;
  std::vector<Mat> g, N, R;
  std::vector<Mat> Y, Ydot;  ///< dx/dv and du/dv for the initial velocity v (when requested)
};

namespace detail {

inline const std::array<double, 8>& gl8_nodes() {
  static const std::array<double, 8> n{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                       -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                       0.7966664774136267,  0.9602898564975363};
  return n;
}
inline const std::array<double, 8>& gl8_weights() {
  static const std::array<double, 8> w{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                       0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                       0.2223810344533745, 0.1012285362903763};
  return w;
}

}  // namespace detail

/// Samples the geodesic (x0, T0) at composite 8-point Gauss-Legendre nodes on [0, r].
inline PathQuadrature sample_path(const Metric& m, const Vec& x0, const Vec& T0, double r, int panels,
                                  bool with_jacobi, const OdeOptions& opt = {}) {
  if (panels < 1) throw ConfigError("need at least one panel");
  PathQuadrature q;
  q.panels = panels;
  q.r = r;
  q.speed = std::sqrt(m.value(x0, T0));
  std::vector<double> times{0.0};
  const double h = r / panels;
  for (int p = 0; p < panels; ++p)
    for (int k = 0; k < 8; ++k) {
      times.push_back(h * p + 0.5 * h * (1.0 + detail::gl8_nodes()[k]));
      q.w.push_back(0.5 * h * detail::gl8_weights()[k]);
    }
  times.push_back(r);
  const int dim = m.real_dim();
  const Mat X0 = with_jacobi ? Mat::Zero(dim, dim) : Mat(dim, 0);
  const Mat U0 = with_jacobi ? Mat::Identity(dim, dim) : Mat(dim, 0);
  const VariationalPath vp = integrate_variational(m, x0, T0, X0, U0, std::span<const double>(times), opt);
  if (vp.truncated) throw DomainError("geodesic leaves the domain");
  for (std::size_t i = 1; i + 1 < vp.samples.size(); ++i) {
    const auto& s = vp.samples[i];
    const CartanData c = cartan(m, s.x, s.u, 4);
    q.t.push_back(s.t);
    q.x.push_back(s.x);
    q.T.push_back(s.u);
    q.g.push_back(c.g);
    q.N.push_back(c.nonlinear);
    q.R.push_back(c.riemann);
    if (with_jacobi) {
      q.Y.push_back(s.X);
      q.Ydot.push_back(s.U);
    }
  }
  if (with_jacobi) {
    q.Y.push_back(vp.samples.back().X);
    q.Ydot.push_back(vp.samples.back().U);
  }
  return q;
}

/// Field value and coordinate derivative at node i.
using NodeField = std::function<std::pair<Vec, Vec>(std::size_t)>;

/// I(xi, eta) = (1/c) sum_i w_i [g(P D xi, P D eta) - g(R xi, eta)], c = speed, P the g_T projection
/// orthogonal to T. Equal to the arc-length index form of the normalized geodesic.
inline double index_form(const PathQuadrature& q, const NodeField& xi, const NodeField& eta) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.t.size(); ++i) {
    const auto [a, da] = xi(i);
    const auto [b, db] = eta(i);
    const Mat& g = q.g[i];
    const Vec& T = q.T[i];
    const double TT = T.dot(g * T);
    auto proj = [&](const Vec& w) -> Vec { return w - (T.dot(g * w) / TT) * T; };
    const Vec Da = proj(da + q.N[i] * a), Db = proj(db + q.N[i] * b);
    s += q.w[i] * (Da.dot(g * Db) - (q.R[i] * a).dot(g * b));
  }
  return s / q.speed;
}

using PathField = std::function<std::pair<Vec, Vec>(double)>;

struct IndexFormResult {
  double value = 0.0;
  double error = 0.0;  ///< difference between the last two panel counts
  int panels = 0;
};

/// Index form of fields given as functions of the path parameter t in [0, r], with panel doubling.
inline IndexFormResult index_form(const Metric& m, const Vec& x0, const Vec& T0, double r, const PathField& xi,
                                  const PathField& eta, double tolerance = 1e-10, int max_panels = 64) {
  IndexFormResult res;
  double prev = 0.0;
  for (int panels = 2; panels <= max_panels; panels *= 2) {
    const PathQuadrature q = sample_path(m, x0, T0, r, panels, false);
    const double v = index_form(
        q, [&](std::size_t i) { return xi(q.t[i]); }, [&](std::size_t i) { return eta(q.t[i]); });
    res.value = v;
    res.panels = panels;
    if (panels > 2) {
      res.error = std::abs(v - prev);
      if (res.error < tolerance * std::max(1.0, std::abs(v))) return res;
    }
    prev = v;
  }
  return res;
}

/// Jacobi field J = Y(t) c with J(0) = 0, J(r) = w, at every quadrature node.
inline NodeField jacobi_endpoint_field(const PathQuadrature& q, const Vec& w) {
  if (q.Y.empty()) throw StructuralError("path was sampled without Jacobi data");
  const Eigen::FullPivLU<Mat> lu(q.Y.back());
  if (!lu.isInvertible()) throw DegeneracyError("conjugate point: dx/dv is singular at the endpoint");
  const Vec c = lu.solve(w);
  return [&q, c](std::size_t i) { return std::make_pair<Vec, Vec>(q.Y[i] * c, q.Ydot[i] * c); };
}

}  // namespace finsler
