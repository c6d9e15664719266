#pragma once

// Pullback densities on holomorphic disks, their Gaussian curvature, curvature bounds and
// certification of the Schwarz ratio bound f*H <= (K1/K2) G.

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "finsler/chern_finsler.hpp"
#include "finsler/holomorphic.hpp"
#include "finsler/kahler.hpp"
#include "finsler/parallel.hpp"
#include "finsler/sampling.hpp"

namespace finsler {

/// K = -(2/g) d^2 log g / dzeta dzetabar = -(1/(2g)) (Lap g / g - |grad g|^2 / g^2), from a jet in (Re zeta, Im zeta).
inline double gaussian_curvature(const RJet& g) {
  if (g.nvars() != 2 || g.order() < 2) throw StructuralError("density jet needs 2 variables and order >= 2");
  const double v = g.value();
  if (!(v > 0.0)) throw DomainError("density must be positive");
  const double lap = g.dd(0, 0) + g.dd(1, 1), grad2 = g.d(0) * g.d(0) + g.d(1) * g.d(1);
  return -(lap / v - grad2 / (v * v)) / (2.0 * v);
}

using DensityJet = std::function<RJet(const RJet&, const RJet&)>;

inline double gaussian_curvature(const DensityJet& g, cd zeta) {
  const JetLayout& L = JetLayout::get(2);
  return gaussian_curvature(g(RJet::variable(L, 2, 0, zeta.real()), RJet::variable(L, 2, 1, zeta.imag())));
}

/// Same quantity from point values: 5-point Laplacian of log g with one Richardson step.
inline double gaussian_curvature_stencil(const std::function<double(double, double)>& g, cd zeta, double h = 1e-3) {
  const double s = zeta.real(), t = zeta.imag();
  const double g0 = g(s, t);
  if (!(g0 > 0.0)) throw DomainError("density must be positive");
  auto lap = [&](double k) {
    const double c = std::log(g0);
    return (std::log(g(s + k, t)) + std::log(g(s - k, t)) + std::log(g(s, t + k)) + std::log(g(s, t - k)) - 4 * c) / (k * k);
  };
  const double L = (4.0 * lap(h / 2) - lap(h)) / 3.0;
  return -L / (2.0 * g0);
}

/// G(psi(zeta); psi'(zeta)) as a jet in (Re zeta, Im zeta), psi = f o phi (or phi when f is null).
/// Throws DomainError when psi(zeta) leaves the metric's domain or psi'(zeta) is below the slit guard.
inline RJet pullback_density_jet(const Metric& m, const HolomorphicMap* f, const DiskProbe& phi, cd zeta, int order = 2) {
  if (!m.is_complex()) throw StructuralError("pullback needs a complex metric");
  const JetLayout& L = JetLayout::get(2);
  const Cplx<RJet> Z(RJet::variable(L, order, 0, zeta.real()), RJet::variable(L, order, 1, zeta.imag()));
  auto [p, d] = phi.eval(Z);
  if (f) {
    d = f->push(p, d);
    p = f->eval(p);
  }
  const int n = m.complex_dim();
  if (static_cast<int>(p.size()) != n) throw StructuralError("probe dimension does not match the metric");
  std::vector<RJet> xs(2 * static_cast<std::size_t>(n)), us(2 * static_cast<std::size_t>(n));
  Vec xv(2 * n), uv(2 * n);
  for (int a = 0; a < n; ++a) {
    xs[a] = p[a].re;
    xs[n + a] = p[a].im;
    us[a] = d[a].re;
    us[n + a] = d[a].im;
    xv[a] = p[a].re.value();
    xv[n + a] = p[a].im.value();
    uv[a] = d[a].re.value();
    uv[n + a] = d[a].im.value();
  }
  m.check_tangent(xv, uv);
  return m.evaluate(std::span<const RJet>(xs), std::span<const RJet>(us));
}

struct PullbackRow {
  cd zeta;
  double lambda2 = 0.0;  ///< G(phi; phi')
  double sigma2 = 0.0;   ///< H(f o phi; (f o phi)')
  double ratio = 0.0;
  bool removable = false;        ///< both densities vanish; ratio is the limit
  bool range_violation = false;  ///< f o phi(zeta) outside the target domain
  bool pole = false;             ///< lambda2 = 0 < sigma2
};

namespace detail {

/// Density value; 0 at zero derivative. Range violations propagate as DomainError.
inline double density_value(const Metric& m, const HolomorphicMap* f, const DiskProbe& phi, cd zeta) {
  auto [p, d] = phi.eval(Cplx<double>(zeta.real(), zeta.imag()));
  if (f) {
    d = f->push(p, d);
    p = f->eval(p);
  }
  const CVec pc = HolomorphicMap::to_cvec(p), dc = HolomorphicMap::to_cvec(d);
  const Vec x = to_real_vector(pc), u = to_real_vector(dc);
  m.check_point(x);
  if (!(u.norm() >= kSlitEpsilon * (1.0 + x.norm()))) return 0.0;
  return m.value(x, u);
}

}  // namespace detail

/// Densities lambda^2 and sigma^2 along a probe at each grid parameter.
inline std::vector<PullbackRow> pullback(const HolomorphicMap& f, const Metric& mG, const Metric& mH,
                                         const DiskProbe& phi, const std::vector<cd>& grid) {
  if (f.domain_dim() != mG.complex_dim() || f.target_dim() != mH.complex_dim())
    throw StructuralError("map dimensions do not match the metrics");
  std::vector<PullbackRow> rows(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    PullbackRow& r = rows[i];
    r.zeta = grid[i];
    r.lambda2 = detail::density_value(mG, nullptr, phi, r.zeta);
    try {
      r.sigma2 = detail::density_value(mH, &f, phi, r.zeta);
    } catch (const DomainError&) {
      r.range_violation = true;
      r.ratio = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    if (r.lambda2 > 0.0) {
      r.ratio = r.sigma2 / r.lambda2;
    } else if (r.sigma2 > 0.0) {
      r.pole = true;
      r.ratio = std::numeric_limits<double>::infinity();
    } else {
      // Removable zero: average over four directions at two radii, then extrapolate.
      r.removable = true;
      auto ring = [&](double dlt) {
        double s = 0.0;
        for (cd e : {cd(1, 0), cd(0, 1), cd(-1, 0), cd(0, -1)}) {
          const cd z = r.zeta + dlt * e;
          s += detail::density_value(mH, &f, phi, z) / detail::density_value(mG, nullptr, phi, z);
        }
        return s / 4.0;
      };
      r.ratio = (4.0 * ring(5e-4) - ring(1e-3)) / 3.0;
    }
  });
  return rows;
}

inline std::string pullback_csv(const std::vector<PullbackRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "re_zeta,im_zeta,lambda2,sigma2,ratio,removable,range_violation\n";
  for (const auto& r : rows)
    os << r.zeta.real() << ',' << r.zeta.imag() << ',' << r.lambda2 << ',' << r.sigma2 << ',' << r.ratio << ','
       << r.removable << ',' << r.range_violation << '\n';
  return os.str();
}

enum class CurvatureRole { domain, target };

struct CurvatureBound {
  double value = 0.0;  ///< K1 (clamped to <= 0) or K2
  double inf = 0.0, sup = 0.0;
  bool clamped = false;
  int samples = 0;
  Json to_json() const { return {{"value", value}, {"inf", inf}, {"sup", sup}, {"clamped", clamped}, {"samples", samples}}; }
};

/// inf (domain) or sup (target) of the holomorphic sectional curvature over the plan's grid.
inline CurvatureBound curvature_bounds(const Metric& m, CurvatureRole role, const SamplePlan& plan) {
  if (!m.is_complex()) throw StructuralError("curvature bounds need a complex metric");
  const auto pts = sample_points(m, plan);
  const auto dirs = sample_directions(m, plan);
  std::vector<double> K(pts.size() * dirs.size());
  parallel_for(K.size(), [&](std::size_t i) {
    K[i] = holomorphic_sectional_curvature(m, to_complex_vector(pts[i / dirs.size()]),
                                           to_complex_vector(dirs[i % dirs.size()]));
  });
  CurvatureBound b;
  b.inf = *std::min_element(K.begin(), K.end());
  b.sup = *std::max_element(K.begin(), K.end());
  b.samples = static_cast<int>(K.size());
  if (role == CurvatureRole::domain) {
    b.clamped = b.inf > 0.0;
    b.value = std::min(b.inf, 0.0);
  } else {
    if (!(b.sup < 0.0))
      throw HypothesisError("target holomorphic sectional curvature is not bounded above by a negative constant (sup " +
                            std::to_string(b.sup) + ")");
    b.value = b.sup;
  }
  return b;
}

struct SchwarzOptions {
  SamplePlan plan;
  int fan = 17;  ///< directions per point
  double tolerance = 1e-6;
  bool check_kahler = true;
};

struct SchwarzCertificate {
  Json map, domain, target;
  CurvatureBound K1, K2;
  bool K2_valid = false;
  double bound = std::numeric_limits<double>::quiet_NaN();  ///< K1 / K2
  double max_ratio = 0.0;
  Vec argmax_z, argmax_v;
  int samples = 0;
  int range_violations = 0;
  int zero_derivative = 0;
  bool passed = false;
  bool hypotheses_met = true;
  std::vector<std::string> hypothesis_notes;
  Json plan;
  double tolerance = 1e-6;
  std::vector<std::array<double, 3>> table;  ///< (point, direction, ratio)

  std::string status() const {
    std::string s = passed ? "PASS" : "FAIL";
    return hypotheses_met ? s : s + " (hypotheses unmet)";
  }

  Json to_json() const {
    auto vec = [](const Vec& v) {
      Json a = Json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
      return a;
    };
    return {{"map", map},
            {"domain", domain},
            {"target", target},
            {"K1", K1.to_json()},
            {"K2", K2_valid ? K2.to_json() : Json(nullptr)},
            {"bound", K2_valid ? Json(bound) : Json(nullptr)},
            {"max_ratio", max_ratio},
            {"argmax_z", vec(argmax_z)},
            {"argmax_v", vec(argmax_v)},
            {"samples", samples},
            {"range_violations", range_violations},
            {"zero_derivative", zero_derivative},
            {"passed", passed},
            {"hypotheses_met", hypotheses_met},
            {"hypothesis_notes", hypothesis_notes},
            {"status", status()},
            {"tolerance", tolerance},
            {"plan", plan}};
  }

  std::string csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "point,direction,ratio\n";
    for (const auto& r : table) os << int(r[0]) << ',' << int(r[1]) << ',' << r[2] << '\n';
    return os.str();
  }
};

/// max H(f(z); df(v)) / G(z; v) over the grid and a Fibonacci fan of directions, against K1/K2.
inline SchwarzCertificate certify_schwarz(const HolomorphicMap& f, const Metric& mG, const Metric& mH,
                                          const SchwarzOptions& o = {}) {
  if (!mG.is_complex() || !mH.is_complex()) throw StructuralError("Schwarz certification needs complex metrics");
  if (f.domain_dim() != mG.complex_dim() || f.target_dim() != mH.complex_dim())
    throw StructuralError("map dimensions do not match the metrics");
  SchwarzCertificate c;
  c.map = f.definition();
  c.domain = mG.definition();
  c.target = mH.definition();
  c.tolerance = o.tolerance;
  c.plan = o.plan.to_json();
  c.plan["fan"] = o.fan;

  if (o.check_kahler && !classify(mG, o.plan).at_least(KahlerClass::weakly_kahler)) {
    c.hypotheses_met = false;
    c.hypothesis_notes.push_back("domain metric is not weakly Kähler on the samples");
  }
  c.K1 = curvature_bounds(mG, CurvatureRole::domain, o.plan);
  if (c.K1.clamped) c.hypothesis_notes.push_back("domain curvature has positive samples; K1 clamped to 0");
  try {
    c.K2 = curvature_bounds(mH, CurvatureRole::target, o.plan);
    c.K2_valid = true;
    c.bound = c.K1.value / c.K2.value + 0.0;  // no -0 in reports
  } catch (const HypothesisError& e) {
    c.hypotheses_met = false;
    c.hypothesis_notes.push_back(e.what());
  }

  const auto pts = sample_points(mG, o.plan);
  const auto dirs = sphere_lattice(mG.real_dim(), o.fan, o.plan.seed);
  const std::size_t N = pts.size() * dirs.size();
  std::vector<double> ratio(N);
  std::vector<int> flag(N, 0);  // 1 range violation, 2 zero derivative
  parallel_for(N, [&](std::size_t i) {
    const Vec& x = pts[i / dirs.size()];
    const Vec& u = dirs[i % dirs.size()];
    const CVec z = to_complex_vector(x), v = to_complex_vector(u);
    const double G = mG.value(x, u);
    const Vec y = to_real_vector(f(z)), w = to_real_vector(f.differential(z, v));
    if (!mH.contains(y)) {
      flag[i] = 1;
      ratio[i] = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    if (!(w.norm() >= kSlitEpsilon * (1.0 + y.norm()))) {
      flag[i] = 2;
      ratio[i] = 0.0;
      return;
    }
    ratio[i] = mH.value(y, w) / G;
  });
  c.max_ratio = 0.0;
  c.argmax_z = pts.front();
  c.argmax_v = dirs.front();
  for (std::size_t i = 0; i < N; ++i) {
    c.table.push_back({double(i / dirs.size()), double(i % dirs.size()), ratio[i]});
    if (flag[i] == 1) {
      ++c.range_violations;
      continue;
    }
    if (flag[i] == 2) ++c.zero_derivative;
    c.max_ratio = std::max(c.max_ratio, ratio[i]);
  }
  // Symmetric maps attain the max on whole orbits; report the first sample within 1e-12 of it.
  for (std::size_t i = 0; i < N; ++i)
    if (flag[i] != 1 && ratio[i] >= c.max_ratio - 1e-12 * std::max(1.0, c.max_ratio)) {
      c.argmax_z = pts[i / dirs.size()];
      c.argmax_v = dirs[i % dirs.size()];
      break;
    }
  c.samples = static_cast<int>(N);
  if (c.range_violations > 0) {
    c.hypotheses_met = false;
    c.hypothesis_notes.push_back("map leaves the target domain at " + std::to_string(c.range_violations) + " samples");
  }
  c.passed = c.K2_valid && c.range_violations == 0 &&
             c.max_ratio <= c.bound + o.tolerance * std::max(1.0, std::abs(c.bound));
  return c;
}

/// Probe disk through (z, v) whose second derivative cancels the nonlinear connection: phi'' = -Gamma^a_{;m} v^m.
inline DiskProbe extremal_probe(const Metric& m, const CVec& z, const CVec& v) {
  const ChernFinslerData d = chern_finsler(m, z, v, 3);
  CVec w = -0.5 * d.nonlinear * v;
  DiskProbe p = DiskProbe::quadratic(z, v, w);
  p.kind = "extremal";
  return p;
}

struct MaximalityResult {
  double KG = 0.0;
  double max_probe = -std::numeric_limits<double>::infinity();
  double extremal = std::numeric_limits<double>::quiet_NaN();
  int probes = 0;
  double excess = 0.0;  ///< max(probe) - K_G
  bool passed = false;
};

/// Gaussian curvatures at 0 of pullbacks by linear, random quadratic and extremal disks through (z, v),
/// against K_G(v).
inline MaximalityResult maximality_check(const Metric& m, const CVec& z, const CVec& v, int random_probes = 8,
                                         std::uint64_t seed = 1, double tolerance = 1e-6) {
  MaximalityResult r;
  r.KG = holomorphic_sectional_curvature(m, z, v);
  const int n = m.complex_dim();
  std::vector<DiskProbe> probes{DiskProbe::linear(z, v), extremal_probe(m, z, v)};
  Rng rng(seed);
  for (int k = 0; k < random_probes; ++k) {
    const double s = std::pow(3.0, k % 3 - 1);
    probes.push_back(DiskProbe::quadratic(z, v, s * v.norm() * to_complex_vector(rng.normal_vector(2 * n))));
  }
  for (const auto& p : probes) {
    const double K = gaussian_curvature(pullback_density_jet(m, nullptr, p, 0.0));
    if (p.kind == "extremal") r.extremal = K;
    r.max_probe = std::max(r.max_probe, K);
    ++r.probes;
  }
  r.excess = r.max_probe - r.KG;
  r.passed = r.excess <= tolerance;
  return r;
}

struct ComparisonResult {
  double lhs = 0.0;  ///< d^2 log sigma^2 / dzeta dzetabar
  double rhs = 0.0;  ///< -(K2 / 2) sigma^2
  double margin = 0.0;
};

/// Curvature comparison along a probe in the target: lhs >= -(K2/2) sigma^2 whenever the pullback
/// curvature is <= K2. Equality on the curvature -4 disk with its own density.
inline ComparisonResult curvature_comparison(const Metric& mH, const HolomorphicMap* f, const DiskProbe& phi, cd zeta,
                                             double K2) {
  const RJet g = pullback_density_jet(mH, f, phi, zeta);
  const double v = g.value(), lap = g.dd(0, 0) + g.dd(1, 1), grad2 = g.d(0) * g.d(0) + g.d(1) * g.d(1);
  ComparisonResult c;
  c.lhs = 0.25 * (lap / v - grad2 / (v * v));
  c.rhs = -0.5 * K2 * v;
  c.margin = c.lhs - c.rhs;
  return c;
}

}  // namespace finsler
