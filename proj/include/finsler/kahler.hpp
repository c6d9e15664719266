#pragma once

// Kaehler-type torsion residuals and the U(n)-invariant profile criteria.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "finsler/chern_finsler.hpp"
#include "finsler/metrics.hpp"
#include "finsler/sampling.hpp"
#include "finsler/verification.hpp"

namespace finsler {

enum class KahlerClass { none, weakly_kahler, kahler, strongly_kahler };

inline std::string to_string(KahlerClass c) {
  switch (c) {
    case KahlerClass::strongly_kahler:
      return "strongly Kähler";
    case KahlerClass::kahler:
      return "Kähler";
    case KahlerClass::weakly_kahler:
      return "weakly Kähler";
    case KahlerClass::none:
      return "none";
  }
  return "?";
}

/// Residuals are normalized so that strong >= kahler >= weak holds sample by sample:
///   strong = max |T^a_{m n}|
///   kahler = max_{a,n} |T^a_{m n} v^m| / |v|_1
///   weak   = max_n |G_a T^a_{m n} v^m| / (|G_v|_1 |v|_1)
/// with T^a_{m n} = Gamma^a_{n;m} - Gamma^a_{m;n}, all divided by max(1, max |Gamma^a_{b;m}|).
struct KahlerReport {
  double residual_strong = 0.0;
  double residual_kahler = 0.0;
  double residual_weak = 0.0;
  double scale = 1.0;
  double tolerance = 1e-7;
  KahlerClass classification = KahlerClass::none;
  int samples = 0;
  VerificationReport report;

  bool at_least(KahlerClass c) const { return classification >= c; }
};

struct TorsionResiduals {
  double strong = 0.0, kahler = 0.0, weak = 0.0, gamma_max = 0.0;
};

inline TorsionResiduals torsion_residuals(const ChernFinslerData& d) {
  const int n = d.n;
  TorsionResiduals r;
  r.gamma_max = d.horizontal.max_abs();
  r.strong = d.torsion.max_abs();
  const double v1 = d.v.cwiseAbs().sum();
  const double g1 = d.G_v.cwiseAbs().sum();
  for (int nu = 0; nu < n; ++nu) {
    cd w = 0.0;
    for (int a = 0; a < n; ++a) {
      cd tv = 0.0;
      for (int mu = 0; mu < n; ++mu) tv += d.torsion(a, mu, nu) * d.v[mu];
      r.kahler = std::max(r.kahler, std::abs(tv) / v1);
      w += d.G_v[a] * tv;
    }
    r.weak = std::max(r.weak, std::abs(w) / (g1 * v1));
  }
  // The chain holds exactly; clamp away last-bit rounding.
  r.kahler = std::min(r.kahler, r.strong);
  r.weak = std::min(r.weak, r.kahler);
  return r;
}

/// Samples the torsion of the Chern-Finsler connection and classifies the metric.
inline KahlerReport classify(const Metric& m, const SamplePlan& plan, double tolerance = 1e-7) {
  if (!m.is_complex()) throw StructuralError("classify needs a complex metric");
  KahlerReport k;
  k.tolerance = tolerance;
  k.report.name = "kahler_classification";
  k.report.tolerance = tolerance;
  const auto points = sample_points(m, plan);
  const auto dirs = sample_directions(m, plan);
  double raw_strong = 0.0, raw_kahler = 0.0, raw_weak = 0.0, gmax = 0.0;
  for (std::size_t pi = 0; pi < points.size(); ++pi)
    for (std::size_t di = 0; di < dirs.size(); ++di) {
      const ChernFinslerData d = chern_finsler(m, to_complex_vector(points[pi]), to_complex_vector(dirs[di]), 3);
      const TorsionResiduals r = torsion_residuals(d);
      raw_strong = std::max(raw_strong, r.strong);
      raw_kahler = std::max(raw_kahler, r.kahler);
      raw_weak = std::max(raw_weak, r.weak);
      gmax = std::max(gmax, r.gamma_max);
      k.report.samples.push_back({{"point", pi},
                                  {"direction", di},
                                  {"strong", r.strong},
                                  {"kahler", r.kahler},
                                  {"weak", r.weak},
                                  {"gamma_max", r.gamma_max}});
      ++k.samples;
    }
  k.scale = std::max(1.0, gmax);
  k.residual_strong = raw_strong / k.scale;
  k.residual_kahler = raw_kahler / k.scale;
  k.residual_weak = raw_weak / k.scale;
  if (k.residual_strong < tolerance)
    k.classification = KahlerClass::strongly_kahler;
  else if (k.residual_kahler < tolerance)
    k.classification = KahlerClass::kahler;
  else if (k.residual_weak < tolerance)
    k.classification = KahlerClass::weakly_kahler;
  k.report.summary = {{"family", m.family()},
                      {"residual_strong", k.residual_strong},
                      {"residual_kahler", k.residual_kahler},
                      {"residual_weak", k.residual_weak},
                      {"scale", k.scale},
                      {"class", to_string(k.classification)},
                      {"samples", k.samples}};
  return k;
}

/// Whether phi is exactly f(t) + f'(t) s, decided from the profile's closed form.
inline bool is_kahler_profile(const UnitaryProfile& p) {
  if (p.kind != UnitaryProfile::Kind::poly) return true;
  std::map<std::pair<int, int>, double> c;
  for (const auto& [i, j, a] : p.terms) c[{i, j}] += a;
  for (const auto& [e, a] : c) {
    if (a == 0.0) continue;
    if (e.second >= 2) return false;
    if (e.second == 1) {
      // s t^i must match (i + 1) a_{i+1} t^i from f'.
      const auto it = c.find({e.first + 1, 0});
      const double f = it == c.end() ? 0.0 : it->second;
      if (std::abs(a - (e.first + 1) * f) > 1e-14 * std::max(1.0, std::abs(a))) return false;
    }
  }
  // Terms a t^{i+1} without a matching s t^i.
  for (const auto& [e, a] : c) {
    if (e.second != 0 || e.first == 0 || a == 0.0) continue;
    const auto it = c.find({e.first - 1, 1});
    if (it == c.end() || std::abs(it->second - e.first * a) > 1e-14 * std::max(1.0, std::abs(a))) return false;
  }
  return true;
}

struct ProfileGrid {
  int nt = 20;
  int ns = 20;
  /// Largest t on the grid; 0 picks min(1, 0.95 t_max).
  double t_hi = 0.0;

  double top(const UnitaryProfile& p) const {
    if (t_hi > 0.0) return t_hi;
    return std::isfinite(p.t_max) ? std::min(1.0, 0.95 * p.t_max) : 1.0;
  }
};

/// Left-hand side of the weakly Kaehler equation for U(n)-invariant metrics at one (t, s),
/// and its magnitude with every sum replaced by a sum of absolute values.
inline std::pair<double, double> weakly_kahler_lhs(const UnitaryProfile& p, double t, double s) {
  const JetLayout& L = JetLayout::get(2);
  const RJet tj = RJet::variable(L, 2, 0, t), sj = RJet::variable(L, 2, 1, s);
  const RJet ph = p.phi(tj, sj);
  const double f = ph.value(), ft = ph.d(0), fs = ph.d(1), fst = ph.dd(0, 1), fss = ph.dd(1, 1);
  const double a = (f - s * fs) * (f + (t - s) * fs) * (fs - ft + s * (fst + fss));
  const double b = s * (t - s) * fss * (f * (fs - ft) + s * fs * (ft + fs));
  using std::abs;
  const double ma = (abs(f) + s * abs(fs)) * (abs(f) + (t - s) * abs(fs)) *
                    (abs(fs) + abs(ft) + s * (abs(fst) + abs(fss)));
  const double mb = s * (t - s) * abs(fss) * (abs(f) * (abs(fs) + abs(ft)) + s * abs(fs) * (abs(ft) + abs(fs)));
  return {a + b, ma + mb};
}

/// Residual of the weakly Kaehler equation on t_i = t_hi (i + 1) / nt, s_j = t_i j / (ns - 1).
/// Each point is measured relative to max(1, magnitude); pass iff the maximum is below tolerance.
inline VerificationReport weakly_kahler_pde_residual(const UnitaryProfile& p, const ProfileGrid& grid = {},
                                                     double tolerance = 1e-8) {
  if (grid.nt < 1 || grid.ns < 2) throw ConfigError("profile grid needs nt >= 1 and ns >= 2");
  VerificationReport r;
  r.name = "weakly_kahler_pde";
  r.tolerance = tolerance;
  const double top = grid.top(p);
  double worst = -1.0, worst_abs = 0.0, scale = 0.0, wt = 0.0, ws = 0.0;
  for (int i = 0; i < grid.nt; ++i) {
    const double t = top * (i + 1) / grid.nt;
    for (int j = 0; j < grid.ns; ++j) {
      const double s = t * j / (grid.ns - 1);
      const auto [lhs, mag] = weakly_kahler_lhs(p, t, s);
      const double rel = std::abs(lhs) / std::max(1.0, mag);
      worst_abs = std::max(worst_abs, std::abs(lhs));
      scale = std::max(scale, mag);
      if (rel > worst) {
        worst = rel;
        wt = t;
        ws = s;
      }
    }
  }
  r.summary = {{"profile", p.to_json()}, {"max_residual", worst}, {"max_abs_lhs", worst_abs},
               {"max_magnitude", scale}, {"argmax_t", wt},        {"argmax_s", ws},
               {"t_hi", top},            {"nt", grid.nt},         {"ns", grid.ns}};
  if (!(worst < tolerance))
    r.fail("weakly Kähler equation residual " + std::to_string(worst) + " at t=" + std::to_string(wt) +
           ", s=" + std::to_string(ws));
  return r;
}

/// Compares classify() on the U(n)-invariant metric with the closed-form f + f' s predicate.
inline VerificationReport un_invariant_kahler_check(const UnitaryProfile& p, int n, const SamplePlan& plan,
                                                    double tolerance = 1e-7) {
  if (n < 1 || n > 4) throw ConfigError("complex_dim must lie in [1, 4]");
  const UnitaryMetric m(n, p, {{"family", "unitary"}, {"complex_dim", n}, {"profile", p.to_json()}}, {});
  const KahlerReport k = classify(m, plan, tolerance);
  const bool predicted = is_kahler_profile(p);
  const bool measured = k.at_least(KahlerClass::kahler);
  VerificationReport r;
  r.name = "un_invariant_kahler";
  r.tolerance = tolerance;
  r.summary = {{"profile", p.to_json()},
               {"closed_form_kahler", predicted},
               {"classified_kahler", measured},
               {"class", to_string(k.classification)},
               {"residual_kahler", k.residual_kahler}};
  if (predicted != measured) r.fail("closed-form predicate and classification disagree");
  return r;
}

}  // namespace finsler
