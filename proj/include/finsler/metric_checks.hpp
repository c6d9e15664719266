#pragma once

// Sampled sanity checks on a metric: positivity, homogeneity, Euler identities, convexity.

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "finsler/metrics.hpp"
#include "finsler/sampling.hpp"
#include "finsler/verification.hpp"

namespace finsler {

/// Real fundamental tensor g = G_uu / 2 at (x, u).
inline Mat fundamental_tensor(const Metric& m, const Vec& x, const Vec& u) {
  const RJet j = metric_jet_vertical(m, x, u, 2);
  return 0.5 * jet_hessian(j, 0, 0, m.real_dim());
}

/// Levi matrix G_{a b-bar} at (z, v) of a complex metric.
inline CMat levi_matrix(const Metric& m, const Vec& x, const Vec& u) {
  const RJet j = metric_jet_vertical(m, x, u, 2);
  return complex_hessian_mixed(jet_hessian(j, 0, 0, m.real_dim()));
}

inline VerificationReport check_metric(const Metric& m, const SamplePlan& plan, double tolerance = 1e-10) {
  VerificationReport r;
  r.name = "check_metric";
  r.tolerance = tolerance;
  r.summary["family"] = m.family();
  r.summary["kind"] = to_string(m.kind());
  const int dim = m.real_dim();
  const auto points = sample_points(m, plan);
  const auto dirs = sample_directions(m, plan);
  const double lambdas[3] = {0.5, -1.7, 3.0};
  const cd zetas[3] = {cd(0.6, 0.8), cd(0.0, 1.0), cd(-2.0, 0.5)};
  int errors = 0;
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    for (std::size_t di = 0; di < dirs.size(); ++di) {
      const Vec& x = points[pi];
      const Vec& u = dirs[di];
      Json s = {{"point", pi}, {"direction", di}};
      try {
        const RJet j = metric_jet_vertical(m, x, u, 2);
        const double G = j.value();
        s["G"] = G;
        r.track_min("min_G", G);
        if (!(G > 0.0)) r.fail("G not positive at sample " + std::to_string(pi) + "/" + std::to_string(di));
        double hom = 0.0;
        for (double l : lambdas) hom = std::max(hom, std::abs(m.value(x, l * u) - l * l * G) / (l * l * G));
        if (m.is_complex()) {
          const CVec v = to_complex_vector(u);
          for (cd zeta : zetas) {
            const double k = std::norm(zeta);
            hom = std::max(hom, std::abs(m.value(x, to_real_vector(zeta * v)) - k * G) / (k * G));
          }
        }
        s["homogeneity_residual"] = hom;
        r.track_max("max_homogeneity_residual", hom);
        const Mat H = jet_hessian(j, 0, 0, dim);
        const Mat g = 0.5 * H;
        const double euler_real = std::abs(u.dot(g * u) - G) / G;
        r.track_max("max_euler_residual", euler_real);
        Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
        const double real_min = es.eigenvalues().minCoeff();
        s["min_real_eigenvalue"] = real_min;
        r.track_min("min_real_eigenvalue", real_min);
        if (m.is_complex()) {
          const CVec v = to_complex_vector(u);
          const CVec Gv = complex_gradient(jet_gradient(j, 0, dim));
          const CMat L = complex_hessian_mixed(H);
          const double e1 = std::abs(cd((Gv.transpose() * v)(0)) - G) / G;
          const double e2 = std::abs(cd((v.adjoint() * L.transpose() * v)(0)) - G) / G;
          r.track_max("max_euler_residual", std::max(e1, e2));
          Eigen::SelfAdjointEigenSolver<CMat> cs(L, Eigen::EigenvaluesOnly);
          const double levi_min = cs.eigenvalues().minCoeff();
          s["min_levi_eigenvalue"] = levi_min;
          r.track_min("min_levi_eigenvalue", levi_min);
        }
      } catch (const Error& e) {
        s["error"] = e.what();
        ++errors;
      }
      r.samples.push_back(std::move(s));
    }
  }
  r.summary["errors"] = errors;
  r.summary["samples"] = points.size() * dirs.size();
  if (errors > 0) r.fail(std::to_string(errors) + " samples raised errors");
  if (r.summary.contains("max_homogeneity_residual") && r.summary["max_homogeneity_residual"].get<double>() > tolerance)
    r.fail("homogeneity residual above tolerance");
  if (r.summary.contains("max_euler_residual") && r.summary["max_euler_residual"].get<double>() > tolerance)
    r.fail("Euler identity residual above tolerance");
  if (m.is_complex()) {
    if (r.summary.contains("min_levi_eigenvalue") && !(r.summary["min_levi_eigenvalue"].get<double>() > 0.0))
      r.fail("Levi matrix not positive definite (not strongly pseudoconvex)");
    const bool convex = r.summary.contains("min_real_eigenvalue") && r.summary["min_real_eigenvalue"].get<double>() > 0.0;
    r.summary["strongly_convex"] = convex;
    if (m.kind() == MetricKind::complex_strongly_convex && !convex)
      r.fail("real fundamental tensor not positive definite (not strongly convex)");
  } else if (r.summary.contains("min_real_eigenvalue") && !(r.summary["min_real_eigenvalue"].get<double>() > 0.0)) {
    r.fail("fundamental tensor not positive definite");
  }
  return r;
}

}  // namespace finsler
