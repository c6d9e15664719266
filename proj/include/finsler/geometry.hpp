#pragma once

// Tangent vectors, the complex structure and the metric interface.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "finsler/complex.hpp"
#include "finsler/jet.hpp"

namespace finsler {

using Json = nlohmann::json;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using cd = std::complex<double>;

/// Metric derivatives are never taken below this vector size, relative to the point scale.
inline constexpr double kSlitEpsilon = 1e-8;

/// Tangent vector u at x in real coordinates (x^1..x^n = Re z, x^{n+1}..x^{2n} = Im z).
struct RealTangent {
  Vec x;
  Vec u;
};

/// Tangent vector v of type (1,0) at z.
struct ComplexTangent {
  CVec z;
  CVec v;
};

inline int half_dim(Eigen::Index m) {
  if (m % 2 != 0) throw StructuralError("odd real dimension has no complex structure");
  return static_cast<int>(m / 2);
}

/// J(d/dx^a) = d/dx^{n+a}, J(d/dx^{n+a}) = -d/dx^a.
inline Vec apply_j(const Vec& u) {
  const int n = half_dim(u.size());
  Vec r(u.size());
  r.head(n) = -u.tail(n);
  r.tail(n) = u.head(n);
  return r;
}

/// Components of u_o = (u - iJu)/2 in the frame d/dz^a: u^a + i u^{n+a}.
inline CVec to_complex_vector(const Vec& u) {
  const int n = half_dim(u.size());
  CVec v(n);
  for (int a = 0; a < n; ++a) v[a] = {u[a], u[n + a]};
  return v;
}

/// Components of v + conj(v) in real coordinates.
inline Vec to_real_vector(const CVec& v) {
  const auto n = v.size();
  Vec u(2 * n);
  for (Eigen::Index a = 0; a < n; ++a) {
    u[a] = v[a].real();
    u[n + a] = v[a].imag();
  }
  return u;
}

inline ComplexTangent to_complex(const RealTangent& t) {
  return {to_complex_vector(t.x), to_complex_vector(t.u)};
}

inline RealTangent to_real(const ComplexTangent& t) { return {to_real_vector(t.z), to_real_vector(t.v)}; }

enum class MetricKind { real, complex, complex_strongly_convex };

inline std::string to_string(MetricKind k) {
  switch (k) {
    case MetricKind::real:
      return "real";
    case MetricKind::complex:
      return "complex";
    case MetricKind::complex_strongly_convex:
      return "complex-strongly-convex";
  }
  return "?";
}

/// Closed-form values known for a family, used as test ground truth.
struct GroundTruth {
  std::optional<double> holomorphic_curvature;
  std::optional<double> flag_curvature;
  bool horizontally_flat = false;
};

class Metric;
using MetricPtr = std::shared_ptr<const Metric>;

/// A Finsler metric G (squared norm) on a coordinate domain. Complex metrics
/// are evaluated in real coordinates, where they coincide with their realification.
class Metric {
 public:
  virtual ~Metric() = default;

  virtual MetricKind kind() const = 0;
  virtual int real_dim() const = 0;
  virtual std::string family() const = 0;
  /// Document that instantiate() maps back to an equal metric.
  virtual Json definition() const = 0;
  virtual GroundTruth truths() const { return {}; }
  virtual bool in_domain(std::span<const double> /*x*/) const { return true; }
  /// Radius of a coordinate ball around the origin inside the domain.
  virtual double domain_radius() const { return std::numeric_limits<double>::infinity(); }

  // Unchecked evaluators.
  virtual double evaluate(std::span<const double> x, std::span<const double> u) const = 0;
  virtual RJet evaluate(std::span<const RJet> x, std::span<const RJet> u) const = 0;

  bool is_complex() const { return kind() != MetricKind::real; }
  int complex_dim() const {
    if (!is_complex()) throw StructuralError("real metric has no complex dimension");
    return real_dim() / 2;
  }

  bool contains(const Vec& x) const { return in_domain(std::span<const double>(x.data(), x.size())); }

  void check_point(const Vec& x) const {
    if (x.size() != real_dim()) throw StructuralError("point has wrong dimension");
    if (!contains(x)) throw DomainError("point outside the domain of the " + family() + " metric");
  }

  void check_tangent(const Vec& x, const Vec& u) const {
    check_point(x);
    if (u.size() != real_dim()) throw StructuralError("vector has wrong dimension");
    if (!(u.norm() >= kSlitEpsilon * (1.0 + x.norm())))
      throw DomainError("vector below the slit guard; rescale by homogeneity");
  }

  double value(const Vec& x, const Vec& u) const {
    check_tangent(x, u);
    return evaluate(std::span<const double>(x.data(), x.size()), std::span<const double>(u.data(), u.size()));
  }

  double value(const RealTangent& t) const { return value(t.x, t.u); }
  double value(const ComplexTangent& t) const { return value(to_real(t)); }
};

/// Taylor jet of G at (x, u) in all 2m variables: x^0..x^{m-1}, then u^0..u^{m-1}.
inline RJet metric_jet(const Metric& m, const Vec& x, const Vec& u, int order) {
  m.check_tangent(x, u);
  const int dim = m.real_dim();
  const JetLayout& L = JetLayout::get(2 * dim);
  std::vector<RJet> xs, us;
  for (int k = 0; k < dim; ++k) xs.push_back(RJet::variable(L, order, k, x[k]));
  for (int k = 0; k < dim; ++k) us.push_back(RJet::variable(L, order, dim + k, u[k]));
  return m.evaluate(std::span<const RJet>(xs), std::span<const RJet>(us));
}

/// Jet of G in the fibre variables only.
inline RJet metric_jet_vertical(const Metric& m, const Vec& x, const Vec& u, int order) {
  m.check_tangent(x, u);
  const int dim = m.real_dim();
  const JetLayout& L = JetLayout::get(dim);
  std::vector<RJet> xs, us;
  for (int k = 0; k < dim; ++k) xs.emplace_back(x[k]);
  for (int k = 0; k < dim; ++k) us.push_back(RJet::variable(L, order, k, u[k]));
  return m.evaluate(std::span<const RJet>(xs), std::span<const RJet>(us));
}

/// Builds both evaluators from one templated formula(x, u).
template <class Derived>
class RealFamily : public Metric {
 public:
  MetricKind kind() const override { return MetricKind::real; }
  double evaluate(std::span<const double> x, std::span<const double> u) const override {
    return static_cast<const Derived&>(*this).template formula<double>(x, u);
  }
  RJet evaluate(std::span<const RJet> x, std::span<const RJet> u) const override {
    return static_cast<const Derived&>(*this).template formula<RJet>(x, u);
  }
};

/// Builds both evaluators from one templated formula(z, v) over complex coordinates.
template <class Derived>
class ComplexFamily : public Metric {
 public:
  double evaluate(std::span<const double> x, std::span<const double> u) const override { return run<double>(x, u); }
  RJet evaluate(std::span<const RJet> x, std::span<const RJet> u) const override { return run<RJet>(x, u); }

 private:
  template <class T>
  T run(std::span<const T> x, std::span<const T> u) const {
    const std::size_t n = x.size() / 2;
    std::vector<Cplx<T>> z, v;
    z.reserve(n);
    v.reserve(n);
    for (std::size_t a = 0; a < n; ++a) {
      z.emplace_back(x[a], x[n + a]);
      v.emplace_back(u[a], u[n + a]);
    }
    return static_cast<const Derived&>(*this).template formula<T>(std::span<const Cplx<T>>(z),
                                                                  std::span<const Cplx<T>>(v));
  }
};

/// The real metric G°(x; u) = G(z(x); u_o) of a complex metric.
class RealifiedMetric final : public Metric {
 public:
  explicit RealifiedMetric(MetricPtr inner) : inner_(std::move(inner)) {
    if (!inner_->is_complex()) throw StructuralError("realify_metric needs a complex metric");
  }

  MetricKind kind() const override { return MetricKind::real; }
  int real_dim() const override { return inner_->real_dim(); }
  std::string family() const override { return inner_->family(); }
  Json definition() const override {
    Json j = inner_->definition();
    j["realify"] = true;
    return j;
  }
  GroundTruth truths() const override { return inner_->truths(); }
  bool in_domain(std::span<const double> x) const override { return inner_->in_domain(x); }
  double domain_radius() const override { return inner_->domain_radius(); }
  double evaluate(std::span<const double> x, std::span<const double> u) const override {
    return inner_->evaluate(x, u);
  }
  RJet evaluate(std::span<const RJet> x, std::span<const RJet> u) const override { return inner_->evaluate(x, u); }

  const MetricPtr& complex_metric() const { return inner_; }

 private:
  MetricPtr inner_;
};

inline MetricPtr realify_metric(MetricPtr m) { return std::make_shared<RealifiedMetric>(std::move(m)); }

/// Gradient of a jet over the variables [offset, offset + dim).
inline Vec jet_gradient(const RJet& f, int offset, int dim) {
  Vec g(dim);
  for (int a = 0; a < dim; ++a) g[a] = f.d(offset + a);
  return g;
}

/// Hessian block d^2 f / dx^{r0+a} dx^{c0+b}.
inline Mat jet_hessian(const RJet& f, int r0, int c0, int dim) {
  Mat h(dim, dim);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) h(a, b) = f.dd(r0 + a, c0 + b);
  return h;
}

/// f_a = d f / dz^a from a real gradient.
inline CVec complex_gradient(const Vec& g) {
  const int n = half_dim(g.size());
  CVec r(n);
  for (int a = 0; a < n; ++a) r[a] = 0.5 * std::complex<double>(g[a], -g[n + a]);
  return r;
}

/// f_{a b-bar} = d^2 f / dz^a dzbar^b from a real Hessian.
inline CMat complex_hessian_mixed(const Mat& h) {
  const int n = half_dim(h.rows());
  CMat r(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      r(a, b) = 0.25 * std::complex<double>(h(a, b) + h(n + a, n + b), h(a, n + b) - h(n + a, b));
  return r;
}

/// f_{a b} = d^2 f / dz^a dz^b from a real Hessian.
inline CMat complex_hessian_pure(const Mat& h) {
  const int n = half_dim(h.rows());
  CMat r(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      r(a, b) = 0.25 * std::complex<double>(h(a, b) - h(n + a, n + b), -(h(a, n + b) + h(n + a, b)));
  return r;
}

inline std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace finsler
