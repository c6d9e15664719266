#pragma once

// Built-in metric families and their JSON definitions.

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "finsler/geometry.hpp"

namespace finsler {

namespace detail {

inline std::complex<double> parse_complex(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError("complex number must be a number or [re, im]");
}

inline Json complex_json(std::complex<double> c) {
  if (c.imag() == 0.0) return c.real();
  return Json::array({c.real(), c.imag()});
}

/// Rows of equal length; square unless rectangular is allowed.
inline CMat parse_complex_matrix(const Json& j, bool rectangular = false) {
  if (!j.is_array() || j.empty()) throw ConfigError("matrix must be a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto cols = j[0].is_array() ? static_cast<Eigen::Index>(j[0].size()) : 0;
  if (cols == 0) throw ConfigError("matrix rows must be non-empty arrays");
  if (!rectangular && cols != n) throw ConfigError("matrix must be square");
  CMat m(n, cols);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols) throw ConfigError("matrix rows must have equal length");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = parse_complex(j[r][c]);
  }
  return m;
}

inline Json complex_matrix_json(const CMat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

inline double min_eigenvalue(const CMat& h) {
  Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

template <class T>
T real_pow(const T& x, double p) {
  using std::pow;
  const double r = std::round(p);
  if (r == p && r >= 0.0 && r <= 16.0) return ipow(x, static_cast<int>(r));
  return pow(x, p);
}

}  // namespace detail

/// Hermitian quadratic h(z; v) = sum h_{ab}(z) v^a conj(v^b) acting on a block of
/// complex coordinates [offset, offset + dim).
struct HermitianFactor {
  enum class Kind { euclidean, constant, poincare, conformal };

  Kind kind = Kind::euclidean;
  int offset = 0;
  int dim = 1;
  /// euclidean: multiplier; poincare: c in c(r/(1-t) + |<v,z>|^2/(1-t)^2); conformal: c in (1+ct)r.
  double scale = 1.0;
  CMat matrix;

  template <class T>
  T quadratic(std::span<const Cplx<T>> z, std::span<const Cplx<T>> v) const {
    const auto o = static_cast<std::size_t>(offset);
    const auto d = static_cast<std::size_t>(dim);
    auto block_r = [&] {
      T r(0.0);
      for (std::size_t a = 0; a < d; ++a) r = r + norm2(v[o + a]);
      return r;
    };
    auto block_t = [&] {
      T t(0.0);
      for (std::size_t a = 0; a < d; ++a) t = t + norm2(z[o + a]);
      return t;
    };
    switch (kind) {
      case Kind::euclidean:
        return block_r() * scale;
      case Kind::constant: {
        T s(0.0);
        for (std::size_t a = 0; a < d; ++a) {
          s = s + norm2(v[o + a]) * matrix(a, a).real();
          for (std::size_t b = a + 1; b < d; ++b) {
            const Cplx<T> w = v[o + a] * conj(v[o + b]);
            const std::complex<double> h = matrix(a, b);
            s = s + (w.re * h.real() - w.im * h.imag()) * 2.0;
          }
        }
        return s;
      }
      case Kind::poincare: {
        const T t = block_t();
        const T r = block_r();
        Cplx<T> p(T(0.0), T(0.0));
        for (std::size_t a = 0; a < d; ++a) p = p + v[o + a] * conj(z[o + a]);
        const T q = T(1.0) / (T(1.0) - t);
        return (r * q + norm2(p) * q * q) * scale;
      }
      case Kind::conformal:
        return (T(1.0) + block_t() * scale) * block_r();
    }
    return T(0.0);
  }

  bool in_domain(std::span<const double> x, int n) const {
    if (kind != Kind::poincare) return true;
    double t = 0.0;
    for (int a = offset; a < offset + dim; ++a) t += x[a] * x[a] + x[n + a] * x[n + a];
    return t < 1.0;
  }

  double radius() const { return kind == Kind::poincare ? 1.0 : std::numeric_limits<double>::infinity(); }

  /// Coefficient matrix at z in the block frame.
  CMat matrix_at(const CVec& z) const {
    CMat h(dim, dim);
    const CVec zb = z.segment(offset, dim);
    switch (kind) {
      case Kind::euclidean:
        return CMat::Identity(dim, dim) * scale;
      case Kind::constant:
        return matrix;
      case Kind::poincare: {
        const double t = zb.squaredNorm();
        return scale * (CMat::Identity(dim, dim) / (1.0 - t) + zb.conjugate() * zb.transpose() / ((1.0 - t) * (1.0 - t)));
      }
      case Kind::conformal:
        return CMat::Identity(dim, dim) * (1.0 + scale * zb.squaredNorm());
    }
    return h;
  }

  Json to_json() const {
    Json j = {{"offset", offset}, {"dim", dim}};
    switch (kind) {
      case Kind::euclidean:
        j["type"] = "euclidean";
        j["scale"] = scale;
        break;
      case Kind::constant:
        j["type"] = "constant";
        j["matrix"] = detail::complex_matrix_json(matrix);
        break;
      case Kind::poincare:
        j["type"] = "poincare";
        j["scale"] = scale;
        break;
      case Kind::conformal:
        j["type"] = "conformal";
        j["scale"] = scale;
        break;
    }
    return j;
  }

  static HermitianFactor from_json(const Json& j, int default_offset, int default_dim) {
    if (!j.is_object()) throw ConfigError("Hermitian factor must be an object");
    HermitianFactor f;
    const std::string type = j.value("type", std::string("euclidean"));
    f.offset = j.value("offset", default_offset);
    if (type == "constant") {
      f.kind = Kind::constant;
      if (!j.contains("matrix")) throw ConfigError("constant Hermitian factor needs 'matrix'");
      f.matrix = detail::parse_complex_matrix(j["matrix"]);
      f.dim = static_cast<int>(f.matrix.rows());
      if (j.contains("dim") && j["dim"].get<int>() != f.dim) throw ConfigError("factor 'dim' disagrees with matrix size");
      if ((f.matrix - f.matrix.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw ConfigError("constant Hermitian factor matrix must be Hermitian");
      if (!(detail::min_eigenvalue(f.matrix) > 0.0))
        throw ConfigError("constant Hermitian factor matrix must be positive definite");
    } else {
      f.dim = j.value("dim", default_dim);
      f.scale = j.value("scale", 1.0);
      if (type == "euclidean") {
        f.kind = Kind::euclidean;
        if (!(f.scale > 0.0)) throw ConfigError("euclidean factor scale must be > 0");
      } else if (type == "poincare") {
        f.kind = Kind::poincare;
        if (!(f.scale > 0.0)) throw ConfigError("poincare factor scale must be > 0");
      } else if (type == "conformal") {
        f.kind = Kind::conformal;
        if (!(f.scale >= 0.0)) throw ConfigError("conformal factor needs scale >= 0");
      } else {
        throw ConfigError("unknown Hermitian factor type '" + type + "'");
      }
    }
    if (f.dim < 1 || f.offset < 0) throw ConfigError("Hermitian factor needs dim >= 1 and offset >= 0");
    return f;
  }
};

/// Expression over Hermitian quadratics: sums, positive multiples and real powers.
/// The total degree in v must be 2.
struct MetricExpr {
  enum class Op { quadratic, sum, scale, power };
  Op op = Op::quadratic;
  int factor = 0;
  double c = 1.0;
  std::vector<MetricExpr> args;

  template <class T>
  T eval(const std::vector<HermitianFactor>& factors, std::span<const Cplx<T>> z, std::span<const Cplx<T>> v) const {
    switch (op) {
      case Op::quadratic:
        return factors[static_cast<std::size_t>(factor)].template quadratic<T>(z, v);
      case Op::sum: {
        T s = args[0].eval<T>(factors, z, v);
        for (std::size_t k = 1; k < args.size(); ++k) s = s + args[k].eval<T>(factors, z, v);
        return s;
      }
      case Op::scale:
        return args[0].eval<T>(factors, z, v) * c;
      case Op::power:
        return detail::real_pow(args[0].eval<T>(factors, z, v), c);
    }
    return T(0.0);
  }

  /// Homogeneity degree in v.
  double degree() const {
    switch (op) {
      case Op::quadratic:
        return 2.0;
      case Op::sum: {
        const double d = args[0].degree();
        for (const auto& a : args)
          if (std::abs(a.degree() - d) > 1e-12) throw ConfigError("sum terms must have equal homogeneity degree");
        return d;
      }
      case Op::scale:
        return args[0].degree();
      case Op::power:
        return c * args[0].degree();
    }
    return 0.0;
  }

  static MetricExpr quad(int f) {
    MetricExpr e;
    e.op = Op::quadratic;
    e.factor = f;
    return e;
  }
  static MetricExpr sum(std::vector<MetricExpr> a) {
    MetricExpr e;
    e.op = Op::sum;
    e.args = std::move(a);
    return e;
  }
  static MetricExpr scaled(double c, MetricExpr a) {
    MetricExpr e;
    e.op = Op::scale;
    e.c = c;
    e.args.push_back(std::move(a));
    return e;
  }
  static MetricExpr power(double p, MetricExpr a) {
    MetricExpr e;
    e.op = Op::power;
    e.c = p;
    e.args.push_back(std::move(a));
    return e;
  }

  Json to_json() const {
    switch (op) {
      case Op::quadratic:
        return {{"quadratic", factor}};
      case Op::sum: {
        Json a = Json::array();
        for (const auto& x : args) a.push_back(x.to_json());
        return {{"sum", a}};
      }
      case Op::scale:
        return {{"scale", c}, {"of", args[0].to_json()}};
      case Op::power:
        return {{"power", c}, {"of", args[0].to_json()}};
    }
    return nullptr;
  }

  static MetricExpr from_json(const Json& j, int nfactors) {
    if (!j.is_object()) throw ConfigError("expression node must be an object");
    if (j.contains("quadratic")) {
      const int f = j["quadratic"].get<int>();
      if (f < 0 || f >= nfactors) throw ConfigError("expression refers to a missing factor");
      return quad(f);
    }
    if (j.contains("sum")) {
      if (!j["sum"].is_array() || j["sum"].empty()) throw ConfigError("'sum' needs a non-empty array");
      std::vector<MetricExpr> a;
      for (const auto& x : j["sum"]) a.push_back(from_json(x, nfactors));
      return sum(std::move(a));
    }
    if (j.contains("scale")) {
      const double c = j["scale"].get<double>();
      if (!(c > 0.0)) throw ConfigError("'scale' must be > 0");
      return scaled(c, from_json(j.at("of"), nfactors));
    }
    if (j.contains("power")) {
      const double p = j["power"].get<double>();
      if (!(p > 0.0)) throw ConfigError("'power' must be > 0");
      return power(p, from_json(j.at("of"), nfactors));
    }
    throw ConfigError("expression node needs one of quadratic/sum/scale/power");
  }
};

/// Metric given by an expression over Hermitian factors. Covers Euclidean,
/// Hermitian products, Poincare balls, Minkowski norms and Szabo metrics.
class CompositeMetric final : public ComplexFamily<CompositeMetric> {
 public:
  CompositeMetric(std::string family, int n, std::vector<HermitianFactor> factors, MetricExpr expr, Json definition,
                  GroundTruth truths, MetricKind kind)
      : family_(std::move(family)),
        n_(n),
        factors_(std::move(factors)),
        expr_(std::move(expr)),
        definition_(std::move(definition)),
        truths_(truths),
        kind_(kind) {
    for (const auto& f : factors_)
      if (f.offset + f.dim > n_) throw ConfigError("Hermitian factor block exceeds complex_dim");
    if (std::abs(expr_.degree() - 2.0) > 1e-12) throw ConfigError("metric expression must be homogeneous of degree 2");
  }

  MetricKind kind() const override { return kind_; }
  int real_dim() const override { return 2 * n_; }
  std::string family() const override { return family_; }
  Json definition() const override { return definition_; }
  GroundTruth truths() const override { return truths_; }
  bool in_domain(std::span<const double> x) const override {
    for (const auto& f : factors_)
      if (!f.in_domain(x, n_)) return false;
    return true;
  }
  double domain_radius() const override {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& f : factors_) r = std::min(r, f.radius());
    return r;
  }

  const std::vector<HermitianFactor>& factors() const { return factors_; }
  const MetricExpr& expression() const { return expr_; }
  /// True when G is a single sum of quadratics (a Hermitian metric).
  bool is_hermitian() const {
    if (expr_.op == MetricExpr::Op::quadratic) return true;
    if (expr_.op != MetricExpr::Op::sum) return false;
    for (const auto& a : expr_.args)
      if (a.op != MetricExpr::Op::quadratic) return false;
    return true;
  }

  template <class T>
  T formula(std::span<const Cplx<T>> z, std::span<const Cplx<T>> v) const {
    return expr_.eval<T>(factors_, z, v);
  }

 private:
  std::string family_;
  int n_;
  std::vector<HermitianFactor> factors_;
  MetricExpr expr_;
  Json definition_;
  GroundTruth truths_;
  MetricKind kind_;
};

/// Profile phi(t, s) of a U(n)-invariant metric G = r phi(t, s).
struct UnitaryProfile {
  enum class Kind { kahler_const, kahler_exp, kahler_inverse, poly };
  Kind kind = Kind::kahler_inverse;
  double c = 1.0;
  /// poly: terms c * t^i * s^j.
  std::vector<std::tuple<int, int, double>> terms;
  /// Domain t < t_max.
  double t_max = std::numeric_limits<double>::infinity();

  /// f(t) for profiles of the form f + f' s.
  template <class T>
  T f(const T& t) const {
    using std::exp;
    switch (kind) {
      case Kind::kahler_const:
        return T(c);
      case Kind::kahler_exp:
        return exp(t * c);
      case Kind::kahler_inverse:
        return T(1.0) / (T(1.0) - t);
      case Kind::poly:
        break;
    }
    throw ConfigError("profile is not of the form f + f' s");
  }

  template <class T>
  T phi(const T& t, const T& s) const {
    using std::exp;
    switch (kind) {
      case Kind::kahler_const:
        return T(c);
      case Kind::kahler_exp:
        return exp(t * c) * (T(1.0) + s * c);
      case Kind::kahler_inverse: {
        const T q = T(1.0) / (T(1.0) - t);
        return q + s * q * q;
      }
      case Kind::poly: {
        T r(0.0);
        for (const auto& [i, j, a] : terms) r = r + ipow(t, i) * ipow(s, j) * a;
        return r;
      }
    }
    return T(0.0);
  }

  bool is_f_form() const { return kind != Kind::poly; }

  Json to_json() const {
    Json j;
    switch (kind) {
      case Kind::kahler_const:
        j = {{"kind", "const"}, {"c", c}};
        break;
      case Kind::kahler_exp:
        j = {{"kind", "exp"}, {"c", c}};
        break;
      case Kind::kahler_inverse:
        j = {{"kind", "inverse"}};
        break;
      case Kind::poly: {
        Json t = Json::array();
        for (const auto& [i, jj, a] : terms) t.push_back({i, jj, a});
        j = {{"kind", "poly"}, {"terms", t}};
        break;
      }
    }
    if (std::isfinite(t_max)) j["t_max"] = t_max;
    return j;
  }

  static UnitaryProfile from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("profile must be an object");
    UnitaryProfile p;
    const std::string kind = j.value("kind", std::string("inverse"));
    if (kind == "const") {
      p.kind = Kind::kahler_const;
      p.c = j.value("c", 1.0);
      if (!(p.c > 0.0)) throw ConfigError("const profile needs c > 0");
    } else if (kind == "exp") {
      p.kind = Kind::kahler_exp;
      p.c = j.value("c", 1.0);
      if (p.c < 0.0) p.t_max = -1.0 / p.c;
    } else if (kind == "inverse") {
      p.kind = Kind::kahler_inverse;
      p.t_max = 1.0;
    } else if (kind == "poly") {
      p.kind = Kind::poly;
      if (!j.contains("terms") || !j["terms"].is_array() || j["terms"].empty())
        throw ConfigError("poly profile needs a non-empty 'terms' array of [i, j, c]");
      for (const auto& t : j["terms"]) {
        if (!t.is_array() || t.size() != 3) throw ConfigError("poly term must be [i, j, c]");
        const int i = t[0].get<int>(), jj = t[1].get<int>();
        if (i < 0 || jj < 0 || i > 8 || jj > 8) throw ConfigError("poly exponents must lie in [0, 8]");
        p.terms.emplace_back(i, jj, t[2].get<double>());
      }
    } else {
      throw ConfigError("unknown profile kind '" + kind + "'");
    }
    if (j.contains("t_max")) {
      const double tm = j["t_max"].get<double>();
      if (!(tm > 0.0)) throw ConfigError("profile t_max must be > 0");
      p.t_max = std::min(p.t_max, tm);
    }
    return p;
  }
};

/// G(z; v) = r phi(t, s), r = |v|^2, t = |z|^2, s = |<z, v>|^2 / r.
class UnitaryMetric final : public ComplexFamily<UnitaryMetric> {
 public:
  UnitaryMetric(int n, UnitaryProfile profile, Json definition, GroundTruth truths)
      : n_(n), profile_(std::move(profile)), definition_(std::move(definition)), truths_(truths) {}

  MetricKind kind() const override { return MetricKind::complex; }
  int real_dim() const override { return 2 * n_; }
  std::string family() const override { return "unitary"; }
  Json definition() const override { return definition_; }
  GroundTruth truths() const override { return truths_; }
  bool in_domain(std::span<const double> x) const override {
    double t = 0.0;
    for (double c : x) t += c * c;
    return t < profile_.t_max;
  }
  double domain_radius() const override { return std::sqrt(profile_.t_max); }

  const UnitaryProfile& profile() const { return profile_; }

  template <class T>
  T formula(std::span<const Cplx<T>> z, std::span<const Cplx<T>> v) const {
    T r(0.0), t(0.0);
    Cplx<T> p(T(0.0), T(0.0));
    for (std::size_t a = 0; a < z.size(); ++a) {
      r = r + norm2(v[a]);
      t = t + norm2(z[a]);
      p = p + z[a] * conj(v[a]);
    }
    const T s = norm2(p) / r;
    return r * profile_.phi(t, s);
  }

 private:
  int n_;
  UnitaryProfile profile_;
  Json definition_;
  GroundTruth truths_;
};

namespace detail {

inline int read_dim(const Json& spec, int fallback) {
  const int n = spec.value("complex_dim", fallback);
  if (n < 1 || n > 4) throw ConfigError("complex_dim must lie in [1, 4]");
  return n;
}

inline std::vector<HermitianFactor> read_factors(const Json& spec, int n) {
  std::vector<HermitianFactor> f;
  if (!spec.contains("factors")) {
    f.push_back(HermitianFactor{HermitianFactor::Kind::euclidean, 0, n, 1.0, {}});
    return f;
  }
  if (!spec["factors"].is_array() || spec["factors"].empty()) throw ConfigError("'factors' must be a non-empty array");
  int next = 0;
  for (const auto& j : spec["factors"]) {
    f.push_back(HermitianFactor::from_json(j, next, n - next > 0 ? n - next : 1));
    next = f.back().offset + f.back().dim;
  }
  return f;
}

inline void require_partition(const std::vector<HermitianFactor>& f, int n) {
  std::vector<int> cover(static_cast<std::size_t>(n), 0);
  for (const auto& x : f) {
    if (x.offset + x.dim > n) throw ConfigError("Hermitian factor block exceeds complex_dim");
    for (int a = x.offset; a < x.offset + x.dim; ++a) cover[static_cast<std::size_t>(a)] += 1;
  }
  for (int c : cover)
    if (c != 1) throw ConfigError("factors must cover coordinates 0..complex_dim-1 exactly once");
}

/// Holomorphic sectional curvature of a single constant-curvature factor, if any.
inline std::optional<double> factor_curvature(const HermitianFactor& f) {
  switch (f.kind) {
    case HermitianFactor::Kind::euclidean:
    case HermitianFactor::Kind::constant:
      return 0.0;
    case HermitianFactor::Kind::poincare:
      return -4.0 / f.scale;
    case HermitianFactor::Kind::conformal:
      if (f.scale == 0.0) return 0.0;
      return std::nullopt;
  }
  return std::nullopt;
}

inline MetricPtr make_hermitian(const std::string& family, int n, std::vector<HermitianFactor> f, Json def) {
  require_partition(f, n);
  std::vector<MetricExpr> terms;
  for (int k = 0; k < static_cast<int>(f.size()); ++k) terms.push_back(MetricExpr::quad(k));
  GroundTruth truth;
  if (f.size() == 1) {
    truth.holomorphic_curvature = factor_curvature(f[0]);
    if (n == 1) truth.flag_curvature = truth.holomorphic_curvature;
  }
  bool flat = true;
  for (const auto& x : f) flat = flat && factor_curvature(x) == std::optional<double>(0.0);
  if (flat) {
    truth.holomorphic_curvature = 0.0;
    truth.flag_curvature = 0.0;
    truth.horizontally_flat = true;
  }
  MetricExpr e = terms.size() == 1 ? terms[0] : MetricExpr::sum(std::move(terms));
  return std::make_shared<CompositeMetric>(family, n, std::move(f), std::move(e), std::move(def), truth,
                                           MetricKind::complex_strongly_convex);
}

}  // namespace detail

/// Build a metric from its definition document; see README for the schema.
inline MetricPtr instantiate(const Json& spec) {
  if (!spec.is_object()) throw ConfigError("metric definition must be an object");
  if (!spec.contains("family")) throw ConfigError("metric definition needs 'family'");
  const std::string family = spec["family"].get<std::string>();
  MetricPtr m;
  if (family == "euclidean") {
    const int n = detail::read_dim(spec, 1);
    const double scale = spec.value("scale", 1.0);
    if (!(scale > 0.0)) throw ConfigError("euclidean scale must be > 0");
    m = detail::make_hermitian(family, n, {HermitianFactor{HermitianFactor::Kind::euclidean, 0, n, scale, {}}}, spec);
  } else if (family == "poincare") {
    const int n = detail::read_dim(spec, 1);
    const double scale = spec.value("scale", 1.0);
    if (!(scale > 0.0)) throw ConfigError("poincare scale must be > 0");
    m = detail::make_hermitian(family, n, {HermitianFactor{HermitianFactor::Kind::poincare, 0, n, scale, {}}}, spec);
  } else if (family == "hermitian") {
    const int n = detail::read_dim(spec, 1);
    m = detail::make_hermitian(family, n, detail::read_factors(spec, n), spec);
  } else if (family == "minkowski") {
    const int n = detail::read_dim(spec, 2);
    const double p = spec.value("p", 2.0);
    if (!(p >= 1.0)) throw ConfigError("minkowski needs p >= 1");
    std::vector<HermitianFactor> norms;
    if (spec.contains("norms")) {
      if (!spec["norms"].is_array() || spec["norms"].empty()) throw ConfigError("'norms' must be a non-empty array");
      for (const auto& j : spec["norms"]) norms.push_back(HermitianFactor::from_json(j, 0, n));
    } else {
      for (int k = 0; k < n; ++k) {
        CMat a = CMat::Identity(n, n) * 0.25;
        a(k, k) = 1.0;
        norms.push_back(HermitianFactor{HermitianFactor::Kind::constant, 0, n, 1.0, a});
      }
    }
    CMat total = CMat::Zero(n, n);
    const bool integer_p = std::round(p) == p;
    for (const auto& h : norms) {
      if (h.kind != HermitianFactor::Kind::constant && h.kind != HermitianFactor::Kind::euclidean)
        throw ConfigError("minkowski norms must be constant Hermitian forms");
      CMat full = CMat::Zero(n, n);
      if (h.offset + h.dim > n) throw ConfigError("minkowski norm block exceeds complex_dim");
      full.block(h.offset, h.offset, h.dim, h.dim) = h.matrix_at(CVec::Zero(n));
      if (!integer_p && !(detail::min_eigenvalue(full) > 0.0))
        throw ConfigError("minkowski with non-integer p needs every norm positive definite");
      total += full;
    }
    if (!(detail::min_eigenvalue(total) > 0.0)) throw ConfigError("minkowski norms must sum to a full-rank form");
    std::vector<MetricExpr> terms;
    for (int k = 0; k < static_cast<int>(norms.size()); ++k)
      terms.push_back(MetricExpr::power(p, MetricExpr::quad(k)));
    MetricExpr e = MetricExpr::power(1.0 / p, MetricExpr::sum(std::move(terms)));
    GroundTruth truth{0.0, 0.0, true};
    m = std::make_shared<CompositeMetric>(family, n, std::move(norms), std::move(e), spec, truth,
                                          MetricKind::complex_strongly_convex);
  } else if (family == "szabo") {
    const int k = spec.value("k", 2);
    const double eps = spec.value("eps", 1.0);
    if (k < 2) throw ConfigError("szabo needs integer k >= 2");
    if (!(eps > 0.0)) throw ConfigError("szabo needs eps > 0");
    std::vector<HermitianFactor> f;
    if (spec.contains("factors")) {
      if (!spec["factors"].is_array() || spec["factors"].size() != 2)
        throw ConfigError("szabo needs exactly two factors");
      const HermitianFactor a = HermitianFactor::from_json(spec["factors"][0], 0, 1);
      const HermitianFactor b = HermitianFactor::from_json(spec["factors"][1], a.offset + a.dim, 1);
      f = {a, b};
    } else {
      f = {HermitianFactor{HermitianFactor::Kind::euclidean, 0, 1, 1.0, {}},
           HermitianFactor{HermitianFactor::Kind::euclidean, 1, 1, 1.0, {}}};
    }
    const int n = f[1].offset + f[1].dim;
    if (spec.contains("complex_dim") && spec["complex_dim"].get<int>() != n)
      throw ConfigError("szabo complex_dim must equal the total factor dimension");
    detail::require_partition(f, n);
    MetricExpr root = MetricExpr::power(
        1.0 / k, MetricExpr::sum({MetricExpr::power(k, MetricExpr::quad(0)), MetricExpr::power(k, MetricExpr::quad(1))}));
    MetricExpr e = MetricExpr::sum({MetricExpr::quad(0), MetricExpr::quad(1), MetricExpr::scaled(eps, std::move(root))});
    GroundTruth truth;
    if (detail::factor_curvature(f[0]) == std::optional<double>(0.0) &&
        detail::factor_curvature(f[1]) == std::optional<double>(0.0) && f[0].kind != HermitianFactor::Kind::conformal &&
        f[1].kind != HermitianFactor::Kind::conformal)
      truth = GroundTruth{0.0, 0.0, true};
    m = std::make_shared<CompositeMetric>(family, n, std::move(f), std::move(e), spec, truth,
                                          MetricKind::complex_strongly_convex);
  } else if (family == "composite") {
    const int n = detail::read_dim(spec, 1);
    auto f = detail::read_factors(spec, n);
    if (!spec.contains("expr")) throw ConfigError("composite metric needs 'expr'");
    MetricExpr e = MetricExpr::from_json(spec["expr"], static_cast<int>(f.size()));
    m = std::make_shared<CompositeMetric>(family, n, std::move(f), std::move(e), spec, GroundTruth{},
                                          MetricKind::complex);
  } else if (family == "unitary") {
    const int n = detail::read_dim(spec, 1);
    UnitaryProfile p = UnitaryProfile::from_json(spec.value("profile", Json::object()));
    GroundTruth truth;
    if (p.kind == UnitaryProfile::Kind::kahler_inverse) {
      truth.holomorphic_curvature = -4.0;
      if (n == 1) truth.flag_curvature = -4.0;
    } else if (p.kind == UnitaryProfile::Kind::kahler_const) {
      truth = GroundTruth{0.0, 0.0, true};
    }
    m = std::make_shared<UnitaryMetric>(n, std::move(p), spec, truth);
  } else {
    throw ConfigError("unknown metric family '" + family + "'");
  }
  if (spec.value("realify", false)) return realify_metric(m);
  return m;
}

}  // namespace finsler
