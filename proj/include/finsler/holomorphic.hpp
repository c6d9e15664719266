#pragma once

// Closed-form holomorphic maps and holomorphic disk probes, evaluated over doubles or real jets.

#include <complex>
#include <string>
#include <vector>

#include "finsler/complex.hpp"
#include "finsler/geometry.hpp"
#include "finsler/metrics.hpp"

namespace finsler {

/// f: C^n -> C^N given by a catalog document.
///   identity {n}; power {k, c}; mobius {a, theta}; linear {matrix (N x n), offset};
///   product {maps: [1-dim maps]}; constant {n, value}.
class HolomorphicMap {
 public:
  enum class Kind { identity, power, mobius, linear, product, constant };

  static HolomorphicMap from_json(const Json& j) {
    HolomorphicMap f;
    f.def_ = j;
    const std::string type = j.at("type").get<std::string>();
    if (type == "identity") {
      f.kind_ = Kind::identity;
      f.n_ = f.N_ = j.value("n", 1);
    } else if (type == "power") {
      f.kind_ = Kind::power;
      f.k_ = j.value("k", 2);
      if (f.k_ < 1) throw ConfigError("power map needs k >= 1");
      f.c_ = j.contains("c") ? detail::parse_complex(j["c"]) : cd(1.0);
      f.n_ = f.N_ = 1;
    } else if (type == "mobius") {
      f.kind_ = Kind::mobius;
      f.a_ = j.contains("a") ? detail::parse_complex(j["a"]) : cd(0.0);
      if (!(std::abs(f.a_) < 1.0)) throw ConfigError("mobius map needs |a| < 1");
      f.c_ = std::polar(1.0, j.value("theta", 0.0));
      f.n_ = f.N_ = 1;
    } else if (type == "linear") {
      f.kind_ = Kind::linear;
      f.A_ = detail::parse_complex_matrix(j.at("matrix"), true);
      f.N_ = static_cast<int>(f.A_.rows());
      f.n_ = static_cast<int>(f.A_.cols());
      f.b_ = CVec::Zero(f.N_);
      if (j.contains("offset"))
        for (int i = 0; i < f.N_; ++i) f.b_[i] = detail::parse_complex(j["offset"].at(static_cast<std::size_t>(i)));
    } else if (type == "product") {
      f.kind_ = Kind::product;
      for (const auto& s : j.at("maps")) {
        f.parts_.push_back(from_json(s));
        if (f.parts_.back().n_ != 1 || f.parts_.back().N_ != 1) throw ConfigError("product factors must be 1-dim");
      }
      f.n_ = f.N_ = static_cast<int>(f.parts_.size());
    } else if (type == "constant") {
      f.kind_ = Kind::constant;
      f.n_ = j.value("n", 1);
      const Json& v = j.at("value");
      f.N_ = static_cast<int>(v.size());
      f.b_ = CVec(f.N_);
      for (int i = 0; i < f.N_; ++i) f.b_[i] = detail::parse_complex(v.at(static_cast<std::size_t>(i)));
    } else {
      throw ConfigError("unknown map type " + type);
    }
    if (f.n_ < 1 || f.N_ < 1 || f.n_ > 4 || f.N_ > 4) throw ConfigError("map dimensions must lie in [1, 4]");
    return f;
  }

  int domain_dim() const { return n_; }
  int target_dim() const { return N_; }
  const Json& definition() const { return def_; }
  std::string id() const { return def_.value("id", def_.at("type").get<std::string>()); }
  bool is_constant() const { return kind_ == Kind::constant; }

  template <class T>
  std::vector<Cplx<T>> eval(const std::vector<Cplx<T>>& z) const {
    check(z.size());
    std::vector<Cplx<T>> r;
    switch (kind_) {
      case Kind::identity:
        return z;
      case Kind::power:
        return {Cplx<T>(c_) * cpow(z[0], k_)};
      case Kind::mobius:
        return {Cplx<T>(c_) * (z[0] - Cplx<T>(a_)) / (Cplx<T>(cd(1.0)) - Cplx<T>(std::conj(a_)) * z[0])};
      case Kind::linear:
        for (int i = 0; i < N_; ++i) {
          Cplx<T> s(b_[i]);
          for (int j = 0; j < n_; ++j) s += Cplx<T>(A_(i, j)) * z[static_cast<std::size_t>(j)];
          r.push_back(s);
        }
        return r;
      case Kind::product:
        for (std::size_t i = 0; i < parts_.size(); ++i) r.push_back(parts_[i].eval(std::vector<Cplx<T>>{z[i]})[0]);
        return r;
      case Kind::constant:
        for (int i = 0; i < N_; ++i) r.push_back(Cplx<T>(b_[i]));
        return r;
    }
    return r;
  }

  /// df(z) w, from the closed-form derivatives.
  template <class T>
  std::vector<Cplx<T>> push(const std::vector<Cplx<T>>& z, const std::vector<Cplx<T>>& w) const {
    check(z.size());
    std::vector<Cplx<T>> r;
    switch (kind_) {
      case Kind::identity:
        return w;
      case Kind::power:
        return {Cplx<T>(c_ * double(k_)) * cpow(z[0], k_ - 1) * w[0]};
      case Kind::mobius: {
        const Cplx<T> d = Cplx<T>(cd(1.0)) - Cplx<T>(std::conj(a_)) * z[0];
        return {Cplx<T>(c_ * (1.0 - std::norm(a_))) * w[0] / (d * d)};
      }
      case Kind::linear:
        for (int i = 0; i < N_; ++i) {
          Cplx<T> s(cd(0.0));
          for (int j = 0; j < n_; ++j) s += Cplx<T>(A_(i, j)) * w[static_cast<std::size_t>(j)];
          r.push_back(s);
        }
        return r;
      case Kind::product:
        for (std::size_t i = 0; i < parts_.size(); ++i)
          r.push_back(parts_[i].push(std::vector<Cplx<T>>{z[i]}, std::vector<Cplx<T>>{w[i]})[0]);
        return r;
      case Kind::constant:
        for (int i = 0; i < N_; ++i) r.push_back(Cplx<T>(cd(0.0)));
        return r;
    }
    return r;
  }

  CVec operator()(const CVec& z) const { return to_cvec(eval(from_cvec(z))); }
  CVec differential(const CVec& z, const CVec& w) const { return to_cvec(push(from_cvec(z), from_cvec(w))); }

  static std::vector<Cplx<double>> from_cvec(const CVec& z) {
    std::vector<Cplx<double>> r;
    for (Eigen::Index i = 0; i < z.size(); ++i) r.emplace_back(z[i].real(), z[i].imag());
    return r;
  }
  static CVec to_cvec(const std::vector<Cplx<double>>& z) {
    CVec r(static_cast<Eigen::Index>(z.size()));
    for (std::size_t i = 0; i < z.size(); ++i) r[static_cast<Eigen::Index>(i)] = to_std(z[i]);
    return r;
  }

 private:
  void check(std::size_t n) const {
    if (static_cast<int>(n) != n_) throw StructuralError("map applied to a point of wrong dimension");
  }

  Kind kind_ = Kind::identity;
  int n_ = 1, N_ = 1, k_ = 2;
  cd c_ = 1.0, a_ = 0.0;
  CMat A_;
  CVec b_;
  std::vector<HolomorphicMap> parts_;
  Json def_;
};

/// Disk probe phi(zeta) = z + zeta v + zeta^2 w, optionally precomposed with the disk automorphism
/// h(omega) = e^{i theta} (omega - a) / (1 - conj(a) omega).
struct DiskProbe {
  CVec z, v, w;
  bool reparam = false;
  cd a = 0.0;
  double theta = 0.0;
  std::string kind = "linear";

  int dim() const { return static_cast<int>(z.size()); }

  template <class T>
  Cplx<T> h(const Cplx<T>& o) const {
    return Cplx<T>(std::polar(1.0, theta)) * (o - Cplx<T>(a)) / (Cplx<T>(cd(1.0)) - Cplx<T>(std::conj(a)) * o);
  }
  template <class T>
  Cplx<T> dh(const Cplx<T>& o) const {
    const Cplx<T> d = Cplx<T>(cd(1.0)) - Cplx<T>(std::conj(a)) * o;
    return Cplx<T>(std::polar(1.0, theta) * (1.0 - std::norm(a))) / (d * d);
  }

  /// Point and derivative at the disk parameter.
  template <class T>
  std::pair<std::vector<Cplx<T>>, std::vector<Cplx<T>>> eval(const Cplx<T>& param) const {
    const Cplx<T> zeta = reparam ? h(param) : param;
    const Cplx<T> scale = reparam ? dh(param) : Cplx<T>(cd(1.0));
    std::vector<Cplx<T>> p, d;
    for (int k = 0; k < dim(); ++k) {
      const Cplx<T> zk(z[k]), vk(v[k]), wk(w[k]);
      p.push_back(zk + zeta * vk + zeta * zeta * wk);
      d.push_back((vk + Cplx<T>(cd(2.0)) * zeta * wk) * scale);
    }
    return {p, d};
  }

  static DiskProbe linear(const CVec& z, const CVec& v) { return {z, v, CVec::Zero(z.size())}; }
  static DiskProbe quadratic(const CVec& z, const CVec& v, const CVec& w) {
    DiskProbe p{z, v, w};
    p.kind = "quadratic";
    return p;
  }
  DiskProbe precomposed(cd a_, double theta_) const {
    DiskProbe p = *this;
    p.reparam = true;
    p.a = a_;
    p.theta = theta_;
    return p;
  }
};

}  // namespace finsler
