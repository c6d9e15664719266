#pragma once

// Truncated multivariate Taylor jets, total order at most 4.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "finsler/errors.hpp"

namespace finsler {

inline constexpr int kMaxJetOrder = 4;
inline constexpr int kMaxJetVars = 16;

/// Monomial table shared by all jets over the same number of variables.
/// Monomials are sorted by total degree; within a degree, exponents of lower
/// variables come first in descending order, so the degree-1 block is e_0..e_{n-1}.
class JetLayout {
 public:
  static const JetLayout& get(int nvars) {
    if (nvars < 1 || nvars > kMaxJetVars)
      throw StructuralError("jet variable count " + std::to_string(nvars) + " outside [1, " +
                            std::to_string(kMaxJetVars) + "]");
    static std::mutex mutex;
    static std::array<std::unique_ptr<JetLayout>, kMaxJetVars + 1> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[static_cast<std::size_t>(nvars)];
    if (!slot) slot.reset(new JetLayout(nvars));
    return *slot;
  }

  int nvars() const { return nvars_; }
  /// Number of monomials with total degree <= order.
  std::size_t size(int order) const { return degree_end_[static_cast<std::size_t>(order)]; }
  int degree(std::size_t k) const { return degree_[k]; }
  std::span<const std::uint8_t> exponents(std::size_t k) const {
    return {exps_.data() + k * static_cast<std::size_t>(nvars_), static_cast<std::size_t>(nvars_)};
  }
  /// Index of the monomial with exponents e, or -1 if it exceeds the maximal order.
  std::int32_t find(std::span<const int> e) const {
    if (static_cast<int>(e.size()) != nvars_) throw StructuralError("exponent vector has wrong length");
    int deg = 0;
    std::uint64_t key = 0;
    for (int v = 0; v < nvars_; ++v) {
      if (e[v] < 0) throw StructuralError("negative exponent");
      deg += e[v];
      if (deg > kMaxJetOrder) return -1;
      key |= static_cast<std::uint64_t>(e[v]) << (4 * v);
    }
    auto it = index_.find(key);
    return it == index_.end() ? -1 : it->second;
  }
  /// Index of monomial k times x_var, or -1 past the maximal order.
  std::int32_t raised(std::size_t k, int var) const {
    return raise_[k * static_cast<std::size_t>(nvars_) + static_cast<std::size_t>(var)];
  }

  // Product table: the pairs (i, j) with m_i m_j = m_k are
  // pair_i/pair_j in [pair_begin(k), pair_begin(k+1)).
  std::uint32_t pair_begin(std::size_t k) const { return pair_begin_[k]; }
  const std::uint16_t* pair_i() const { return pair_i_.data(); }
  const std::uint16_t* pair_j() const { return pair_j_.data(); }

 private:
  explicit JetLayout(int nvars) : nvars_(nvars) {
    std::vector<int> e(static_cast<std::size_t>(nvars), 0);
    degree_end_.assign(kMaxJetOrder + 1, 0);
    for (int d = 0; d <= kMaxJetOrder; ++d) {
      enumerate(e, 0, d, d);
      degree_end_[static_cast<std::size_t>(d)] = degree_.size();
    }
    const std::size_t n = degree_.size();
    raise_.assign(n * static_cast<std::size_t>(nvars), -1);
    std::vector<int> tmp(static_cast<std::size_t>(nvars));
    for (std::size_t k = 0; k < n; ++k) {
      for (int v = 0; v < nvars; ++v) {
        auto ek = exponents(k);
        for (int w = 0; w < nvars; ++w) tmp[w] = ek[w];
        tmp[v] += 1;
        raise_[k * nvars + v] = find(tmp);
      }
    }
    std::vector<std::vector<std::pair<std::uint16_t, std::uint16_t>>> by_result(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (degree_[i] + degree_[j] > kMaxJetOrder) continue;
        auto ei = exponents(i);
        auto ej = exponents(j);
        for (int w = 0; w < nvars; ++w) tmp[w] = ei[w] + ej[w];
        by_result[static_cast<std::size_t>(find(tmp))].emplace_back(i, j);
      }
    }
    pair_begin_.assign(n + 1, 0);
    for (std::size_t k = 0; k < n; ++k) {
      pair_begin_[k] = static_cast<std::uint32_t>(pair_i_.size());
      for (auto [i, j] : by_result[k]) {
        pair_i_.push_back(i);
        pair_j_.push_back(j);
      }
    }
    pair_begin_[n] = static_cast<std::uint32_t>(pair_i_.size());
  }

  void enumerate(std::vector<int>& e, int var, int remaining, int deg) {
    if (var == nvars_ - 1) {
      e[static_cast<std::size_t>(var)] = remaining;
      std::uint64_t key = 0;
      for (int v = 0; v < nvars_; ++v) {
        exps_.push_back(static_cast<std::uint8_t>(e[v]));
        key |= static_cast<std::uint64_t>(e[v]) << (4 * v);
      }
      index_.emplace(key, static_cast<std::int32_t>(degree_.size()));
      degree_.push_back(deg);
      return;
    }
    for (int p = remaining; p >= 0; --p) {
      e[static_cast<std::size_t>(var)] = p;
      enumerate(e, var + 1, remaining - p, deg);
    }
    e[static_cast<std::size_t>(var)] = 0;
  }

  int nvars_;
  std::vector<std::size_t> degree_end_;
  std::vector<int> degree_;
  std::vector<std::uint8_t> exps_;
  std::map<std::uint64_t, std::int32_t> index_;
  std::vector<std::int32_t> raise_;
  std::vector<std::uint32_t> pair_begin_;
  std::vector<std::uint16_t> pair_i_, pair_j_;
};

inline constexpr int kConstantOrder = 127;

/// Truncated Taylor expansion around a base point. A jet without a layout is an
/// exact constant and combines with any other jet.
template <class T>
class Jet {
 public:
  using value_type = T;

  Jet() : c_(1, T{}) {}
  Jet(T value) : c_(1, value) {}  // NOLINT: implicit constants keep formulas generic
  template <class S>
    requires(std::is_arithmetic_v<S> && !std::is_same_v<S, T>)
  Jet(S value) : c_(1, T(static_cast<double>(value))) {}  // NOLINT
  Jet(const JetLayout& layout, int order, T value) : layout_(&layout), order_(order) {
    check_order(order);
    c_.assign(layout.size(order), T{});
    c_[0] = value;
  }

  static Jet variable(const JetLayout& layout, int order, int var, T value) {
    if (var < 0 || var >= layout.nvars()) throw StructuralError("jet variable index out of range");
    Jet r(layout, order, value);
    if (order >= 1) r.c_[1 + static_cast<std::size_t>(var)] = T(1);
    return r;
  }

  bool is_constant() const { return layout_ == nullptr; }
  const JetLayout* layout() const { return layout_; }
  int order() const { return layout_ ? order_ : kConstantOrder; }
  int nvars() const { return layout_ ? layout_->nvars() : 0; }
  T value() const { return c_[0]; }
  std::span<const T> coefficients() const { return c_; }
  std::span<T> coefficients() { return c_; }
  std::size_t size() const { return c_.size(); }
  T operator[](std::size_t k) const { return c_[k]; }
  T& operator[](std::size_t k) { return c_[k]; }

  /// Partial derivative with multi-index e (not the Taylor coefficient).
  T partial(std::span<const int> e) const {
    int deg = 0;
    double fact = 1.0;
    for (int p : e) {
      deg += p;
      for (int q = 2; q <= p; ++q) fact *= q;
    }
    if (!layout_) return deg == 0 ? c_[0] : T{};
    if (deg > order_) throw StructuralError("requested derivative exceeds jet order");
    const auto k = layout_->find(e);
    return c_[static_cast<std::size_t>(k)] * fact;
  }
  /// First partial along one variable.
  T d(int var) const {
    if (!layout_) return T{};
    if (order_ < 1) throw StructuralError("requested derivative exceeds jet order");
    return c_[1 + static_cast<std::size_t>(var)];
  }
  /// Second partial along two variables.
  T dd(int a, int b) const {
    if (!layout_) return T{};
    if (order_ < 2) throw StructuralError("requested derivative exceeds jet order");
    const auto k = layout_->raised(1 + static_cast<std::size_t>(a), b);
    return a == b ? c_[static_cast<std::size_t>(k)] * 2.0 : c_[static_cast<std::size_t>(k)];
  }

  Jet& operator+=(const Jet& o) { return *this = *this + o; }
  Jet& operator-=(const Jet& o) { return *this = *this - o; }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  Jet operator-() const {
    Jet r = *this;
    for (auto& x : r.c_) x = -x;
    return r;
  }

  friend Jet operator+(const Jet& a, const Jet& b) { return combine(a, b, T(1)); }
  friend Jet operator-(const Jet& a, const Jet& b) { return combine(a, b, T(-1)); }

  friend Jet operator*(const Jet& a, const Jet& b) {
    if (!a.layout_) return b.scaled(a.c_[0]);
    if (!b.layout_) return a.scaled(b.c_[0]);
    const JetLayout& L = same_layout(a, b);
    const int o = std::min(a.order_, b.order_);
    Jet r;
    r.layout_ = &L;
    r.order_ = o;
    const std::size_t n = L.size(o);
    r.c_.resize(n);
    const std::uint16_t* pi = L.pair_i();
    const std::uint16_t* pj = L.pair_j();
    const T* ac = a.c_.data();
    const T* bc = b.c_.data();
    for (std::size_t k = 0; k < n; ++k) {
      T s{};
      const std::uint32_t end = L.pair_begin(k + 1);
      for (std::uint32_t p = L.pair_begin(k); p < end; ++p) s += ac[pi[p]] * bc[pj[p]];
      r.c_[k] = s;
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    if (!b.layout_) return a.scaled(T(1) / b.c_[0]);
    return a * reciprocal(b);
  }

  friend bool operator<(const Jet& a, const Jet& b) { return a.value() < b.value(); }
  friend bool operator>(const Jet& a, const Jet& b) { return a.value() > b.value(); }

  Jet scaled(T s) const {
    Jet r = *this;
    for (auto& x : r.c_) x *= s;
    return r;
  }

  /// Drop all coefficients above the given order.
  Jet truncated(int order) const {
    if (!layout_ || order >= order_) return *this;
    check_order(order);
    Jet r = *this;
    r.order_ = order;
    r.c_.resize(layout_->size(order));
    return r;
  }

  /// Replace the constant term.
  void set_value(T v) { c_[0] = v; }

  friend Jet derivative(const Jet& a, int var) {
    if (!a.layout_) return Jet(T{});
    if (a.order_ < 1) throw StructuralError("cannot differentiate an order-0 jet");
    if (var < 0 || var >= a.layout_->nvars()) throw StructuralError("jet variable index out of range");
    const JetLayout& L = *a.layout_;
    Jet r;
    r.layout_ = &L;
    r.order_ = a.order_ - 1;
    const std::size_t n = L.size(r.order_);
    r.c_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto up = static_cast<std::size_t>(L.raised(k, var));
      r.c_[k] = a.c_[up] * static_cast<double>(L.exponents(k)[static_cast<std::size_t>(var)] + 1);
    }
    return r;
  }

  /// sum_k d[k] (a - a0)^k, truncated at the order of a. d holds Taylor
  /// coefficients of the outer function at a0.
  friend Jet compose(const Jet& a, std::span<const T> d) {
    if (!a.layout_) {
      return Jet(d[0]);
    }
    const int o = a.order_;
    Jet h = a;
    h.c_[0] = T{};
    Jet r(*a.layout_, o, d[static_cast<std::size_t>(o)]);
    for (int k = o - 1; k >= 0; --k) {
      r = r * h;
      r.c_[0] += d[static_cast<std::size_t>(k)];
    }
    return r;
  }

  friend Jet reciprocal(const Jet& a) {
    const T a0 = a.value();
    if (a0 == T{}) throw DomainError("division by a jet with zero value");
    std::array<T, kMaxJetOrder + 1> d{};
    const T inv = T(1) / a0;
    T p = inv;
    for (int k = 0; k <= kMaxJetOrder; ++k) {
      d[k] = p;
      p *= -inv;
    }
    return compose(a, std::span<const T>(d.data(), d.size()));
  }

 private:
  static void check_order(int order) {
    if (order < 0 || order > kMaxJetOrder)
      throw StructuralError("jet order " + std::to_string(order) + " outside [0, 4]");
  }

  static const JetLayout& same_layout(const Jet& a, const Jet& b) {
    if (a.layout_ != b.layout_) throw StructuralError("jets over different variable sets");
    return *a.layout_;
  }

  static Jet combine(const Jet& a, const Jet& b, T sign) {
    if (!a.layout_ && !b.layout_) return Jet(a.c_[0] + sign * b.c_[0]);
    if (!b.layout_) {
      Jet r = a;
      r.c_[0] += sign * b.c_[0];
      return r;
    }
    if (!a.layout_) {
      Jet r = b.scaled(sign);
      r.c_[0] += a.c_[0];
      return r;
    }
    same_layout(a, b);
    const Jet& lo = a.order_ <= b.order_ ? a : b;
    Jet r = lo;
    const std::size_t n = r.c_.size();
    if (&lo == &a) {
      for (std::size_t k = 0; k < n; ++k) r.c_[k] += sign * b.c_[k];
    } else {
      for (std::size_t k = 0; k < n; ++k) r.c_[k] = a.c_[k] + sign * b.c_[k];
    }
    return r;
  }

  template <class U>
  friend class Jet;

  const JetLayout* layout_ = nullptr;
  int order_ = kConstantOrder;
  std::vector<T> c_;
};

using RJet = Jet<double>;
using CJet = Jet<std::complex<double>>;

template <class T>
struct is_jet : std::false_type {};
template <class T>
struct is_jet<Jet<T>> : std::true_type {};
template <class T>
inline constexpr bool is_jet_v = is_jet<T>::value;

// Scalar on either side. Only scalars convertible to the coefficient type.
template <class T, class S>
  requires(!is_jet_v<S> && std::is_convertible_v<S, T>)
Jet<T> operator*(const Jet<T>& a, S s) {
  return a.scaled(T(s));
}
template <class T, class S>
  requires(!is_jet_v<S> && std::is_convertible_v<S, T>)
Jet<T> operator*(S s, const Jet<T>& a) {
  return a.scaled(T(s));
}
template <class T, class S>
  requires(!is_jet_v<S> && std::is_convertible_v<S, T>)
Jet<T> operator/(const Jet<T>& a, S s) {
  return a.scaled(T(1) / T(s));
}
template <class T, class S>
  requires(!is_jet_v<S> && std::is_convertible_v<S, T>)
Jet<T> operator+(const Jet<T>& a, S s) {
  return a + Jet<T>(T(s));
}
template <class T, class S>
  requires(!is_jet_v<S> && std::is_convertible_v<S, T>)
Jet<T> operator+(S s, const Jet<T>& a) {
  return Jet<T>(T(s)) + a;
}
template <class T, class S>
  requires(!is_jet_v<S> && std::is_convertible_v<S, T>)
Jet<T> operator-(const Jet<T>& a, S s) {
  return a - Jet<T>(T(s));
}
template <class T, class S>
  requires(!is_jet_v<S> && std::is_convertible_v<S, T>)
Jet<T> operator-(S s, const Jet<T>& a) {
  return Jet<T>(T(s)) - a;
}
template <class T, class S>
  requires(!is_jet_v<S> && std::is_convertible_v<S, T>)
Jet<T> operator/(S s, const Jet<T>& a) {
  return reciprocal(a).scaled(T(s));
}

inline RJet exp(const RJet& a) {
  std::array<double, kMaxJetOrder + 1> d{};
  const double e = std::exp(a.value());
  double f = 1.0;
  for (int k = 0; k <= kMaxJetOrder; ++k) {
    if (k > 0) f *= k;
    d[k] = e / f;
  }
  return compose(a, std::span<const double>(d.data(), d.size()));
}

inline RJet log(const RJet& a) {
  const double a0 = a.value();
  if (!(a0 > 0.0)) throw DomainError("log of a non-positive jet value");
  std::array<double, kMaxJetOrder + 1> d{};
  d[0] = std::log(a0);
  double p = 1.0;
  for (int k = 1; k <= kMaxJetOrder; ++k) {
    p /= a0;
    d[k] = ((k % 2) ? 1.0 : -1.0) * p / k;
  }
  return compose(a, std::span<const double>(d.data(), d.size()));
}

/// Real power with a positive base value.
inline RJet pow(const RJet& a, double e) {
  const double a0 = a.value();
  if (!(a0 > 0.0)) throw DomainError("non-integer power of a non-positive jet value");
  std::array<double, kMaxJetOrder + 1> d{};
  d[0] = std::pow(a0, e);
  double binom = 1.0;
  for (int k = 1; k <= kMaxJetOrder; ++k) {
    binom *= (e - (k - 1)) / k;
    d[k] = binom * std::pow(a0, e - k);
  }
  return compose(a, std::span<const double>(d.data(), d.size()));
}

inline RJet sqrt(const RJet& a) {
  const double a0 = a.value();
  if (!(a0 > 0.0)) throw DomainError("square root of a non-positive jet value");
  std::array<double, kMaxJetOrder + 1> d{};
  const double s = std::sqrt(a0);
  d[0] = s;
  double binom = 1.0;
  double p = s;
  for (int k = 1; k <= kMaxJetOrder; ++k) {
    binom *= (0.5 - (k - 1)) / k;
    p /= a0;
    d[k] = binom * p;
  }
  return compose(a, std::span<const double>(d.data(), d.size()));
}

inline RJet sin(const RJet& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  const double cyc[4] = {s, c, -s, -c};
  std::array<double, kMaxJetOrder + 1> d{};
  double f = 1.0;
  for (int k = 0; k <= kMaxJetOrder; ++k) {
    if (k > 0) f *= k;
    d[k] = cyc[k % 4] / f;
  }
  return compose(a, std::span<const double>(d.data(), d.size()));
}

inline RJet cos(const RJet& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  const double cyc[4] = {c, -s, -c, s};
  std::array<double, kMaxJetOrder + 1> d{};
  double f = 1.0;
  for (int k = 0; k <= kMaxJetOrder; ++k) {
    if (k > 0) f *= k;
    d[k] = cyc[k % 4] / f;
  }
  return compose(a, std::span<const double>(d.data(), d.size()));
}

/// Non-negative integer power by repeated multiplication; valid at zero base.
template <class T>
T ipow(const T& a, int k) {
  if (k < 0) throw ConfigError("ipow needs a non-negative exponent");
  T r = T(1.0);
  T base = a;
  bool first = true;
  while (k > 0) {
    if (k & 1) {
      r = first ? base : r * base;
      first = false;
    }
    k >>= 1;
    if (k) base = base * base;
  }
  return r;
}

inline double value_of(double x) { return x; }
template <class T>
T value_of(const Jet<T>& x) {
  return x.value();
}

/// Complex-coefficient copy of a real jet.
inline CJet to_complex(const RJet& a) {
  if (a.is_constant()) return CJet(std::complex<double>(a.value()));
  CJet r(*a.layout(), a.order(), {});
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k];
  return r;
}

inline CJet conj(const CJet& a) {
  CJet r = a;
  for (auto& x : r.coefficients()) x = std::conj(x);
  return r;
}

inline RJet real(const CJet& a) {
  if (a.is_constant()) return RJet(a.value().real());
  RJet r(*a.layout(), a.order(), 0.0);
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k].real();
  return r;
}

inline RJet imag(const CJet& a) {
  if (a.is_constant()) return RJet(a.value().imag());
  RJet r(*a.layout(), a.order(), 0.0);
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k].imag();
  return r;
}

/// Largest coefficient magnitude.
template <class T>
double max_abs(const Jet<T>& a) {
  double m = 0.0;
  for (const auto& x : a.coefficients()) m = std::max(m, std::abs(x));
  return m;
}

/// Jets seeded at a point: jet k is x[k] + t_k, all over the same variables.
inline std::vector<RJet> lift(std::span<const double> x, int order) {
  const JetLayout& L = JetLayout::get(static_cast<int>(x.size()));
  std::vector<RJet> r;
  r.reserve(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) r.push_back(RJet::variable(L, order, static_cast<int>(k), x[k]));
  return r;
}

/// Jets at x where only the listed coordinates vary; the others stay constant.
inline std::vector<RJet> lift(std::span<const double> x, std::span<const int> active, int order) {
  if (order < 0 || order > kMaxJetOrder) throw ConfigError("jet order must lie in [0, 4]");
  if (active.empty()) throw ConfigError("lift needs at least one active coordinate");
  const JetLayout& L = JetLayout::get(static_cast<int>(active.size()));
  std::vector<RJet> r;
  for (double v : x) r.emplace_back(v);
  for (std::size_t k = 0; k < active.size(); ++k) {
    const int i = active[k];
    if (i < 0 || static_cast<std::size_t>(i) >= x.size()) throw ConfigError("active coordinate out of range");
    r[static_cast<std::size_t>(i)] = RJet::variable(L, order, static_cast<int>(k), x[static_cast<std::size_t>(i)]);
  }
  return r;
}

/// Inverse of a row-major n x n jet matrix by Gauss-Jordan with partial pivoting
/// on the constant terms.
template <class T>
std::vector<Jet<T>> inverse(std::vector<Jet<T>> a, int n) {
  const auto N = static_cast<std::size_t>(n);
  if (a.size() != N * N) throw StructuralError("jet matrix has wrong size");
  std::vector<Jet<T>> inv(N * N, Jet<T>(T{}));
  for (std::size_t i = 0; i < N; ++i) inv[i * N + i] = Jet<T>(T(1));
  double scale = 0.0;
  for (const auto& x : a) scale = std::max(scale, std::abs(x.value()));
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < N; ++r)
      if (std::abs(a[r * N + col].value()) > std::abs(a[piv * N + col].value())) piv = r;
    if (!(std::abs(a[piv * N + col].value()) > 1e-14 * scale))
      throw DegeneracyError("singular jet matrix");
    if (piv != col) {
      for (std::size_t k = 0; k < N; ++k) {
        std::swap(a[col * N + k], a[piv * N + k]);
        std::swap(inv[col * N + k], inv[piv * N + k]);
      }
    }
    const Jet<T> p = reciprocal(a[col * N + col]);
    for (std::size_t k = 0; k < N; ++k) {
      a[col * N + k] = a[col * N + k] * p;
      inv[col * N + k] = inv[col * N + k] * p;
    }
    for (std::size_t r = 0; r < N; ++r) {
      if (r == col) continue;
      const Jet<T> f = a[r * N + col];
      if (f.is_constant() && f.value() == T{}) continue;
      for (std::size_t k = 0; k < N; ++k) {
        a[r * N + k] = a[r * N + k] - f * a[col * N + k];
        inv[r * N + k] = inv[r * N + k] - f * inv[col * N + k];
      }
    }
  }
  return inv;
}

}  // namespace finsler
