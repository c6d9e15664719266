#pragma once

#include <complex>

#include "finsler/jet.hpp"

namespace finsler {

/// Complex number over an arbitrary real scalar (double or a real jet).
template <class T>
struct Cplx {
  T re{};
  T im{};

  Cplx() = default;
  Cplx(T r, T i) : re(std::move(r)), im(std::move(i)) {}
  explicit Cplx(T r) : re(std::move(r)), im(T(0.0)) {}
  Cplx(std::complex<double> c)  // NOLINT
    requires(!std::is_same_v<T, std::complex<double>>)
      : re(T(c.real())), im(T(c.imag())) {}

  friend Cplx operator+(const Cplx& a, const Cplx& b) { return {a.re + b.re, a.im + b.im}; }
  friend Cplx operator-(const Cplx& a, const Cplx& b) { return {a.re - b.re, a.im - b.im}; }
  friend Cplx operator-(const Cplx& a) { return {-a.re, -a.im}; }
  friend Cplx operator*(const Cplx& a, const Cplx& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend Cplx operator*(const Cplx& a, const T& s) { return {a.re * s, a.im * s}; }
  friend Cplx operator*(const T& s, const Cplx& a) { return {a.re * s, a.im * s}; }
  friend Cplx operator/(const Cplx& a, const Cplx& b) {
    const T d = b.re * b.re + b.im * b.im;
    const T inv = T(1.0) / d;
    return {(a.re * b.re + a.im * b.im) * inv, (a.im * b.re - a.re * b.im) * inv};
  }
  Cplx& operator+=(const Cplx& o) { return *this = *this + o; }
  Cplx& operator-=(const Cplx& o) { return *this = *this - o; }
  Cplx& operator*=(const Cplx& o) { return *this = *this * o; }
};

template <class T>
Cplx<T> conj(const Cplx<T>& a) {
  return {a.re, -a.im};
}

/// |a|^2
template <class T>
T norm2(const Cplx<T>& a) {
  return a.re * a.re + a.im * a.im;
}

template <class T>
Cplx<T> cscale(const Cplx<T>& a, double s) {
  return {a.re * s, a.im * s};
}

template <class T>
Cplx<T> cpow(const Cplx<T>& a, int m) {
  Cplx<T> r(T(1.0), T(0.0));
  for (int k = 0; k < m; ++k) r = r * a;
  return r;
}

/// Hermitian pairing sum_k a_k conj(b_k).
template <class T, class A, class B>
Cplx<T> hermitian_dot(const A& a, const B& b, std::size_t n) {
  Cplx<T> s(T(0.0), T(0.0));
  for (std::size_t k = 0; k < n; ++k) s += a[k] * conj(b[k]);
  return s;
}

inline std::complex<double> to_std(const Cplx<double>& a) { return {a.re, a.im}; }

}  // namespace finsler
