#pragma once

// Wirtinger derivatives of jets written in real coordinates.

#include <complex>
#include <span>
#include <vector>

#include "finsler/jet.hpp"

namespace finsler {

/// Real coordinate indices forming z = x[re] + i x[im].
struct ComplexPair {
  int re;
  int im;
};

/// Default pairing z^a = x^a + i x^{n+a} over 2n real variables.
inline std::vector<ComplexPair> standard_pairs(int real_vars) {
  if (real_vars % 2 != 0) throw StructuralError("odd real dimension has no complex structure");
  const int n = real_vars / 2;
  std::vector<ComplexPair> p;
  for (int a = 0; a < n; ++a) p.push_back({a, n + a});
  return p;
}

inline CJet dz(const CJet& f, ComplexPair p) {
  const std::complex<double> i(0.0, 1.0);
  return (derivative(f, p.re) - derivative(f, p.im) * i) * 0.5;
}

inline CJet dzbar(const CJet& f, ComplexPair p) {
  const std::complex<double> i(0.0, 1.0);
  return (derivative(f, p.re) + derivative(f, p.im) * i) * 0.5;
}

/// Mixed holomorphic/antiholomorphic partials of a real jet at its base point.
class WirtingerTable {
 public:
  WirtingerTable(const RJet& f, std::vector<ComplexPair> pairs) : f_(to_complex(f)), pairs_(std::move(pairs)) {
    if (f.nvars() % 2 != 0) throw StructuralError("odd real dimension has no complex structure");
  }

  int order() const { return f_.order(); }
  int complex_dim() const { return static_cast<int>(pairs_.size()); }

  /// d^|h| d-bar^|a| f with h[k], a[k] derivative counts along pair k.
  std::complex<double> operator()(std::span<const int> holo, std::span<const int> anti) const {
    if (holo.size() != pairs_.size() || anti.size() != pairs_.size())
      throw StructuralError("Wirtinger multi-index has wrong length");
    int total = 0;
    for (std::size_t k = 0; k < pairs_.size(); ++k) total += holo[k] + anti[k];
    if (total > f_.order()) throw StructuralError("requested derivative exceeds jet order");
    CJet g = f_;
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      for (int r = 0; r < holo[k]; ++r) g = dz(g, pairs_[k]);
      for (int r = 0; r < anti[k]; ++r) g = dzbar(g, pairs_[k]);
    }
    return g.value();
  }

  /// d^2 f / dz^a dzbar^b.
  std::complex<double> mixed(int a, int b) const {
    std::vector<int> h(pairs_.size(), 0), an(pairs_.size(), 0);
    h[static_cast<std::size_t>(a)] += 1;
    an[static_cast<std::size_t>(b)] += 1;
    return (*this)(h, an);
  }

 private:
  CJet f_;
  std::vector<ComplexPair> pairs_;
};

inline WirtingerTable wirtinger(const RJet& f, std::vector<ComplexPair> pairs) {
  return WirtingerTable(f, std::move(pairs));
}

inline WirtingerTable wirtinger(const RJet& f) { return WirtingerTable(f, standard_pairs(f.nvars())); }

}  // namespace finsler
