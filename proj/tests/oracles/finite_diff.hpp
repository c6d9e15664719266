#pragma once

// Long-double central differences with Richardson extrapolation.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using LFun = std::function<long double(const std::vector<long double>&)>;

/// Central difference of multi-index e with step h (second-order accurate).
inline long double central(const LFun& f, const std::vector<long double>& x, const std::vector<int>& e, long double h,
                           std::size_t var = 0) {
  while (var < e.size() && e[var] == 0) ++var;
  if (var == e.size()) return f(x);
  const int k = e[var];
  std::vector<int> rest = e;
  rest[var] = 0;
  long double s = 0.0L, binom = 1.0L;
  for (int j = 0; j <= k; ++j) {
    std::vector<long double> y = x;
    y[var] += (0.5L * k - j) * h;
    const long double term = central(f, y, rest, h, var + 1);
    s += ((j % 2) ? -binom : binom) * term;
    binom = binom * (k - j) / (j + 1);
  }
  return s / std::pow(h, static_cast<long double>(k));
}

/// Partial derivative with two Richardson levels (error O(h^6)).
inline long double partial(const LFun& f, const std::vector<long double>& x, const std::vector<int>& e,
                           long double h = 0.02L) {
  const long double d0 = central(f, x, e, h);
  const long double d1 = central(f, x, e, h / 2);
  const long double d2 = central(f, x, e, h / 4);
  const long double r1 = (4 * d1 - d0) / 3, r2 = (4 * d2 - d1) / 3;
  return (16 * r2 - r1) / 15;
}

/// Double-precision version for functions that only exist in double.
inline double partial_d(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
                        const std::vector<int>& e, double h) {
  LFun g = [&](const std::vector<long double>& y) {
    std::vector<double> yd(y.begin(), y.end());
    return static_cast<long double>(f(yd));
  };
  std::vector<long double> xl(x.begin(), x.end());
  const long double d0 = central(g, xl, e, h);
  const long double d1 = central(g, xl, e, h / 2);
  return static_cast<double>((4 * d1 - d0) / 3);
}

}  // namespace oracle
