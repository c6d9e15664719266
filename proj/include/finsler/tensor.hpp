#pragma once

#include <array>
#include <complex>
#include <initializer_list>
#include <vector>

#include "finsler/errors.hpp"

namespace finsler {

/// Dense tensor of rank 3 or 4 with equal extents, row-major.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rank, int extent) : rank_(rank), n_(extent) {
    if (rank < 1 || rank > 4) throw StructuralError("tensor rank outside [1, 4]");
    std::size_t s = 1;
    for (int k = 0; k < rank; ++k) s *= static_cast<std::size_t>(extent);
    data_.assign(s, T{});
  }

  int rank() const { return rank_; }
  int extent() const { return n_; }
  std::size_t size() const { return data_.size(); }
  const std::vector<T>& data() const { return data_; }

  T& operator()(int a, int b, int c) { return data_[idx3(a, b, c)]; }
  const T& operator()(int a, int b, int c) const { return data_[idx3(a, b, c)]; }
  T& operator()(int a, int b, int c, int d) { return data_[idx3(a, b, c) * n_ + static_cast<std::size_t>(d)]; }
  const T& operator()(int a, int b, int c, int d) const {
    return data_[idx3(a, b, c) * n_ + static_cast<std::size_t>(d)];
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& x : data_) m = std::max(m, static_cast<double>(std::abs(x)));
    return m;
  }

 private:
  std::size_t idx3(int a, int b, int c) const {
    const auto n = static_cast<std::size_t>(n_);
    return (static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)) * n + static_cast<std::size_t>(c);
  }

  int rank_ = 0;
  int n_ = 0;
  std::vector<T> data_;
};

using CTensor = Tensor<std::complex<double>>;
using RTensor = Tensor<double>;

}  // namespace finsler
