#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "spikecpc/errors.hpp"

namespace spikecpc {

/// Row-major dense tensor. double in test mode, float in run mode.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(numel_of(shape), T(0)) {}

  static std::size_t numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw ShapeError("tensor dimensions must be positive");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t numel() const { return v.size(); }

  void check_finite(const std::string& what) const {
    for (const T& x : v) {
      if (!std::isfinite(double(x))) throw NumericalError("non-finite value in " + what);
    }
  }
};

using Tensor32 = Tensor<float>;
using Tensor64 = Tensor<double>;

}  // namespace spikecpc
