#pragma once

#include <cmath>
#include <vector>

#include "spikecpc/errors.hpp"
#include "spikecpc/params.hpp"

namespace spikecpc::nn {

/// Bias-corrected Adam over a flat parameter block.
template <typename T>
class Adam {
 public:
  explicit Adam(std::size_t n_params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(n_params, 0.0), v_(n_params, 0.0) {}

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  long step_count() const { return t_; }

  void step(ParamBlock<T>& block) {
    if (block.size() != m_.size()) throw ShapeError("adam: parameter count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, double(t_));
    const double bc2 = 1.0 - std::pow(beta2_, double(t_));
    auto params = block.data();
    auto grads = block.grad();
    for (std::size_t i = 0; i < m_.size(); ++i) {
      const double g = double(grads[i]);
      if (!std::isfinite(g)) throw NumericalError("adam: non-finite gradient");
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
      const double m_hat = m_[i] / bc1;
      const double v_hat = v_[i] / bc2;
      params[i] = T(double(params[i]) - lr_ * m_hat / (std::sqrt(v_hat) + eps_));
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace spikecpc::nn
