#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "spikecpc/errors.hpp"

// Forward/backward kernels for the dense, convolution and loss layers.
// Backward functions ACCUMULATE into the gradient spans they are handed;
// callers zero them at the start of a step. No kernel mutates its inputs.

namespace spikecpc::nn {

template <typename T>
inline T dot(const T* a, const T* b, std::size_t n) {
  T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

template <typename T>
inline void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
inline T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

// --- dense ------------------------------------------------------------

/// y = W x + b with W stored row-major [d_out, d_in].
template <typename T>
inline void dense_forward(std::span<const T> x, std::span<const T> w, std::span<const T> b,
                          std::span<T> y) {
  const std::size_t d_out = y.size(), d_in = x.size();
  if (w.size() != d_out * d_in || b.size() != d_out) throw ShapeError("dense_forward: shape mismatch");
  for (std::size_t o = 0; o < d_out; ++o) {
    y[o] = b[o] + dot(w.data() + o * d_in, x.data(), d_in);
  }
}

/// Accumulates dW += dy x^T, db += dy and dx += W^T dy (dx may be empty).
template <typename T>
inline void dense_backward(std::span<const T> x, std::span<const T> w, std::span<const T> dy,
                           std::span<T> dw, std::span<T> db, std::span<T> dx) {
  const std::size_t d_out = dy.size(), d_in = x.size();
  if (w.size() != d_out * d_in || dw.size() != d_out * d_in || db.size() != d_out) {
    throw ShapeError("dense_backward: shape mismatch");
  }
  if (!dx.empty() && dx.size() != d_in) throw ShapeError("dense_backward: dx shape mismatch");
  for (std::size_t o = 0; o < d_out; ++o) {
    db[o] += dy[o];
    axpy(dy[o], x.data(), dw.data() + o * d_in, d_in);
    if (!dx.empty()) axpy(dy[o], w.data() + o * d_in, dx.data(), d_in);
  }
}

// --- conv2d -----------------------------------------------------------

struct ConvShape {
  int in_c, in_h, in_w;
  int out_c, k_h, k_w;
  int stride = 1;
  int pad = 1;

  int out_h() const { return (in_h + 2 * pad - k_h) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - k_w) / stride + 1; }
  std::size_t in_size() const { return std::size_t(in_c) * in_h * in_w; }
  std::size_t out_size() const { return std::size_t(out_c) * out_h() * out_w(); }
  std::size_t weight_size() const { return std::size_t(out_c) * in_c * k_h * k_w; }
};

/// Cross-correlation (no kernel flip), zero padding. Weights are stored
/// [out_c, in_c, k_h, k_w], tensors [c, h, w] row-major.
template <typename T>
inline void conv2d_forward(std::span<const T> in, std::span<const T> w, std::span<const T> b,
                           const ConvShape& s, std::span<T> out) {
  if (in.size() != s.in_size() || w.size() != s.weight_size() || out.size() != s.out_size() ||
      b.size() != std::size_t(s.out_c)) {
    throw ShapeError("conv2d_forward: shape mismatch");
  }
  const int oh = s.out_h(), ow = s.out_w();
  for (int oc = 0; oc < s.out_c; ++oc) {
    T* out_plane = out.data() + std::size_t(oc) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        T acc = b[oc];
        for (int c = 0; c < s.in_c; ++c) {
          const T* in_plane = in.data() + std::size_t(c) * s.in_h * s.in_w;
          const T* ker = w.data() + ((std::size_t(oc) * s.in_c + c) * s.k_h) * s.k_w;
          for (int ky = 0; ky < s.k_h; ++ky) {
            const int iy = oy * s.stride + ky - s.pad;
            if (iy < 0 || iy >= s.in_h) continue;
            for (int kx = 0; kx < s.k_w; ++kx) {
              const int ix = ox * s.stride + kx - s.pad;
              if (ix < 0 || ix >= s.in_w) continue;
              acc += ker[ky * s.k_w + kx] * in_plane[iy * s.in_w + ix];
            }
          }
        }
        out_plane[oy * ow + ox] = acc;
      }
    }
  }
}

/// Accumulates dW, db and (if non-empty) dIn for the cross-correlation above.
template <typename T>
inline void conv2d_backward(std::span<const T> in, std::span<const T> w, std::span<const T> d_out,
                            const ConvShape& s, std::span<T> dw, std::span<T> db,
                            std::span<T> d_in) {
  if (in.size() != s.in_size() || w.size() != s.weight_size() || d_out.size() != s.out_size()) {
    throw ShapeError("conv2d_backward: shape mismatch");
  }
  const int oh = s.out_h(), ow = s.out_w();
  for (int oc = 0; oc < s.out_c; ++oc) {
    const T* dout_plane = d_out.data() + std::size_t(oc) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const T g = dout_plane[oy * ow + ox];
        if (g == T(0)) continue;
        db[oc] += g;
        for (int c = 0; c < s.in_c; ++c) {
          const T* in_plane = in.data() + std::size_t(c) * s.in_h * s.in_w;
          const std::size_t kbase = ((std::size_t(oc) * s.in_c + c) * s.k_h) * s.k_w;
          for (int ky = 0; ky < s.k_h; ++ky) {
            const int iy = oy * s.stride + ky - s.pad;
            if (iy < 0 || iy >= s.in_h) continue;
            for (int kx = 0; kx < s.k_w; ++kx) {
              const int ix = ox * s.stride + kx - s.pad;
              if (ix < 0 || ix >= s.in_w) continue;
              dw[kbase + ky * s.k_w + kx] += g * in_plane[iy * s.in_w + ix];
              if (!d_in.empty()) {
                d_in[std::size_t(c) * s.in_h * s.in_w + iy * s.in_w + ix] +=
                    g * w[kbase + ky * s.k_w + kx];
              }
            }
          }
        }
      }
    }
  }
}

// --- losses -----------------------------------------------------------

/// Numerically stable binary cross-entropy on raw logits. Returns the batch
/// mean and writes d(loss)/d(logit_i) = (sigmoid(l_i) - y_i) / N.
template <typename T>
inline T bce_with_logits(std::span<const T> logits, std::span<const T> labels,
                         std::span<T> d_logits) {
  const std::size_t n = logits.size();
  if (labels.size() != n || d_logits.size() != n) throw ShapeError("bce_with_logits: shape mismatch");
  T loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T l = logits[i], y = labels[i];
    const T abs_l = l < T(0) ? -l : l;
    loss += (l > T(0) ? l : T(0)) - l * y + std::log1p(std::exp(-abs_l));
    d_logits[i] = (sigmoid(l) - y) / T(n);
  }
  return loss / T(n);
}

/// Mean squared error; writes d(loss)/d(pred) = 2 (pred - target) / N.
template <typename T>
inline T mse_loss(std::span<const T> pred, std::span<const T> target, std::span<T> d_pred) {
  const std::size_t n = pred.size();
  if (target.size() != n || d_pred.size() != n) throw ShapeError("mse_loss: shape mismatch");
  T loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T d = pred[i] - target[i];
    loss += d * d;
    d_pred[i] = T(2) * d / T(n);
  }
  return loss / T(n);
}

}  // namespace spikecpc::nn
