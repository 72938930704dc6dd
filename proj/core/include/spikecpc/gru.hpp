#pragma once

#include <span>
#include <vector>

#include "spikecpc/nn_ops.hpp"

namespace spikecpc::nn {

/// Weight spans for one GRU cell. The cell does not own parameters; it views
/// into a ParamBlock so optimizer and checkpoints share storage.
///
/// Equations (update gate z, reset gate r, candidate hc, convex blend):
///   z  = sigmoid(Wz x + Uz h + bz)
///   r  = sigmoid(Wr x + Ur h + br)
///   hc = tanh(Wh x + Uh (r*h) + bh)
///   h' = z*h + (1-z)*hc
template <typename T>
struct GruWeights {
  int input_dim = 0;
  int hidden_dim = 0;
  std::span<const T> wz, wr, wh;  // [hidden, input]
  std::span<const T> uz, ur, uh;  // [hidden, hidden]
  std::span<const T> bz, br, bh;  // [hidden]
};

template <typename T>
struct GruGrads {
  std::span<T> wz, wr, wh, uz, ur, uh, bz, br, bh;
};

/// Forward intermediates needed by the backward pass.
template <typename T>
struct GruStepCache {
  std::vector<T> x, h_prev, z, r, hc, rh;
};

template <typename T>
void gru_forward(const GruWeights<T>& w, std::span<const T> x, std::span<const T> h_prev,
                 std::span<T> h_out, GruStepCache<T>& cache) {
  const int hd = w.hidden_dim, id = w.input_dim;
  if (int(x.size()) != id || int(h_prev.size()) != hd || int(h_out.size()) != hd) {
    throw ShapeError("gru_forward: shape mismatch");
  }
  cache.x.assign(x.begin(), x.end());
  cache.h_prev.assign(h_prev.begin(), h_prev.end());
  cache.z.resize(hd);
  cache.r.resize(hd);
  cache.hc.resize(hd);
  cache.rh.resize(hd);

  for (int j = 0; j < hd; ++j) {
    const T az = w.bz[j] + dot(w.wz.data() + std::size_t(j) * id, x.data(), id) +
                 dot(w.uz.data() + std::size_t(j) * hd, h_prev.data(), hd);
    const T ar = w.br[j] + dot(w.wr.data() + std::size_t(j) * id, x.data(), id) +
                 dot(w.ur.data() + std::size_t(j) * hd, h_prev.data(), hd);
    cache.z[j] = sigmoid(az);
    cache.r[j] = sigmoid(ar);
    cache.rh[j] = cache.r[j] * h_prev[j];
  }
  for (int j = 0; j < hd; ++j) {
    const T ah = w.bh[j] + dot(w.wh.data() + std::size_t(j) * id, x.data(), id) +
                 dot(w.uh.data() + std::size_t(j) * hd, cache.rh.data(), hd);
    cache.hc[j] = std::tanh(ah);
    h_out[j] = cache.z[j] * h_prev[j] + (T(1) - cache.z[j]) * cache.hc[j];
  }
}

/// Accumulates parameter gradients and d(h_prev) for one step given d(h_out).
/// d(x) is not produced: the encoders upstream are frozen.
template <typename T>
void gru_backward(const GruWeights<T>& w, const GruStepCache<T>& cache, std::span<const T> dh,
                  GruGrads<T>& g, std::span<T> dh_prev) {
  const int hd = w.hidden_dim, id = w.input_dim;
  std::vector<T> daz(hd), dar(hd), dah(hd), drh(hd, T(0));

  for (int j = 0; j < hd; ++j) {
    const T z = cache.z[j], hc = cache.hc[j], hp = cache.h_prev[j];
    const T dz = dh[j] * (hp - hc);
    const T dhc = dh[j] * (T(1) - z);
    dh_prev[j] += dh[j] * z;
    dah[j] = dhc * (T(1) - hc * hc);
    daz[j] = dz * z * (T(1) - z);
  }
  // through Uh into r*h_prev
  for (int j = 0; j < hd; ++j) {
    axpy(dah[j], w.uh.data() + std::size_t(j) * hd, drh.data(), hd);
  }
  for (int j = 0; j < hd; ++j) {
    const T r = cache.r[j];
    dh_prev[j] += drh[j] * r;
    dar[j] = drh[j] * cache.h_prev[j] * r * (T(1) - r);
  }
  for (int j = 0; j < hd; ++j) {
    g.bz[j] += daz[j];
    g.br[j] += dar[j];
    g.bh[j] += dah[j];
    axpy(daz[j], cache.x.data(), g.wz.data() + std::size_t(j) * id, id);
    axpy(dar[j], cache.x.data(), g.wr.data() + std::size_t(j) * id, id);
    axpy(dah[j], cache.x.data(), g.wh.data() + std::size_t(j) * id, id);
    axpy(daz[j], cache.h_prev.data(), g.uz.data() + std::size_t(j) * hd, hd);
    axpy(dar[j], cache.h_prev.data(), g.ur.data() + std::size_t(j) * hd, hd);
    axpy(dah[j], cache.rh.data(), g.uh.data() + std::size_t(j) * hd, hd);
    axpy(daz[j], w.uz.data() + std::size_t(j) * hd, dh_prev.data(), hd);
    axpy(dar[j], w.ur.data() + std::size_t(j) * hd, dh_prev.data(), hd);
  }
}

}  // namespace spikecpc::nn
