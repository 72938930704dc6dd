#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spikecpc/adam.hpp"
#include <cstring>

#include "spikecpc/checkpoint.hpp"
#include "spikecpc/mnist.hpp"
#include "spikecpc/nn_ops.hpp"
#include "spikecpc/params.hpp"
#include "spikecpc/rng.hpp"
#include "spikecpc/subset.hpp"

namespace spikecpc::sae {

/// Spike forward mode. `Hard` is the run-mode Heaviside (spike iff the
/// membrane reaches threshold). `Soft` replaces the Heaviside by the smooth
/// primitive of the surrogate derivative so that finite differences of the
/// forward pass agree with the backward pass; it exists for gradient checks.
enum class SpikeMode { Hard, Soft };

/// Surrogate derivative for the threshold nonlinearity (fast sigmoid):
///   d spike / d v = 1 / (1 + alpha * |v - v_thresh|)^2
template <typename T>
inline T surrogate_grad(T v_minus_thresh, T alpha) {
  const T a = T(1) + alpha * (v_minus_thresh < T(0) ? -v_minus_thresh : v_minus_thresh);
  return T(1) / (a * a);
}

/// Smooth spike used in Soft mode; its exact derivative is surrogate_grad.
template <typename T>
inline T soft_spike(T v_minus_thresh, T alpha) {
  const T d = T(1) + alpha * (v_minus_thresh < T(0) ? -v_minus_thresh : v_minus_thresh);
  return v_minus_thresh / d + T(0.5);
}

/// One leaky integrate-and-fire step over a tensor of membranes:
///   v_pre  = beta * v_prev + (1 - beta) * input
///   spike  = 1 if v_pre >= v_thresh else 0          (Hard)
///   v_post = v_pre - v_thresh * spike                (soft reset)
/// v_pre_out may be empty when the caller does not need it.
template <typename T>
inline void lif_step(std::span<const T> v_prev, std::span<const T> input, T beta, T v_thresh,
                     std::span<T> v_post, std::span<T> spikes, std::span<T> v_pre_out,
                     SpikeMode mode = SpikeMode::Hard, T alpha = T(2)) {
  const std::size_t n = v_prev.size();
  if (input.size() != n || v_post.size() != n || spikes.size() != n) {
    throw ShapeError("lif_step: shape mismatch");
  }
  if (!v_pre_out.empty() && v_pre_out.size() != n) throw ShapeError("lif_step: v_pre shape");
  for (std::size_t i = 0; i < n; ++i) {
    const T v_pre = beta * v_prev[i] + (T(1) - beta) * input[i];
    const T s = mode == SpikeMode::Hard ? (v_pre >= v_thresh ? T(1) : T(0))
                                        : soft_spike(v_pre - v_thresh, alpha);
    if (!v_pre_out.empty()) v_pre_out[i] = v_pre;
    spikes[i] = s;
    v_post[i] = v_pre - v_thresh * s;
  }
}

/// Architecture and dynamics of the convolutional LIF encoder plus the
/// deterministic reconstruction decoder.
struct ConvLifParams {
  struct ConvLayer {
    int out_c = 8, kernel = 3, stride = 2, pad = 1;
  };
  int in_c = 1, in_h = 28, in_w = 28;
  std::vector<ConvLayer> encoder = {{8, 3, 2, 1}, {8, 3, 2, 1}};
  double beta = 0.9;
  double v_thresh = 1.0;
  int t_steps = 25;
  double surrogate_alpha = 2.0;
  int decoder_hidden_c = 8;  // decoder: up2 -> conv -> relu -> up2 -> conv -> sigmoid
  bool with_decoder = true;

  void validate() const {
    if (beta <= 0.0 || beta > 1.0) throw ConfigError("autoencoder: beta must be in (0,1]");
    if (v_thresh <= 0.0) throw ConfigError("autoencoder: v_thresh must be positive");
    if (t_steps < 1) throw ConfigError("autoencoder: t_steps must be >= 1");
    if (encoder.empty()) throw ConfigError("autoencoder: encoder needs at least one layer");
  }
};

/// Flattened final-step membrane potential of the deepest encoder layer.
struct LatentVector {
  std::vector<double> values;
  int image_index = 0;
  int image_label = 0;
};

struct AeTrainOptions {
  double learning_rate = 1e-3;
  int epochs = 20;
  int batch_size = 64;
  std::function<void(int epoch, double mean_loss)> on_epoch;
};

namespace detail {

template <typename T>
inline void upsample2_forward(std::span<const T> in, int c, int h, int w, std::span<T> out) {
  for (int ch = 0; ch < c; ++ch) {
    const T* ip = in.data() + std::size_t(ch) * h * w;
    T* op = out.data() + std::size_t(ch) * (2 * h) * (2 * w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const T v = ip[y * w + x];
        const int oy = 2 * y, ox = 2 * x, ow = 2 * w;
        op[oy * ow + ox] = v;
        op[oy * ow + ox + 1] = v;
        op[(oy + 1) * ow + ox] = v;
        op[(oy + 1) * ow + ox + 1] = v;
      }
    }
  }
}

template <typename T>
inline void upsample2_backward(std::span<const T> d_out, int c, int h, int w, std::span<T> d_in) {
  for (int ch = 0; ch < c; ++ch) {
    const T* gp = d_out.data() + std::size_t(ch) * (2 * h) * (2 * w);
    T* ip = d_in.data() + std::size_t(ch) * h * w;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int oy = 2 * y, ox = 2 * x, ow = 2 * w;
        ip[y * w + x] += gp[oy * ow + ox] + gp[oy * ow + ox + 1] + gp[(oy + 1) * ow + ox] +
                         gp[(oy + 1) * ow + ox + 1];
      }
    }
  }
}

}  // namespace detail

/// Convolutional LIF autoencoder. The static image is presented identically
/// at each of t_steps; every encoder layer applies a conv followed by a LIF
/// step; the latent is the post-reset membrane of the deepest layer at the
/// final step. Training minimizes pixel MSE of the decoder output with hard
/// spikes forward and the fast-sigmoid surrogate in the backward pass.
template <typename T>
class SpikingAutoencoder {
 public:
  SpikingAutoencoder(const ConvLifParams& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    build(init_seed);
  }

  const ConvLifParams& config() const { return cfg_; }
  ParamBlock<T>& block() { return params_; }
  const ParamBlock<T>& block() const { return params_; }
  int latent_dim() const { return latent_dim_; }

  /// Deterministic latent of one image (pure function of image and weights).
  LatentVector encode(const MnistImage& image, SpikeMode mode = SpikeMode::Hard) const {
    std::vector<T> input(image.pixels.begin(), image.pixels.end());
    EncoderTrace trace;
    encode_forward(input, mode, trace);
    LatentVector latent;
    latent.values.assign(trace.latent.begin(), trace.latent.end());
    latent.image_index = image.index;
    latent.image_label = image.label;
    return latent;
  }

  /// Latent for a raw input tensor of size in_c * in_h * in_w.
  std::vector<T> encode_values(std::span<const T> input, SpikeMode mode = SpikeMode::Hard) const {
    EncoderTrace trace;
    encode_forward(input, mode, trace);
    return trace.latent;
  }

  /// Decoder only: latent -> 784 pixel predictions in (0,1).
  std::vector<double> decode(std::span<const double> latent) const {
    if (!cfg_.with_decoder) throw ConfigError("autoencoder built without decoder");
    if (int(latent.size()) != latent_dim_) throw ShapeError("decode: latent dim mismatch");
    std::vector<T> z(latent.begin(), latent.end());
    DecoderTrace trace;
    decode_forward(z, trace);
    return std::vector<double>(trace.out.begin(), trace.out.end());
  }

  /// Reconstruction loss of one image; accumulates parameter gradients.
  double forward_backward(const MnistImage& image, SpikeMode mode = SpikeMode::Hard) {
    std::vector<T> input(image.pixels.begin(), image.pixels.end());
    return forward_backward_values(input, input, mode);
  }

  /// Loss + gradients for a raw input tensor. With a decoder the loss is
  /// pixel MSE against `target` (defaults to the input); without one it is
  /// latent MSE against `target` of latent size (zeros when empty), which is
  /// what the toy gradient checks drive.
  double forward_backward_values(std::span<const T> input, std::span<const T> target,
                                 SpikeMode mode = SpikeMode::Hard) {
    EncoderTrace enc;
    encode_forward(input, mode, enc);

    std::vector<T> d_latent(latent_dim_, T(0));
    double loss = 0.0;
    if (cfg_.with_decoder) {
      DecoderTrace dec;
      decode_forward(enc.latent, dec);
      std::vector<T> d_out(dec.out.size());
      if (int(target.size()) != int(dec.out.size())) {
        throw ShapeError("forward_backward: target size mismatch");
      }
      loss = double(nn::mse_loss<T>(dec.out, target, d_out));
      decode_backward(dec, d_out, d_latent);
    } else {
      std::vector<T> t(latent_dim_, T(0));
      if (!target.empty()) {
        if (int(target.size()) != latent_dim_) throw ShapeError("forward_backward: latent target");
        t.assign(target.begin(), target.end());
      }
      std::vector<T> d_out(latent_dim_);
      loss = double(nn::mse_loss<T>(std::span<const T>(enc.latent), std::span<const T>(t),
                                    std::span<T>(d_out)));
      d_latent = d_out;
    }
    encode_backward(input, enc, mode, d_latent);
    return loss;
  }

  /// Loss-only evaluation (no gradients).
  double reconstruction_loss(const MnistImage& image, SpikeMode mode = SpikeMode::Hard) const {
    std::vector<T> input(image.pixels.begin(), image.pixels.end());
    EncoderTrace enc;
    encode_forward(input, mode, enc);
    if (!cfg_.with_decoder) throw ConfigError("autoencoder built without decoder");
    DecoderTrace dec;
    decode_forward(enc.latent, dec);
    std::vector<T> target(image.pixels.begin(), image.pixels.end());
    std::vector<T> d_out(target.size());
    return double(nn::mse_loss<T>(dec.out, target, d_out));
  }

  void save(const std::string& path) const {
    std::vector<CheckpointEntry> entries;
    for (const auto& e : params_.entries()) {
      CheckpointEntry ce;
      ce.name = e.name;
      ce.shape = e.shape;
      auto vals = params_.values(e.name);
      ce.data.assign(vals.begin(), vals.end());
      entries.push_back(std::move(ce));
    }
    write_checkpoint(path, entries);
  }

  void load(const std::string& path) {
    const auto entries = read_checkpoint(path);
    for (const auto& e : params_.entries()) {
      const auto& ce = checkpoint_entry(entries, e.name);
      if (ce.shape != e.shape) throw FormatError("autoencoder checkpoint shape mismatch: " + e.name);
      auto vals = params_.values(e.name);
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = T(ce.data[i]);
    }
  }

 private:
  struct LayerDims {
    nn::ConvShape shape;
    std::size_t out_n = 0;
  };

  struct EncoderTrace {
    std::vector<std::vector<std::vector<T>>> v_pre;   // [layer][t][unit]
    std::vector<std::vector<std::vector<T>>> spikes;  // [layer][t][unit]
    std::vector<T> latent;
  };

  struct DecoderTrace {
    std::vector<T> up1, pre1, act1, up2, pre2, out;
  };

  void build(std::uint64_t init_seed) {
    Rng rng(init_seed);
    int c = cfg_.in_c, h = cfg_.in_h, w = cfg_.in_w;
    for (std::size_t k = 0; k < cfg_.encoder.size(); ++k) {
      const auto& l = cfg_.encoder[k];
      nn::ConvShape s{c, h, w, l.out_c, l.kernel, l.kernel, l.stride, l.pad};
      dims_.push_back({s, s.out_size()});
      const std::string tag = "enc" + std::to_string(k);
      params_.add(tag + ".w", {l.out_c, c, l.kernel, l.kernel});
      params_.add(tag + ".b", {l.out_c});
      c = l.out_c;
      h = s.out_h();
      w = s.out_w();
    }
    latent_c_ = c;
    latent_h_ = h;
    latent_w_ = w;
    latent_dim_ = c * h * w;
    if (cfg_.with_decoder) {
      dec1_ = nn::ConvShape{latent_c_, 2 * latent_h_, 2 * latent_w_, cfg_.decoder_hidden_c, 3, 3, 1, 1};
      dec2_ = nn::ConvShape{cfg_.decoder_hidden_c, 4 * latent_h_, 4 * latent_w_, cfg_.in_c, 3, 3, 1, 1};
      params_.add("dec0.w", {cfg_.decoder_hidden_c, latent_c_, 3, 3});
      params_.add("dec0.b", {cfg_.decoder_hidden_c});
      params_.add("dec1.w", {cfg_.in_c, cfg_.decoder_hidden_c, 3, 3});
      params_.add("dec1.b", {cfg_.in_c});
    }
    params_.finalize();
    // He-uniform weights, zero biases.
    for (const auto& e : params_.entries()) {
      if (e.name.ends_with(".b")) continue;
      auto w_span = params_.values(e.name);
      std::size_t fan_in = 1;
      for (std::size_t d = 1; d < e.shape.size(); ++d) fan_in *= std::size_t(e.shape[d]);
      const double limit = std::sqrt(6.0 / double(fan_in));
      for (auto& x : w_span) x = T(rng.uniform_range(-limit, limit));
    }
  }

  void encode_forward(std::span<const T> input, SpikeMode mode, EncoderTrace& trace) const {
    const int n_layers = int(dims_.size());
    const T beta = T(cfg_.beta), v_th = T(cfg_.v_thresh), alpha = T(cfg_.surrogate_alpha);
    trace.v_pre.assign(n_layers, {});
    trace.spikes.assign(n_layers, {});
    for (int k = 0; k < n_layers; ++k) {
      trace.v_pre[k].assign(cfg_.t_steps, std::vector<T>(dims_[k].out_n));
      trace.spikes[k].assign(cfg_.t_steps, std::vector<T>(dims_[k].out_n));
    }
    // Layer-0 drive is constant across steps: the image is re-presented.
    std::vector<T> u0(dims_[0].out_n);
    nn::conv2d_forward<T>(input, params_.values("enc0.w"), params_.values("enc0.b"), dims_[0].shape,
                          u0);
    std::vector<std::vector<T>> v_post(n_layers);
    for (int k = 0; k < n_layers; ++k) v_post[k].assign(dims_[k].out_n, T(0));
    std::vector<T> u_k;
    for (int t = 0; t < cfg_.t_steps; ++t) {
      for (int k = 0; k < n_layers; ++k) {
        const std::vector<T>* drive = &u0;
        if (k > 0) {
          u_k.assign(dims_[k].out_n, T(0));
          nn::conv2d_forward<T>(trace.spikes[k - 1][t], params_.values("enc" + std::to_string(k) + ".w"),
                                params_.values("enc" + std::to_string(k) + ".b"), dims_[k].shape, u_k);
          drive = &u_k;
        }
        lif_step<T>(v_post[k], *drive, beta, v_th, v_post[k], trace.spikes[k][t],
                    trace.v_pre[k][t], mode, alpha);
      }
    }
    trace.latent = v_post[n_layers - 1];
  }

  void encode_backward(std::span<const T> input, const EncoderTrace& trace, SpikeMode mode,
                       std::span<const T> d_latent) {
    (void)mode;  // backward is identical in both modes
    const int n_layers = int(dims_.size());
    const T beta = T(cfg_.beta), v_th = T(cfg_.v_thresh), alpha = T(cfg_.surrogate_alpha);
    // d v_post carried across time, one buffer per layer; d spike input from
    // the layer above, per step.
    std::vector<std::vector<T>> d_v_post(n_layers);
    for (int k = 0; k < n_layers; ++k) d_v_post[k].assign(dims_[k].out_n, T(0));
    d_v_post[n_layers - 1].assign(d_latent.begin(), d_latent.end());
    std::vector<T> du0_total(dims_[0].out_n, T(0));
    std::vector<std::vector<T>> d_spike(n_layers);
    for (int k = 0; k < n_layers; ++k) d_spike[k].assign(dims_[k].out_n, T(0));

    std::vector<T> d_v_pre, du;
    for (int t = cfg_.t_steps - 1; t >= 0; --t) {
      for (int k = n_layers - 1; k >= 0; --k) {
        const auto& v_pre = trace.v_pre[k][t];
        d_v_pre.assign(dims_[k].out_n, T(0));
        for (std::size_t i = 0; i < d_v_pre.size(); ++i) {
          const T sg = surrogate_grad<T>(v_pre[i] - v_th, alpha);
          // v_post = v_pre - v_th * s(v_pre); s feeds the next layer.
          d_v_pre[i] = d_v_post[k][i] * (T(1) - v_th * sg) + d_spike[k][i] * sg;
        }
        // carry to t-1 through the leak, and into this step's drive
        for (std::size_t i = 0; i < d_v_pre.size(); ++i) d_v_post[k][i] = beta * d_v_pre[i];
        if (k == 0) {
          for (std::size_t i = 0; i < d_v_pre.size(); ++i) {
            du0_total[i] += (T(1) - beta) * d_v_pre[i];
          }
        } else {
          du.assign(dims_[k].out_n, T(0));
          for (std::size_t i = 0; i < du.size(); ++i) du[i] = (T(1) - beta) * d_v_pre[i];
          const std::string tag = "enc" + std::to_string(k);
          std::fill(d_spike[k - 1].begin(), d_spike[k - 1].end(), T(0));
          nn::conv2d_backward<T>(trace.spikes[k - 1][t], params_.values(tag + ".w"), du,
                                 dims_[k].shape, params_.grads(tag + ".w"),
                                 params_.grads(tag + ".b"), d_spike[k - 1]);
        }
      }
    }
    nn::conv2d_backward<T>(input, params_.values("enc0.w"), du0_total, dims_[0].shape,
                           params_.grads("enc0.w"), params_.grads("enc0.b"), {});
  }

  void decode_forward(std::span<const T> latent, DecoderTrace& trace) const {
    trace.up1.assign(std::size_t(latent_c_) * 4 * latent_h_ * latent_w_, T(0));
    detail::upsample2_forward<T>(latent, latent_c_, latent_h_, latent_w_, trace.up1);
    trace.pre1.assign(dec1_.out_size(), T(0));
    nn::conv2d_forward<T>(trace.up1, params_.values("dec0.w"), params_.values("dec0.b"), dec1_,
                          trace.pre1);
    trace.act1 = trace.pre1;
    for (auto& v : trace.act1) v = v > T(0) ? v : T(0);
    trace.up2.assign(std::size_t(cfg_.decoder_hidden_c) * 16 * latent_h_ * latent_w_, T(0));
    detail::upsample2_forward<T>(trace.act1, cfg_.decoder_hidden_c, 2 * latent_h_, 2 * latent_w_,
                                 trace.up2);
    trace.pre2.assign(dec2_.out_size(), T(0));
    nn::conv2d_forward<T>(trace.up2, params_.values("dec1.w"), params_.values("dec1.b"), dec2_,
                          trace.pre2);
    trace.out = trace.pre2;
    for (auto& v : trace.out) v = nn::sigmoid(v);
  }

  void decode_backward(const DecoderTrace& trace, std::span<const T> d_out,
                       std::span<T> d_latent) {
    std::vector<T> d_pre2(trace.pre2.size());
    for (std::size_t i = 0; i < d_pre2.size(); ++i) {
      const T s = trace.out[i];
      d_pre2[i] = d_out[i] * s * (T(1) - s);
    }
    std::vector<T> d_up2(trace.up2.size(), T(0));
    nn::conv2d_backward<T>(trace.up2, params_.values("dec1.w"), d_pre2, dec2_,
                           params_.grads("dec1.w"), params_.grads("dec1.b"), d_up2);
    std::vector<T> d_act1(trace.act1.size(), T(0));
    detail::upsample2_backward<T>(d_up2, cfg_.decoder_hidden_c, 2 * latent_h_, 2 * latent_w_,
                                  d_act1);
    for (std::size_t i = 0; i < d_act1.size(); ++i) {
      if (trace.pre1[i] <= T(0)) d_act1[i] = T(0);
    }
    std::vector<T> d_up1(trace.up1.size(), T(0));
    nn::conv2d_backward<T>(trace.up1, params_.values("dec0.w"), d_act1, dec1_,
                           params_.grads("dec0.w"), params_.grads("dec0.b"), d_up1);
    std::fill(d_latent.begin(), d_latent.end(), T(0));
    detail::upsample2_backward<T>(d_up1, latent_c_, latent_h_, latent_w_, d_latent);
  }

  ConvLifParams cfg_;
  ParamBlock<T> params_;
  std::vector<LayerDims> dims_;
  nn::ConvShape dec1_{}, dec2_{};
  int latent_c_ = 0, latent_h_ = 0, latent_w_ = 0, latent_dim_ = 0;
};

/// Encode-only view over trained weights. Update paths are rejected so the
/// parameter checksum stays fixed for the lifetime of the handle.
template <typename T>
class FrozenEncoder {
 public:
  explicit FrozenEncoder(const SpikingAutoencoder<T>& trained)
      : model_(cfg_without_decoder(trained.config()), 0) {
    // copy encoder weights only
    for (const auto& e : model_.block().entries()) {
      auto dst = model_.block().values(e.name);
      auto src = trained.block().values(e.name);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i];
    }
    checksum_ = checksum();
  }

  LatentVector encode(const MnistImage& image) const { return model_.encode(image); }
  std::vector<T> encode_values(std::span<const T> input) const {
    return model_.encode_values(input);
  }
  int latent_dim() const { return model_.latent_dim(); }

  std::uint64_t checksum() const {
    std::uint64_t h = 14695981039346656037ULL;
    for (const T& v : model_.block().data()) {
      const double d = double(v);
      std::uint64_t bits;
      std::memcpy(&bits, &d, sizeof bits);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xFF;
        h *= 1099511628211ULL;
      }
    }
    return h;
  }
  std::uint64_t frozen_checksum() const { return checksum_; }

  /// Frozen handles reject every update path.
  void update_parameters(std::span<const T>) {
    throw ImmutabilityError("encoder is frozen; parameter updates are rejected");
  }

 private:
  static ConvLifParams cfg_without_decoder(ConvLifParams cfg) {
    cfg.with_decoder = false;
    return cfg;
  }
  SpikingAutoencoder<T> model_;
  std::uint64_t checksum_ = 0;
};

/// Epoch metrics from reconstruction training.
struct AeTrainResult {
  std::vector<double> epoch_loss;
};

/// Adam on pixel MSE over the subset; hard spikes forward, surrogate
/// gradients backward. Deterministic given (subset, options, seed).
template <typename T>
AeTrainResult train_reconstruction(SpikingAutoencoder<T>& model, const ClassBalancedSubset& subset,
                                   const AeTrainOptions& opts, std::uint64_t seed) {
  if (subset.images.empty()) throw CapacityError("train_reconstruction: empty subset");
  nn::Adam<T> adam(model.block().size(), opts.learning_rate);
  Rng rng(derive_seed(seed, 0xae));
  std::vector<int> order(subset.images.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);

  AeTrainResult result;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t n_seen = 0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(opts.batch_size)) {
      const std::size_t end = std::min(order.size(), start + std::size_t(opts.batch_size));
      model.block().zero_grad();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        batch_loss += model.forward_backward(subset.images[order[i]]);
      }
      const std::size_t bn = end - start;
      // mean gradient over the batch
      for (auto& g : model.block().grad()) g /= T(bn);
      batch_loss /= double(bn);
      if (!std::isfinite(batch_loss)) throw NumericalError("autoencoder training diverged");
      adam.step(model.block());
      epoch_loss += batch_loss * double(bn);
      n_seen += bn;
    }
    epoch_loss /= double(n_seen);
    result.epoch_loss.push_back(epoch_loss);
    if (opts.on_epoch) opts.on_epoch(epoch, epoch_loss);
  }
  return result;
}

}  // namespace spikecpc::sae
