#include "spikecpc/gradsuite.hpp"

#include <cstdio>

#include "spikecpc/autoencoder.hpp"
#include "spikecpc/cpc.hpp"
#include "spikecpc/gru.hpp"
#include "spikecpc/nn_ops.hpp"
#include "spikecpc/rng.hpp"

namespace spikecpc {

namespace {

// dense(3->5) followed by a sigmoid sum; checks dW, db and dx.
nn::GradCheckReport check_dense() {
  const int d_in = 3, d_out = 5;
  std::vector<double> params(d_out * d_in + d_out + d_in);
  Rng rng(11);
  for (auto& p : params) p = rng.uniform_range(-1.0, 1.0);
  auto w = std::span<double>(params).subspan(0, d_out * d_in);
  auto b = std::span<double>(params).subspan(d_out * d_in, d_out);
  auto x = std::span<double>(params).subspan(d_out * d_in + d_out, d_in);

  auto loss = [&]() {
    std::vector<double> y(d_out);
    nn::dense_forward<double>(x, w, b, y);
    double l = 0;
    for (double v : y) l += nn::sigmoid(v);
    return l;
  };
  std::vector<double> analytic(params.size(), 0.0);
  {
    std::vector<double> y(d_out), dy(d_out);
    nn::dense_forward<double>(x, w, b, y);
    for (int o = 0; o < d_out; ++o) {
      const double s = nn::sigmoid(y[o]);
      dy[o] = s * (1.0 - s);
    }
    auto dw = std::span<double>(analytic).subspan(0, d_out * d_in);
    auto db = std::span<double>(analytic).subspan(d_out * d_in, d_out);
    auto dx = std::span<double>(analytic).subspan(d_out * d_in + d_out, d_in);
    nn::dense_backward<double>(x, w, dy, dw, db, dx);
  }
  return nn::grad_check("dense", loss, params, analytic, 1e-5, 1e-6);
}

// dense(4->1) into BCE-with-logits over a batch of 8.
nn::GradCheckReport check_bce_composite() {
  const int d = 4, batch = 8;
  std::vector<double> params(d + 1);
  std::vector<double> xs(batch * d), labels(batch);
  Rng rng(12);
  for (auto& p : params) p = rng.uniform_range(-1.0, 1.0);
  for (auto& v : xs) v = rng.uniform_range(-1.0, 1.0);
  for (int i = 0; i < batch; ++i) labels[i] = double(i % 2);

  auto loss = [&]() {
    std::vector<double> logits(batch), d_logits(batch);
    for (int i = 0; i < batch; ++i) {
      logits[i] = params[d] + nn::dot(params.data(), xs.data() + i * d, d);
    }
    return nn::bce_with_logits<double>(logits, labels, d_logits);
  };
  std::vector<double> analytic(params.size(), 0.0);
  {
    std::vector<double> logits(batch), d_logits(batch);
    for (int i = 0; i < batch; ++i) {
      logits[i] = params[d] + nn::dot(params.data(), xs.data() + i * d, d);
    }
    nn::bce_with_logits<double>(logits, labels, d_logits);
    for (int i = 0; i < batch; ++i) {
      for (int k = 0; k < d; ++k) analytic[k] += d_logits[i] * xs[i * d + k];
      analytic[d] += d_logits[i];
    }
  }
  return nn::grad_check("sigmoid+bce composite", loss, params, analytic, 1e-5, 1e-6);
}

// conv(1x6x6 -> 2 channels, 3x3, stride 1, pad 1) with tanh-sum loss;
// input participates as a parameter so the dIn path is covered.
nn::GradCheckReport check_conv2d() {
  nn::ConvShape shape{1, 6, 6, 2, 3, 3, 1, 1};
  const std::size_t nw = shape.weight_size(), nin = shape.in_size();
  std::vector<double> params(nw + 2 + nin);
  Rng rng(13);
  for (auto& p : params) p = rng.uniform_range(-1.0, 1.0);
  auto w = std::span<double>(params).subspan(0, nw);
  auto b = std::span<double>(params).subspan(nw, 2);
  auto in = std::span<double>(params).subspan(nw + 2, nin);

  auto loss = [&]() {
    std::vector<double> out(shape.out_size());
    nn::conv2d_forward<double>(in, w, b, shape, out);
    double l = 0;
    for (double v : out) l += std::tanh(v);
    return l;
  };
  std::vector<double> analytic(params.size(), 0.0);
  {
    std::vector<double> out(shape.out_size()), d_out(shape.out_size());
    nn::conv2d_forward<double>(in, w, b, shape, out);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double t = std::tanh(out[i]);
      d_out[i] = 1.0 - t * t;
    }
    auto dw = std::span<double>(analytic).subspan(0, nw);
    auto db = std::span<double>(analytic).subspan(nw, 2);
    auto din = std::span<double>(analytic).subspan(nw + 2, nin);
    nn::conv2d_backward<double>(in, w, d_out, shape, dw, db, din);
  }
  return nn::grad_check("conv2d", loss, params, analytic, 1e-5, 1e-5);
}

// GRU (input 3, hidden 4) unrolled for 3 steps, quadratic loss on h_3.
nn::GradCheckReport check_gru() {
  const int d = 3, h = 4, steps = 3;
  ParamBlock<double> block;
  block.add("wz", {h, d});
  block.add("wr", {h, d});
  block.add("wh", {h, d});
  block.add("uz", {h, h});
  block.add("ur", {h, h});
  block.add("uh", {h, h});
  block.add("bz", {h});
  block.add("br", {h});
  block.add("bh", {h});
  block.finalize();
  Rng rng(14);
  for (auto& p : block.data()) p = rng.uniform_range(-0.8, 0.8);
  std::vector<std::vector<double>> xs(steps, std::vector<double>(d));
  for (auto& x : xs) {
    for (auto& v : x) v = rng.uniform_range(-1.0, 1.0);
  }
  auto weights = [&]() {
    nn::GruWeights<double> w;
    w.input_dim = d;
    w.hidden_dim = h;
    w.wz = block.values("wz");
    w.wr = block.values("wr");
    w.wh = block.values("wh");
    w.uz = block.values("uz");
    w.ur = block.values("ur");
    w.uh = block.values("uh");
    w.bz = block.values("bz");
    w.br = block.values("br");
    w.bh = block.values("bh");
    return w;
  };
  auto loss = [&]() {
    auto w = weights();
    std::vector<double> state(h, 0.0), next(h);
    nn::GruStepCache<double> cache;
    for (int t = 0; t < steps; ++t) {
      nn::gru_forward<double>(w, xs[t], state, next, cache);
      state = next;
    }
    double l = 0;
    for (double v : state) l += 0.5 * v * v;
    return l;
  };
  block.zero_grad();
  {
    auto w = weights();
    std::vector<nn::GruStepCache<double>> caches(steps);
    std::vector<double> state(h, 0.0), next(h);
    for (int t = 0; t < steps; ++t) {
      nn::gru_forward<double>(w, xs[t], state, next, caches[t]);
      state = next;
    }
    nn::GruGrads<double> g;
    g.wz = block.grads("wz");
    g.wr = block.grads("wr");
    g.wh = block.grads("wh");
    g.uz = block.grads("uz");
    g.ur = block.grads("ur");
    g.uh = block.grads("uh");
    g.bz = block.grads("bz");
    g.br = block.grads("br");
    g.bh = block.grads("bh");
    std::vector<double> dh = state, dh_prev(h);
    for (int t = steps - 1; t >= 0; --t) {
      std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
      nn::gru_backward<double>(w, caches[t], dh, g, dh_prev);
      dh = dh_prev;
    }
  }
  std::vector<double> analytic(block.grad().begin(), block.grad().end());
  std::vector<double> params(block.data().begin(), block.data().end());
  auto loss_on_copy = [&]() {
    std::copy(params.begin(), params.end(), block.data().begin());
    return loss();
  };
  auto report = nn::grad_check("gru (3 steps)", loss_on_copy, params, analytic, 1e-5, 1e-4);
  std::copy(params.begin(), params.end(), block.data().begin());
  return report;
}

// Two conv-LIF layers over a 6x6 input, 3 time steps, latent-MSE loss, in
// differentiable-spike mode so finite differences see the surrogate path.
nn::GradCheckReport check_surrogate_lif() {
  sae::ConvLifParams cfg;
  cfg.in_c = 1;
  cfg.in_h = 6;
  cfg.in_w = 6;
  cfg.encoder = {{2, 3, 2, 1}, {2, 3, 2, 1}};
  cfg.t_steps = 3;
  cfg.with_decoder = false;
  sae::SpikingAutoencoder<double> model(cfg, 15);
  // Scale weights up so several membranes sit near threshold.
  for (auto& p : model.block().data()) p *= 3.0;

  Rng rng(16);
  std::vector<double> input(36);
  for (auto& v : input) v = rng.uniform_range(0.0, 1.0);
  std::vector<double> target(model.latent_dim());
  for (auto& v : target) v = rng.uniform_range(-0.2, 0.2);

  auto loss = [&]() {
    const auto latent = model.encode_values(input, sae::SpikeMode::Soft);
    double l = 0;
    for (std::size_t i = 0; i < latent.size(); ++i) {
      const double d = latent[i] - target[i];
      l += d * d;
    }
    return l / double(latent.size());
  };
  model.block().zero_grad();
  model.forward_backward_values(input, target, sae::SpikeMode::Soft);
  std::vector<double> analytic(model.block().grad().begin(), model.block().grad().end());
  std::vector<double> params(model.block().data().begin(), model.block().data().end());
  auto loss_on_copy = [&]() {
    std::copy(params.begin(), params.end(), model.block().data().begin());
    return loss();
  };
  auto report = nn::grad_check("surrogate-lif encoder", loss_on_copy, params, analytic, 1e-5, 1e-4);
  std::copy(params.begin(), params.end(), model.block().data().begin());
  return report;
}

// d=3 encodings, context 2, two prediction steps, one positive and one
// negative pair through scoring, calibration and BCE.
nn::GradCheckReport check_cpc_end_to_end() {
  cpc::CpcConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden_dim = 2;
  cfg.context_len = 2;
  cfg.target_len = 2;
  cpc::CpcModel<double> model(cfg, 17);

  EncodingSet<double> enc;
  enc.dim = 3;
  Rng rng(18);
  for (int i = 0; i < 8; ++i) {
    enc.vectors.push_back({rng.normal(), rng.normal(), rng.normal()});
    enc.labels.push_back(i % 2);
    enc.image_indices.push_back(i);
  }
  std::vector<SequencePair> pairs(2);
  pairs[0].label = 1;
  pairs[0].context_image_idx = {0, 1, 0, 0};
  pairs[0].target_image_idx = {2, 3, 0, 0};
  pairs[1].label = 0;
  pairs[1].context_image_idx = {4, 5, 0, 0};
  pairs[1].target_image_idx = {6, 7, 0, 0};

  auto loss = [&]() {
    typename cpc::CpcModel<double>::PairForward fwd;
    std::vector<double> logits, labels, d_logits(2);
    for (const auto& p : pairs) {
      model.forward_pair(enc, p, fwd);
      logits.push_back(fwd.logit);
      labels.push_back(double(p.label));
    }
    return nn::bce_with_logits<double>(logits, labels, d_logits);
  };
  model.block().zero_grad();
  {
    std::vector<typename cpc::CpcModel<double>::PairForward> fwds(2);
    std::vector<double> logits(2), labels(2), d_logits(2);
    for (int i = 0; i < 2; ++i) {
      model.forward_pair(enc, pairs[i], fwds[i]);
      logits[i] = fwds[i].logit;
      labels[i] = double(pairs[i].label);
    }
    nn::bce_with_logits<double>(logits, labels, d_logits);
    for (int i = 0; i < 2; ++i) model.backward_pair(fwds[i], d_logits[i]);
  }
  std::vector<double> analytic(model.block().grad().begin(), model.block().grad().end());
  std::vector<double> params(model.block().data().begin(), model.block().data().end());
  auto loss_on_copy = [&]() {
    std::copy(params.begin(), params.end(), model.block().data().begin());
    return loss();
  };
  auto report = nn::grad_check("cpc end-to-end", loss_on_copy, params, analytic, 1e-5, 1e-4);
  std::copy(params.begin(), params.end(), model.block().data().begin());
  return report;
}

}  // namespace

std::vector<nn::GradCheckReport> gradcheck_all() {
  return {check_dense(),         check_bce_composite(), check_conv2d(),
          check_gru(),           check_surrogate_lif(), check_cpc_end_to_end()};
}

void print_gradcheck_table(const std::vector<nn::GradCheckReport>& reports) {
  std::printf("%-24s %-12s %-12s %s\n", "check", "max rel err", "tolerance", "result");
  for (const auto& r : reports) {
    std::printf("%-24s %-12.3e %-12.1e %s\n", r.name.c_str(), r.max_rel_err, r.tolerance,
                r.pass ? "pass" : "FAIL");
  }
}

}  // namespace spikecpc
