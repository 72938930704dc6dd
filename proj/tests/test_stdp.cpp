#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "spikecpc/encodings.hpp"
#include "spikecpc/errors.hpp"
#include "spikecpc/stdp_network.hpp"

using namespace spikecpc;

namespace {

StdpParams toy_params(int n_input, int n_exc) {
  StdpParams p;
  p.n_input = n_input;
  p.n_exc = n_exc;
  return p;
}

// Spike train with one input neuron firing once per 1 ms bin for n_steps.
SpikeTrain every_step_train(int n_steps) {
  SpikeTrain train;
  train.counts.assign(1, n_steps);
  train.times.resize(1);
  for (int t = 0; t < n_steps; ++t) train.times[0].push_back(float(t) * 0.001f + 0.0005f);
  train.total = n_steps;
  train.window = n_steps * 0.001;
  return train;
}

SpikeTrain empty_train(int n_pixels, double window) {
  SpikeTrain train;
  train.counts.assign(n_pixels, 0);
  train.times.resize(n_pixels);
  train.total = 0;
  train.window = window;
  return train;
}

// Small images with a per-class bright block; keeps adaptive coding fast.
std::vector<MnistImage> blocky_images(int per_class) {
  std::vector<MnistImage> images;
  Rng rng(99);
  for (int c = 0; c < 10; ++c) {
    for (int i = 0; i < per_class; ++i) {
      MnistImage img{};
      img.label = c;
      img.index = int(images.size());
      for (int p = 0; p < 60; ++p) {
        img.pixels[(c * 71 + p * 3) % kImagePixels] = 0.8f + 0.2f * float(rng.uniform());
      }
      images.push_back(img);
    }
  }
  return images;
}

}  // namespace

// One excitatory neuron, one input firing every millisecond: the simulator
// must match a hand-stepped exponential-Euler LIF trace (decay toward rest,
// delta-current injection, threshold, reset, absolute refractory period).
TEST_CASE("simulator matches a hand-stepped LIF trace") {
  StdpParams p = toy_params(1, 1);
  p.norm_column_sum = 0.8;  // single weight, pinned exactly to 0.8
  p.input_gain = 4.0;
  StdpNetwork net(p, 7);
  REQUIRE(net.weight(0, 0) == doctest::Approx(0.8).epsilon(1e-12));

  const int n_steps = 40;
  const auto counts = net.simulate_presentation(every_step_train(n_steps), /*learning=*/false);

  // independent hand-stepped trace
  const double decay = std::exp(-p.dt / p.tau_mem_exc);
  double v = p.v_rest_exc;
  int refrac_until = 0;
  int hand_spikes = 0;
  std::vector<int> hand_spike_steps;
  for (int t = 0; t < n_steps; ++t) {
    if (t >= refrac_until) {
      v = p.v_rest_exc + (v - p.v_rest_exc) * decay;
      v += p.input_gain * 0.8;
      if (v >= p.v_thresh_base) {
        ++hand_spikes;
        hand_spike_steps.push_back(t);
        v = p.v_reset_exc;
        refrac_until = t + p.refrac_exc_steps() + 1;
      }
    }
  }
  CHECK(hand_spikes > 0);
  CHECK(counts[0] == hand_spikes);
  CHECK(net.v_exc()[0] == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("zero-spike input leaves counts at zero and decays toward rest") {
  StdpParams p = toy_params(4, 8);
  StdpNetwork net(p, 3);
  // perturb with a strong presentation first
  SpikeTrain burst;
  burst.counts.assign(4, 5);
  burst.times.resize(4);
  for (int i = 0; i < 4; ++i) {
    for (int s = 0; s < 5; ++s) burst.times[i].push_back(0.001f * float(s * 7 + i));
  }
  burst.total = 20;
  burst.window = 0.05;
  net.simulate_presentation(burst, false);

  double dev_before = 0;
  for (double v : net.v_exc()) dev_before = std::max(dev_before, std::abs(v - p.v_rest_exc));

  const auto counts = net.simulate_presentation(empty_train(4, 0.35), false);
  for (int c : counts) CHECK(c == 0);
  double dev_after = 0;
  for (double v : net.v_exc()) dev_after = std::max(dev_after, std::abs(v - p.v_rest_exc));
  CHECK(dev_after < 1.0);  // mV; 350 steps of tau=100ms leak
  CHECK(dev_after <= dev_before * 0.05 + 1e-12);
}

TEST_CASE("frozen network is deterministic and does not learn") {
  StdpParams p = toy_params(16, 8);
  p.norm_column_sum = 1.6;
  StdpNetwork net(p, 11);
  SpikeTrain train;
  train.counts.assign(16, 0);
  train.times.resize(16);
  Rng rng(5);
  for (int i = 0; i < 16; ++i) {
    const int n = int(rng.uniform_int(6));
    for (int s = 0; s < n; ++s) train.times[i].push_back(float(rng.uniform() * 0.35));
    std::sort(train.times[i].begin(), train.times[i].end());
    train.counts[i] = n;
    train.total += n;
  }
  train.window = 0.35;

  const auto w_before = std::vector<double>(net.weights().begin(), net.weights().end());
  const auto checksum_before = net.state_checksum();
  net.reset_dynamic_state();
  const auto c1 = net.simulate_presentation(train, false);
  net.reset_dynamic_state();
  const auto c2 = net.simulate_presentation(train, false);
  CHECK(c1 == c2);
  CHECK(net.state_checksum() == checksum_before);
  const auto w_after = std::vector<double>(net.weights().begin(), net.weights().end());
  CHECK(w_before == w_after);
}

TEST_CASE("stdp_step trace and weight dynamics") {
  StdpParams p = toy_params(3, 2);
  p.norm_column_sum = 0.9;
  StdpNetwork net(p, 21);
  const double decay = std::exp(-p.dt / p.tau_trace);

  std::vector<std::uint8_t> no_pre(3, 0), no_post(2, 0);
  std::vector<std::uint8_t> pre0(3, 0), post1(2, 0);
  pre0[0] = 1;
  post1[1] = 1;

  SUBCASE("decay-only step leaves weights alone and decays traces") {
    net.stdp_step(pre0, no_post);  // x_pre[0] jumps to 1
    const auto w_before = std::vector<double>(net.weights().begin(), net.weights().end());
    CHECK(net.x_pre()[0] == doctest::Approx(1.0));
    net.stdp_step(no_pre, no_post);
    CHECK(net.x_pre()[0] == doctest::Approx(decay).epsilon(1e-12));
    const auto w_after = std::vector<double>(net.weights().begin(), net.weights().end());
    CHECK(w_before == w_after);  // x_post was zero -> no depression happened
  }

  SUBCASE("pre at t then post at t+dt potentiates by the stated rule") {
    const double w0 = net.weight(0, 1);
    net.stdp_step(pre0, no_post);
    net.stdp_step(no_pre, post1);
    // x_pre decayed one step before the post spike used it
    const double expected = w0 + p.eta_post * decay * (p.w_max - w0);
    CHECK(net.weight(0, 1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(net.weight(0, 1) > w0);
  }

  SUBCASE("post spike with zero presynaptic traces does nothing") {
    const double w0 = net.weight(0, 1), w1 = net.weight(1, 1), w2 = net.weight(2, 1);
    net.stdp_step(no_pre, post1);
    CHECK(net.weight(0, 1) == w0);
    CHECK(net.weight(1, 1) == w1);
    CHECK(net.weight(2, 1) == w2);
    CHECK(net.x_post()[1] == doctest::Approx(1.0));
  }

  SUBCASE("pre spike after a post spike depresses") {
    net.stdp_step(no_pre, post1);  // x_post[1] = 1
    const double w0 = net.weight(0, 1);
    net.stdp_step(pre0, no_post);
    const double expected = w0 - p.eta_pre * (decay * 1.0) * w0;
    CHECK(net.weight(0, 1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(net.weight(0, 1) < w0);
  }
}

TEST_CASE("column normalization hits the target within 1e-9 and respects w_max") {
  StdpParams p = toy_params(50, 6);
  p.norm_column_sum = 5.0;
  StdpNetwork net(p, 31);
  net.normalize_columns();
  for (int j = 0; j < p.n_exc; ++j) {
    double sum = 0;
    for (int i = 0; i < p.n_input; ++i) {
      const double w = net.weight(i, j);
      CHECK(w >= 0.0);
      CHECK(w <= p.w_max);
      sum += w;
    }
    CHECK(sum == doctest::Approx(p.norm_column_sum).epsilon(1e-9));
  }
}

TEST_CASE("train_unsupervised with zero epochs is a no-op") {
  const auto images = blocky_images(2);
  const auto subset = build_subset(images, 2, 5);
  StdpParams p;  // full size
  StdpNetwork net(p, 17);
  const auto checksum = net.state_checksum();
  StdpTrainOptions opts;
  opts.epochs = 0;
  train_unsupervised(net, subset, opts, 5);
  CHECK(net.state_checksum() == checksum);
}

TEST_CASE("one epoch on a small set keeps invariants") {
  const auto images = blocky_images(5);
  const auto subset = build_subset(images, 5, 5);
  StdpParams p;
  StdpNetwork net(p, 17);
  StdpTrainOptions opts;
  opts.epochs = 1;
  train_unsupervised(net, subset, opts, 5);

  double w_min = 1e9, w_max = -1e9;
  for (double w : net.weights()) {
    w_min = std::min(w_min, w);
    w_max = std::max(w_max, w);
  }
  CHECK(w_min >= 0.0);
  CHECK(w_max <= p.w_max);
  for (int j = 0; j < p.n_exc; ++j) {
    double sum = 0;
    for (int i = 0; i < p.n_input; ++i) sum += net.weight(i, j);
    CHECK(sum == doctest::Approx(p.norm_column_sum).epsilon(1e-9));
  }
  for (double th : net.theta()) CHECK(th >= 0.0);
}

TEST_CASE("theta rises with a neuron's own spikes during learning") {
  StdpParams p = toy_params(1, 1);
  p.norm_column_sum = 0.8;
  p.input_gain = 4.0;
  StdpNetwork net(p, 7);
  const double theta_before = net.theta()[0];
  const auto counts = net.simulate_presentation(every_step_train(60), /*learning=*/true);
  REQUIRE(counts[0] > 0);
  const double theta_after = net.theta()[0];
  CHECK(theta_after - theta_before >= p.theta_plus * counts[0] * 0.999);
}

TEST_CASE("non-finite membrane potential raises a numerical error") {
  StdpParams p = toy_params(1, 1);
  p.norm_column_sum = 0.8;
  p.input_gain = std::numeric_limits<double>::infinity();
  StdpNetwork net(p, 7);
  CHECK_THROWS_AS(net.simulate_presentation(every_step_train(5), false), NumericalError);
}

TEST_CASE("missing spike times is a consistency error") {
  StdpParams p = toy_params(4, 2);
  StdpNetwork net(p, 1);
  SpikeTrain train;
  train.counts.assign(4, 1);
  train.total = 4;
  train.window = 0.01;  // times not materialized
  CHECK_THROWS_AS(net.simulate_presentation(train, false), ConsistencyError);
}

TEST_CASE("encode_image is pure, deterministic and propagates codec failures") {
  const auto images = blocky_images(2);
  StdpParams p;
  StdpNetwork net(p, 23);
  RateCodingParams codec;

  const auto checksum = net.state_checksum();
  const auto e1 = encode_image(net, images[3], codec, 42);
  const auto e2 = encode_image(net, images[3], codec, 42);
  CHECK(e1.counts == e2.counts);
  CHECK(e1.image_index == images[3].index);
  CHECK(e1.image_label == images[3].label);
  CHECK(int(e1.counts.size()) == p.n_exc);
  CHECK(net.state_checksum() == checksum);

  MnistImage black{};
  black.index = 77;
  CHECK_THROWS_AS(encode_image(net, black, codec, 42), EncodingFailure);
}

TEST_CASE("checkpoint round trip preserves weights and theta") {
  StdpParams p = toy_params(20, 10);
  p.norm_column_sum = 2.0;
  StdpNetwork net(p, 67);
  const auto path = std::string("/tmp/spikecpc_stdp_test.ckpt");
  net.save(path);
  const auto loaded = StdpNetwork::load(path, p);
  CHECK(loaded.state_checksum() == net.state_checksum());
}
