#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spikecpc/rate_coding.hpp"
#include "spikecpc/subset.hpp"

namespace spikecpc {

/// Constants of the classifier-encoder network: 784 Poisson inputs driving
/// 400 excitatory LIF neurons, each paired one-to-one with an inhibitory
/// neuron that inhibits every other excitatory neuron. Unsupervised learning
/// via a pair-based trace STDP rule with soft weight bounds, plus an adaptive
/// threshold offset per neuron. Units: mV and ms.
struct StdpParams {
  int n_input = 784;
  int n_exc = 400;

  double v_rest_exc = -65.0;
  double v_reset_exc = -60.0;
  double v_thresh_base = -52.0;
  double tau_mem_exc = 100.0;
  double refrac_exc = 5.0;

  double v_rest_inh = -60.0;
  double v_reset_inh = -45.0;
  double v_thresh_inh = -40.0;
  double tau_mem_inh = 10.0;
  double refrac_inh = 2.0;

  // Delta-current synapse strengths (mV per presynaptic spike). The input
  // deflection is input_gain * w[i][j].
  double input_gain = 12.0;
  double w_exc_inh = 22.0;
  double w_inh_exc = 3.0;

  double tau_trace = 20.0;
  double eta_post = 0.01;
  double eta_pre = 0.0001;
  double mu = 1.0;
  double w_max = 1.0;

  double theta_plus = 0.05;
  double tau_theta = 1e7;

  double dt = 1.0;         // ms
  double rest = 150.0;     // ms between presentations
  double norm_column_sum = 78.4;
  double w_init_max = 0.3;

  int refrac_exc_steps() const { return static_cast<int>(refrac_exc / dt + 0.5); }
  int refrac_inh_steps() const { return static_cast<int>(refrac_inh / dt + 0.5); }
  int rest_steps() const { return static_cast<int>(rest / dt + 0.5); }
};

/// 400-entry spike-count encoding of one image.
struct Encoding400 {
  std::vector<int> counts;
  int image_index = 0;
  int image_label = 0;
};

class StdpNetwork {
 public:
  StdpNetwork(const StdpParams& params, std::uint64_t init_seed);

  const StdpParams& params() const { return params_; }
  std::span<const double> weights() const { return w_; }
  std::span<const double> theta() const { return theta_; }
  std::span<const double> v_exc() const { return v_exc_; }
  double weight(int input, int exc) const { return w_[std::size_t(input) * params_.n_exc + exc]; }
  std::span<const double> x_pre() const { return x_pre_; }
  std::span<const double> x_post() const { return x_post_; }

  /// Steps the network over one presentation window (train.times must be
  /// materialized). Applies STDP and threshold homeostasis when learning is
  /// on. Returns per-excitatory-neuron spike counts.
  ///
  /// Per-step order: trace/theta decay (learning only) -> membrane leak ->
  /// input injection with presynaptic depression -> excitatory threshold
  /// check with potentiation, theta bump and inhibitory drive -> inhibitory
  /// threshold check, subtracting w_inh_exc from every other excitatory
  /// neuron. Refractory neurons are clamped: no leak, no input, no spike.
  std::vector<int> simulate_presentation(const SpikeTrain& train, bool learning);

  /// Rest interval with inputs silenced (decay only).
  void rest();

  /// One STDP micro-step on explicit spike masks: decays both trace arrays,
  /// then applies presynaptic depression dw = -eta_pre * x_post[j] * w^mu and
  /// trace jumps for every pre spike, then postsynaptic potentiation
  /// dw = +eta_post * x_pre[i] * (w_max - w)^mu and trace jumps for every
  /// post spike. Weights stay clamped to [0, w_max].
  void stdp_step(std::span<const std::uint8_t> pre_spikes,
                 std::span<const std::uint8_t> post_spikes);

  /// Rescales every neuron's afferent column to sum to norm_column_sum while
  /// keeping each weight within [0, w_max] (saturated weights are pinned and
  /// the remainder rescaled).
  void normalize_columns();

  /// Resets membranes, refractory clocks and traces; keeps weights and theta.
  void reset_dynamic_state();

  /// FNV-1a hash over weights and theta, for frozen-purity checks.
  std::uint64_t state_checksum() const;

  void save(const std::string& path) const;
  static StdpNetwork load(const std::string& path, const StdpParams& params);

 private:
  void decay_traces();
  void apply_pre_spike(int input, bool learning);
  void apply_post_spike(int exc);

  StdpParams params_;
  std::vector<double> w_;       // [n_input, n_exc] row-major
  std::vector<double> theta_;   // n_exc
  std::vector<double> v_exc_, v_inh_;
  std::vector<double> x_pre_, x_post_;
  std::vector<long> refrac_until_exc_, refrac_until_inh_;
  long step_ = 0;

  double decay_exc_, decay_inh_, decay_trace_, decay_theta_;
};

struct StdpTrainOptions {
  int epochs = 1;
  RateCodingParams codec;  // materialize_times is forced on
  std::function<void(int epoch, int presented, int total)> progress;
};

/// Presents every subset image (adaptive coding, 350 ms + rest), learning on,
/// normalizing afferent columns after each presentation.
void train_unsupervised(StdpNetwork& net, const ClassBalancedSubset& subset,
                        const StdpTrainOptions& opts, std::uint64_t seed);

/// Frozen-network encoding: fresh Poisson code for the image (seed derived
/// from (seed, image.index)), one presentation with learning off, dynamic
/// state reset on entry so the result is a pure function of its arguments.
Encoding400 encode_image(StdpNetwork& net, const MnistImage& image,
                         const RateCodingParams& codec, std::uint64_t seed);

}  // namespace spikecpc
