#include "spikecpc/stdp_network.hpp"

#include <cmath>
#include <cstring>

#include "spikecpc/checkpoint.hpp"
#include "spikecpc/errors.hpp"
#include "spikecpc/rng.hpp"

namespace spikecpc {

StdpNetwork::StdpNetwork(const StdpParams& params, std::uint64_t init_seed)
    : params_(params),
      w_(std::size_t(params.n_input) * params.n_exc),
      theta_(params.n_exc, 0.0),
      v_exc_(params.n_exc, params.v_rest_exc),
      v_inh_(params.n_exc, params.v_rest_inh),
      x_pre_(params.n_input, 0.0),
      x_post_(params.n_exc, 0.0),
      refrac_until_exc_(params.n_exc, 0),
      refrac_until_inh_(params.n_exc, 0) {
  Rng rng(init_seed);
  for (auto& w : w_) w = rng.uniform() * params.w_init_max;
  normalize_columns();
  decay_exc_ = std::exp(-params.dt / params.tau_mem_exc);
  decay_inh_ = std::exp(-params.dt / params.tau_mem_inh);
  decay_trace_ = std::exp(-params.dt / params.tau_trace);
  decay_theta_ = std::exp(-params.dt / params.tau_theta);
}

void StdpNetwork::decay_traces() {
  for (auto& x : x_pre_) x *= decay_trace_;
  for (auto& x : x_post_) x *= decay_trace_;
}

void StdpNetwork::apply_pre_spike(int input, bool learning) {
  const int n = params_.n_exc;
  double* row = w_.data() + std::size_t(input) * n;
  if (learning) {
    // Presynaptic depression against the postsynaptic traces.
    for (int j = 0; j < n; ++j) {
      double w = row[j] - params_.eta_pre * x_post_[j] * std::pow(row[j], params_.mu);
      row[j] = w < 0.0 ? 0.0 : w;
    }
    x_pre_[input] += 1.0;
  }
}

void StdpNetwork::apply_post_spike(int exc) {
  const int n = params_.n_exc;
  for (int i = 0; i < params_.n_input; ++i) {
    double& w = w_[std::size_t(i) * n + exc];
    w += params_.eta_post * x_pre_[i] * std::pow(params_.w_max - w, params_.mu);
    if (w > params_.w_max) w = params_.w_max;
  }
  x_post_[exc] += 1.0;
}

std::vector<int> StdpNetwork::simulate_presentation(const SpikeTrain& train, bool learning) {
  if (train.times.empty() && train.total > 0) {
    throw ConsistencyError("simulate_presentation: spike times not materialized");
  }
  const int n = params_.n_exc;
  const int steps = static_cast<int>(std::round(train.window * 1000.0 / params_.dt));
  // Bin input spike times into dt steps.
  const double dt_s = params_.dt / 1000.0;
  std::vector<std::vector<int>> events(steps);
  for (std::size_t i = 0; i < train.times.size(); ++i) {
    for (float t : train.times[i]) {
      int bin = static_cast<int>(double(t) / dt_s);
      if (bin >= steps) bin = steps - 1;
      events[bin].push_back(static_cast<int>(i));
    }
  }

  std::vector<int> counts(n, 0);
  std::vector<int> exc_spikes, inh_spikes;
  exc_spikes.reserve(16);
  inh_spikes.reserve(16);

  for (int t = 0; t < steps; ++t, ++step_) {
    if (learning) {
      decay_traces();
      for (auto& th : theta_) th *= decay_theta_;
    }
    for (int j = 0; j < n; ++j) {
      if (step_ >= refrac_until_exc_[j]) {
        v_exc_[j] = params_.v_rest_exc + (v_exc_[j] - params_.v_rest_exc) * decay_exc_;
      }
      if (step_ >= refrac_until_inh_[j]) {
        v_inh_[j] = params_.v_rest_inh + (v_inh_[j] - params_.v_rest_inh) * decay_inh_;
      }
    }
    for (int input : events[t]) {
      const double* row = w_.data() + std::size_t(input) * n;
      for (int j = 0; j < n; ++j) {
        if (step_ >= refrac_until_exc_[j]) v_exc_[j] += params_.input_gain * row[j];
      }
      apply_pre_spike(input, learning);
    }
    exc_spikes.clear();
    for (int j = 0; j < n; ++j) {
      if (step_ < refrac_until_exc_[j]) continue;
      if (!std::isfinite(v_exc_[j])) throw NumericalError("non-finite excitatory potential");
      if (v_exc_[j] >= params_.v_thresh_base + theta_[j]) {
        exc_spikes.push_back(j);
        counts[j]++;
        v_exc_[j] = params_.v_reset_exc;
        refrac_until_exc_[j] = step_ + params_.refrac_exc_steps() + 1;
      }
    }
    for (int j : exc_spikes) {
      if (learning) {
        theta_[j] += params_.theta_plus;
        apply_post_spike(j);
      }
      if (step_ >= refrac_until_inh_[j]) v_inh_[j] += params_.w_exc_inh;
    }
    inh_spikes.clear();
    for (int j = 0; j < n; ++j) {
      if (step_ < refrac_until_inh_[j]) continue;
      if (!std::isfinite(v_inh_[j])) throw NumericalError("non-finite inhibitory potential");
      if (v_inh_[j] >= params_.v_thresh_inh) {
        inh_spikes.push_back(j);
        v_inh_[j] = params_.v_reset_inh;
        refrac_until_inh_[j] = step_ + params_.refrac_inh_steps() + 1;
      }
    }
    for (int j : inh_spikes) {
      for (int k = 0; k < n; ++k) {
        if (k != j && step_ >= refrac_until_exc_[k]) v_exc_[k] -= params_.w_inh_exc;
      }
    }
  }
  return counts;
}

void StdpNetwork::rest() {
  const int steps = params_.rest_steps();
  for (int t = 0; t < steps; ++t, ++step_) {
    decay_traces();
    for (auto& th : theta_) th *= decay_theta_;
    for (int j = 0; j < params_.n_exc; ++j) {
      if (step_ >= refrac_until_exc_[j]) {
        v_exc_[j] = params_.v_rest_exc + (v_exc_[j] - params_.v_rest_exc) * decay_exc_;
      }
      if (step_ >= refrac_until_inh_[j]) {
        v_inh_[j] = params_.v_rest_inh + (v_inh_[j] - params_.v_rest_inh) * decay_inh_;
      }
    }
  }
}

void StdpNetwork::stdp_step(std::span<const std::uint8_t> pre_spikes,
                            std::span<const std::uint8_t> post_spikes) {
  if (int(pre_spikes.size()) != params_.n_input || int(post_spikes.size()) != params_.n_exc) {
    throw ShapeError("stdp_step: mask size mismatch");
  }
  decay_traces();
  for (int i = 0; i < params_.n_input; ++i) {
    if (pre_spikes[i]) apply_pre_spike(i, true);
  }
  for (int j = 0; j < params_.n_exc; ++j) {
    if (post_spikes[j]) apply_post_spike(j);
  }
}

void StdpNetwork::normalize_columns() {
  const int n_in = params_.n_input, n_exc = params_.n_exc;
  const double target = params_.norm_column_sum;
  for (int j = 0; j < n_exc; ++j) {
    double capped_total = 0.0;
    // Saturated weights are pinned at w_max; rescale the rest until the
    // column sums to the target without breaching the bound.
    std::vector<std::uint8_t> capped(n_in, 0);
    for (int iter = 0; iter < 64; ++iter) {
      double free_sum = 0.0;
      for (int i = 0; i < n_in; ++i) {
        if (!capped[i]) free_sum += w_[std::size_t(i) * n_exc + j];
      }
      if (free_sum <= 0.0) break;
      const double scale = (target - capped_total) / free_sum;
      bool newly_capped = false;
      for (int i = 0; i < n_in; ++i) {
        if (capped[i]) continue;
        double w = w_[std::size_t(i) * n_exc + j] * scale;
        if (w >= params_.w_max) {
          w = params_.w_max;
          capped[i] = 1;
          capped_total += params_.w_max;
          newly_capped = true;
        }
        w_[std::size_t(i) * n_exc + j] = w;
      }
      if (!newly_capped) break;
    }
  }
}

void StdpNetwork::reset_dynamic_state() {
  std::fill(v_exc_.begin(), v_exc_.end(), params_.v_rest_exc);
  std::fill(v_inh_.begin(), v_inh_.end(), params_.v_rest_inh);
  std::fill(x_pre_.begin(), x_pre_.end(), 0.0);
  std::fill(x_post_.begin(), x_post_.end(), 0.0);
  std::fill(refrac_until_exc_.begin(), refrac_until_exc_.end(), 0);
  std::fill(refrac_until_inh_.begin(), refrac_until_inh_.end(), 0);
  step_ = 0;
}

std::uint64_t StdpNetwork::state_checksum() const {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits;
      static_assert(sizeof bits == sizeof(double));
      std::memcpy(&bits, &p[i], sizeof bits);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xFF;
        h *= 1099511628211ULL;
      }
    }
  };
  mix(w_.data(), w_.size());
  mix(theta_.data(), theta_.size());
  return h;
}

void StdpNetwork::save(const std::string& path) const {
  std::vector<CheckpointEntry> entries(2);
  entries[0].name = "w_input_exc";
  entries[0].shape = {params_.n_input, params_.n_exc};
  entries[0].data = w_;
  entries[1].name = "theta";
  entries[1].shape = {params_.n_exc};
  entries[1].data = theta_;
  write_checkpoint(path, entries);
}

StdpNetwork StdpNetwork::load(const std::string& path, const StdpParams& params) {
  const auto entries = read_checkpoint(path);
  const auto& w = checkpoint_entry(entries, "w_input_exc");
  const auto& theta = checkpoint_entry(entries, "theta");
  if (w.shape != std::vector<int>{params.n_input, params.n_exc} ||
      theta.shape != std::vector<int>{params.n_exc}) {
    throw FormatError("stdp checkpoint shape mismatch in " + path);
  }
  StdpNetwork net(params, 0);
  net.w_ = w.data;
  net.theta_ = theta.data;
  net.reset_dynamic_state();
  return net;
}

void train_unsupervised(StdpNetwork& net, const ClassBalancedSubset& subset,
                        const StdpTrainOptions& opts, std::uint64_t seed) {
  if (subset.images.empty()) throw CapacityError("train_unsupervised: empty subset");
  RateCodingParams codec = opts.codec;
  codec.materialize_times = true;
  Rng rng(derive_seed(seed, 0x51d9));
  const int total = static_cast<int>(subset.images.size());
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    for (int i = 0; i < total; ++i) {
      const SpikeTrain train = adaptive_encode(subset.images[i], codec, rng);
      net.simulate_presentation(train, /*learning=*/true);
      net.rest();
      net.normalize_columns();
      if (opts.progress && (i + 1) % 250 == 0) opts.progress(epoch, i + 1, total);
    }
  }
}

Encoding400 encode_image(StdpNetwork& net, const MnistImage& image, const RateCodingParams& codec,
                         std::uint64_t seed) {
  RateCodingParams c = codec;
  c.materialize_times = true;
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(image.index)));
  const SpikeTrain train = adaptive_encode(image, c, rng);
  net.reset_dynamic_state();
  Encoding400 enc;
  enc.counts = net.simulate_presentation(train, /*learning=*/false);
  enc.image_index = image.index;
  enc.image_label = image.label;
  net.reset_dynamic_state();
  return enc;
}

}  // namespace spikecpc
