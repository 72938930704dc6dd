#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikecpc/mnist.hpp"
#include "spikecpc/rng.hpp"

namespace spikecpc {

/// Poisson rate-coding parameters. lambda_i = k * I_i * delta_t is the
/// expected spike COUNT of pixel i over one presentation window, which keeps
/// the Poisson draw dimensionally coherent.
struct RateCodingParams {
  double k = 2.0;          // intensity scaling factor, grows on retry
  double delta_k = 1.0;    // increment per retry
  int s_min = 5;           // minimum total spikes per train
  double delta_t = 0.35;   // presentation window, seconds
  double dt = 0.001;       // simulation step, seconds
  int retry_cap = 50;
  bool materialize_times = false;  // per-pixel spike-time lists (STDP needs them)

  void validate() const;
  int n_steps() const;  // presentation window in dt steps
};

/// Per-pixel spike counts (and optional sorted spike times) for one image.
struct SpikeTrain {
  std::vector<std::uint32_t> counts;          // one entry per pixel
  std::vector<std::vector<float>> times;      // seconds in [0, delta_t); empty if not materialized
  std::uint64_t total = 0;
  double effective_k = 0.0;
  double window = 0.0;                        // presentation window, seconds
};

/// One Poisson draw per pixel with mean k * I_i * delta_t. Spike times, when
/// materialized, are uniform order statistics within the window.
SpikeTrain encode_poisson(const MnistImage& image, const RateCodingParams& params, Rng& rng);

/// Redraws the whole train with k <- k + delta_k while the total falls short
/// of s_min. Throws EncodingFailure (naming the image index) if the retry cap
/// is exhausted without reaching s_min, which happens for all-zero images.
SpikeTrain adaptive_encode(const MnistImage& image, const RateCodingParams& params, Rng& rng);

/// Raster dump, one line per pixel: index, count, semicolon-joined times (ms).
void dump_raster(const SpikeTrain& train, const std::string& path);

}  // namespace spikecpc
