#include "spikecpc/rate_coding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "spikecpc/errors.hpp"

namespace spikecpc {

void RateCodingParams::validate() const {
  if (k <= 0.0) throw ConfigError("rate coding: k must be positive");
  if (delta_k <= 0.0) throw ConfigError("rate coding: delta_k must be positive");
  if (s_min < 0) throw ConfigError("rate coding: s_min must be non-negative");
  if (delta_t <= 0.0 || dt <= 0.0) throw ConfigError("rate coding: delta_t and dt must be positive");
  const double steps = delta_t / dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * steps) {
    throw ConfigError("rate coding: dt must divide delta_t");
  }
}

int RateCodingParams::n_steps() const { return static_cast<int>(std::round(delta_t / dt)); }

SpikeTrain encode_poisson(const MnistImage& image, const RateCodingParams& params, Rng& rng) {
  SpikeTrain train;
  train.counts.resize(kImagePixels);
  train.effective_k = params.k;
  train.window = params.delta_t;
  if (params.materialize_times) train.times.resize(kImagePixels);

  for (int i = 0; i < kImagePixels; ++i) {
    const double lambda = params.k * double(image.pixels[i]) * params.delta_t;
    const std::uint64_t n = rng.poisson(lambda);
    train.counts[i] = static_cast<std::uint32_t>(n);
    train.total += n;
    if (params.materialize_times && n > 0) {
      auto& t = train.times[i];
      t.resize(n);
      for (std::uint64_t s = 0; s < n; ++s) {
        t[s] = static_cast<float>(rng.uniform() * params.delta_t);
      }
      std::sort(t.begin(), t.end());
    }
  }
  return train;
}

SpikeTrain adaptive_encode(const MnistImage& image, const RateCodingParams& params, Rng& rng) {
  params.validate();
  RateCodingParams cur = params;
  for (int attempt = 0; attempt <= params.retry_cap; ++attempt) {
    SpikeTrain train = encode_poisson(image, cur, rng);
    if (train.total >= static_cast<std::uint64_t>(params.s_min)) return train;
    cur.k += cur.delta_k;
  }
  throw EncodingFailure("image " + std::to_string(image.index) + ": total spikes below " +
                        std::to_string(params.s_min) + " after " + std::to_string(params.retry_cap) +
                        " retries");
}

void dump_raster(const SpikeTrain& train, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path);
  out << "spikecpc_raster v1\n";
  char buf[32];
  for (std::size_t i = 0; i < train.counts.size(); ++i) {
    out << i << "," << train.counts[i] << ",";
    if (i < train.times.size()) {
      const auto& t = train.times[i];
      for (std::size_t s = 0; s < t.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%.6g", double(t[s]) * 1000.0);
        out << (s ? ";" : "") << buf;
      }
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace spikecpc
