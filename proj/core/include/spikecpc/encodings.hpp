#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "spikecpc/errors.hpp"
#include "spikecpc/rng.hpp"
#include "spikecpc/subset.hpp"

namespace spikecpc {

/// Fixed-length real vector per subset image, indexed by the image's position
/// within the subset (the same position pairs refer to). Built once per run
/// by an encoder (spike counts, autoencoder latents or the random baseline)
/// and immutable afterwards.
template <typename T>
struct EncodingSet {
  int dim = 0;
  std::vector<std::vector<T>> vectors;  // [subset position][dim]
  std::vector<int> labels;
  std::vector<int> image_indices;

  std::size_t size() const { return vectors.size(); }
};

/// One fixed standard-normal vector per image, drawn at build time from a
/// per-image derived seed and reused thereafter.
template <typename T>
EncodingSet<T> random_encoding(const ClassBalancedSubset& subset, int dim, std::uint64_t seed) {
  if (dim <= 0) throw ConfigError("random_encoding: dim must be positive");
  EncodingSet<T> set;
  set.dim = dim;
  set.vectors.resize(subset.images.size());
  set.labels.resize(subset.images.size());
  set.image_indices.resize(subset.images.size());
  for (std::size_t i = 0; i < subset.images.size(); ++i) {
    const MnistImage& img = subset.images[i];
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(img.index)));
    auto& v = set.vectors[i];
    v.resize(dim);
    for (auto& x : v) x = T(rng.normal());
    set.labels[i] = img.label;
    set.image_indices[i] = img.index;
  }
  return set;
}

/// Delimited-text dump, one row per image: index, label, dim values.
template <typename T>
void dump_encodings(const EncodingSet<T>& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path);
  out << "spikecpc_encodings v1 dim=" << set.dim << "\n";
  char buf[32];
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << set.image_indices[i] << "\t" << set.labels[i];
    for (const T& x : set.vectors[i]) {
      std::snprintf(buf, sizeof buf, "%.9g", double(x));
      out << "\t" << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

struct SeparabilityReport {
  double within_mean = 0.0;
  double between_mean = 0.0;
  double gap() const { return within_mean - between_mean; }
};

/// Mean cosine similarity over sampled same-label pairs vs different-label
/// pairs. The separability figure of merit for an encoder.
template <typename T>
SeparabilityReport cosine_separability(const EncodingSet<T>& set, std::uint64_t seed,
                                       int max_pairs = 20000) {
  Rng rng(seed);
  const std::size_t n = set.size();
  if (n < 2) throw CapacityError("cosine_separability: need at least 2 encodings");
  auto cosine = [&](std::size_t a, std::size_t b) {
    double dot = 0, na = 0, nb = 0;
    for (int k = 0; k < set.dim; ++k) {
      const double x = double(set.vectors[a][k]), y = double(set.vectors[b][k]);
      dot += x * y;
      na += x * x;
      nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
  };
  double within = 0, between = 0;
  long n_within = 0, n_between = 0;
  while (n_within < max_pairs || n_between < max_pairs) {
    const std::size_t a = rng.uniform_int(n), b = rng.uniform_int(n);
    if (a == b) continue;
    if (set.labels[a] == set.labels[b]) {
      if (n_within < max_pairs) {
        within += cosine(a, b);
        ++n_within;
      }
    } else {
      if (n_between < max_pairs) {
        between += cosine(a, b);
        ++n_between;
      }
    }
  }
  return {within / double(n_within), between / double(n_between)};
}

}  // namespace spikecpc
