#include "spikecpc/subset.hpp"

#include <cstdio>
#include <fstream>

#include "spikecpc/errors.hpp"
#include "spikecpc/rng.hpp"

namespace spikecpc {

std::array<int, kNumClasses> ClassBalancedSubset::class_histogram() const {
  std::array<int, kNumClasses> h{};
  for (const auto& img : images) h[img.label]++;
  return h;
}

std::array<std::vector<int>, kNumClasses> ClassBalancedSubset::class_buckets() const {
  std::array<std::vector<int>, kNumClasses> buckets;
  for (std::size_t i = 0; i < images.size(); ++i) {
    buckets[images[i].label].push_back(static_cast<int>(i));
  }
  return buckets;
}

ClassBalancedSubset build_subset(const std::vector<MnistImage>& images, int per_class_count,
                                 std::uint64_t seed) {
  if (per_class_count <= 0) throw CapacityError("per_class_count must be positive");

  std::array<std::vector<int>, kNumClasses> by_class;
  for (std::size_t i = 0; i < images.size(); ++i) {
    by_class[images[i].label].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < kNumClasses; ++c) {
    if (static_cast<int>(by_class[c].size()) < per_class_count) {
      throw CapacityError("class " + std::to_string(c) + " has only " +
                          std::to_string(by_class[c].size()) + " images, need " +
                          std::to_string(per_class_count));
    }
  }

  Rng rng(seed);
  ClassBalancedSubset subset;
  subset.per_class_count = per_class_count;
  subset.seed = seed;
  subset.images.reserve(static_cast<std::size_t>(per_class_count) * kNumClasses);
  for (int c = 0; c < kNumClasses; ++c) {
    rng.shuffle(by_class[c]);
    for (int k = 0; k < per_class_count; ++k) {
      subset.images.push_back(images[by_class[c][k]]);
    }
  }
  rng.shuffle(subset.images);
  return subset;
}

void dump_subset(const ClassBalancedSubset& subset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path);
  out << "spikecpc_subset v1\n";
  out << "per_class_count\t" << subset.per_class_count << "\n";
  out << "seed\t" << subset.seed << "\n";
  out << "count\t" << subset.images.size() << "\n";
  char buf[16];
  for (const auto& img : subset.images) {
    out << img.index << "\t" << img.label;
    for (int p = 0; p < kImagePixels; ++p) {
      std::snprintf(buf, sizeof buf, "%.9g", double(img.pixels[p]));
      out << "\t" << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace spikecpc
