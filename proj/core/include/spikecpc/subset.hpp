#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spikecpc/mnist.hpp"

namespace spikecpc {

/// Class-stratified sample of MNIST: exactly per_class_count images of every
/// digit, order shuffled by the seed. Regeneration with the same inputs yields
/// the identical list.
struct ClassBalancedSubset {
  int per_class_count = 0;
  std::uint64_t seed = 0;
  std::vector<MnistImage> images;

  std::array<int, kNumClasses> class_histogram() const;
  /// Indices into `images`, bucketed by digit label.
  std::array<std::vector<int>, kNumClasses> class_buckets() const;
};

/// Deterministic stratified sample without replacement.
/// Throws CapacityError if some class has fewer than per_class_count images.
ClassBalancedSubset build_subset(const std::vector<MnistImage>& images, int per_class_count,
                                 std::uint64_t seed);

/// Text dump with a version header; used for regression fixtures.
void dump_subset(const ClassBalancedSubset& subset, const std::string& path);

}  // namespace spikecpc
