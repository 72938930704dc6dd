#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spikecpc/rng.hpp"
#include "spikecpc/subset.hpp"

namespace spikecpc {

constexpr int kContextLen = 4;
constexpr int kTargetLen = 4;

/// A digit-sequence sample: four context images whose labels run
/// consecutively (mod 10), plus four target images that either continue the
/// run (label 1) or break it in at least one slot (label 0). Images are held
/// as indices into the originating subset.
struct SequencePair {
  std::array<int, kContextLen> context_digits{};
  std::array<int, kTargetLen> target_digits{};
  std::array<int, kContextLen> context_image_idx{};
  std::array<int, kTargetLen> target_image_idx{};
  int label = 0;
};

/// Draws sequence pairs from a subset, optionally restricted to a slice of
/// image positions (used for the train/validation image split).
class PairSampler {
 public:
  /// Uses every image in the subset.
  explicit PairSampler(const ClassBalancedSubset& subset, bool wrap = true);
  /// Uses only the given positions within subset.images.
  PairSampler(const ClassBalancedSubset& subset, const std::vector<int>& positions,
              bool wrap = true);

  const ClassBalancedSubset& subset() const { return *subset_; }
  bool wrap() const { return wrap_; }
  /// Largest admissible start digit + 1 (10 when wrapping, 3 otherwise).
  int start_digit_count() const { return wrap_ ? 10 : 3; }

  SequencePair make_pair(int start_digit, int label, Rng& rng) const;

  /// n_pos positives followed by n_neg negatives, start digits uniform.
  std::vector<SequencePair> generate(int n_pos, int n_neg, Rng& rng) const;

 private:
  int draw_image(int digit, Rng& rng) const;

  const ClassBalancedSubset* subset_;
  std::array<std::vector<int>, kNumClasses> buckets_;
  bool wrap_;
};

/// Splits subset image positions into a train slice and a held-out validation
/// slice (per class, deterministic in the subset order). val_fraction of each
/// class bucket, at least one image per class on each side.
void split_positions(const ClassBalancedSubset& subset, double val_fraction,
                     std::vector<int>& train_positions, std::vector<int>& val_positions);

/// Batch composition over a pair pool: every batch holds exactly pos_per_batch
/// positives and neg_per_batch negatives, shuffled within the batch. Order is
/// reshuffled from rng on every call; the final partial batch is dropped.
/// Returned batches hold indices into `pairs`.
std::vector<std::vector<int>> make_batches(const std::vector<SequencePair>& pairs,
                                           int pos_per_batch, int neg_per_batch, Rng& rng);

/// Text dump with a version header (regression fixtures; byte-stable).
void dump_pairs(const std::vector<SequencePair>& pairs, const std::string& path);

}  // namespace spikecpc
