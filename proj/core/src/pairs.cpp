#include "spikecpc/pairs.hpp"

#include <fstream>

#include "spikecpc/errors.hpp"

namespace spikecpc {

PairSampler::PairSampler(const ClassBalancedSubset& subset, bool wrap)
    : subset_(&subset), wrap_(wrap) {
  for (std::size_t i = 0; i < subset.images.size(); ++i) {
    buckets_[subset.images[i].label].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < kNumClasses; ++c) {
    if (buckets_[c].empty()) throw CapacityError("no images of class " + std::to_string(c));
  }
}

PairSampler::PairSampler(const ClassBalancedSubset& subset, const std::vector<int>& positions,
                         bool wrap)
    : subset_(&subset), wrap_(wrap) {
  for (int pos : positions) {
    buckets_[subset.images[pos].label].push_back(pos);
  }
  for (int c = 0; c < kNumClasses; ++c) {
    if (buckets_[c].empty()) throw CapacityError("no images of class " + std::to_string(c));
  }
}

int PairSampler::draw_image(int digit, Rng& rng) const {
  const auto& bucket = buckets_[digit];
  return bucket[rng.uniform_int(bucket.size())];
}

SequencePair PairSampler::make_pair(int start_digit, int label, Rng& rng) const {
  SequencePair pair;
  pair.label = label;
  for (int t = 0; t < kContextLen; ++t) {
    pair.context_digits[t] = (start_digit + t) % kNumClasses;
  }
  std::array<int, kTargetLen> continuation{};
  for (int t = 0; t < kTargetLen; ++t) {
    continuation[t] = (start_digit + kContextLen + t) % kNumClasses;
  }
  if (label == 1) {
    pair.target_digits = continuation;
  } else {
    // Independent uniform digits, redrawn until the tuple differs from the
    // true continuation in at least one position.
    do {
      for (int t = 0; t < kTargetLen; ++t) {
        pair.target_digits[t] = static_cast<int>(rng.uniform_int(kNumClasses));
      }
    } while (pair.target_digits == continuation);
  }
  for (int t = 0; t < kContextLen; ++t) {
    pair.context_image_idx[t] = draw_image(pair.context_digits[t], rng);
  }
  for (int t = 0; t < kTargetLen; ++t) {
    pair.target_image_idx[t] = draw_image(pair.target_digits[t], rng);
  }
  return pair;
}

std::vector<SequencePair> PairSampler::generate(int n_pos, int n_neg, Rng& rng) const {
  std::vector<SequencePair> pairs;
  pairs.reserve(n_pos + n_neg);
  const int starts = start_digit_count();
  for (int i = 0; i < n_pos; ++i) {
    pairs.push_back(make_pair(static_cast<int>(rng.uniform_int(starts)), 1, rng));
  }
  for (int i = 0; i < n_neg; ++i) {
    pairs.push_back(make_pair(static_cast<int>(rng.uniform_int(starts)), 0, rng));
  }
  return pairs;
}

void split_positions(const ClassBalancedSubset& subset, double val_fraction,
                     std::vector<int>& train_positions, std::vector<int>& val_positions) {
  train_positions.clear();
  val_positions.clear();
  auto buckets = subset.class_buckets();
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& bucket = buckets[c];
    int n_val = static_cast<int>(bucket.size() * val_fraction);
    if (n_val < 1) n_val = 1;
    if (n_val >= static_cast<int>(bucket.size())) n_val = static_cast<int>(bucket.size()) - 1;
    // Tail of each class bucket is held out for validation.
    for (std::size_t i = 0; i < bucket.size(); ++i) {
      if (i + n_val < bucket.size()) {
        train_positions.push_back(bucket[i]);
      } else {
        val_positions.push_back(bucket[i]);
      }
    }
  }
}

std::vector<std::vector<int>> make_batches(const std::vector<SequencePair>& pairs,
                                           int pos_per_batch, int neg_per_batch, Rng& rng) {
  std::vector<int> pos, neg;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    (pairs[i].label == 1 ? pos : neg).push_back(static_cast<int>(i));
  }
  rng.shuffle(pos);
  rng.shuffle(neg);
  const std::size_t n_batches =
      std::min(pos_per_batch > 0 ? pos.size() / pos_per_batch : SIZE_MAX,
               neg_per_batch > 0 ? neg.size() / neg_per_batch : SIZE_MAX);
  std::vector<std::vector<int>> batches;
  batches.reserve(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    std::vector<int> batch;
    batch.reserve(pos_per_batch + neg_per_batch);
    for (int k = 0; k < pos_per_batch; ++k) batch.push_back(pos[b * pos_per_batch + k]);
    for (int k = 0; k < neg_per_batch; ++k) batch.push_back(neg[b * neg_per_batch + k]);
    rng.shuffle(batch);
    batches.push_back(std::move(batch));
  }
  return batches;
}

void dump_pairs(const std::vector<SequencePair>& pairs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path);
  out << "spikecpc_pairs v1\n";
  out << "count\t" << pairs.size() << "\n";
  for (const auto& p : pairs) {
    out << p.label;
    for (int t = 0; t < kContextLen; ++t) out << "\t" << p.context_digits[t];
    for (int t = 0; t < kTargetLen; ++t) out << "\t" << p.target_digits[t];
    for (int t = 0; t < kContextLen; ++t) out << "\t" << p.context_image_idx[t];
    for (int t = 0; t < kTargetLen; ++t) out << "\t" << p.target_image_idx[t];
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace spikecpc
