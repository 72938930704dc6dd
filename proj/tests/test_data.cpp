#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "spikecpc/errors.hpp"
#include "spikecpc/mnist.hpp"
#include "spikecpc/pairs.hpp"
#include "spikecpc/subset.hpp"

using namespace spikecpc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "spikecpc_test_data";
  fs::create_directories(dir);
  return dir;
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

// Crafts an IDX pair with the given magics/counts, pixels all `fill`.
void craft_idx(const fs::path& img, const fs::path& lab, std::uint32_t img_magic,
               std::uint32_t lab_magic, int n_img, int n_lab, unsigned char fill,
               bool truncate_payload = false) {
  std::ofstream io(img, std::ios::binary);
  write_be32(io, img_magic);
  write_be32(io, n_img);
  write_be32(io, 28);
  write_be32(io, 28);
  const int payload = truncate_payload ? n_img * 784 - 10 : n_img * 784;
  for (int i = 0; i < payload; ++i) io.put(char(fill));
  std::ofstream lo(lab, std::ios::binary);
  write_be32(lo, lab_magic);
  write_be32(lo, n_lab);
  for (int i = 0; i < n_lab; ++i) lo.put(char(i % 10));
}

// Synthetic image list: `per_class` images per digit with distinctive pixels.
std::vector<MnistImage> synthetic_images(int per_class) {
  std::vector<MnistImage> images;
  for (int c = 0; c < 10; ++c) {
    for (int i = 0; i < per_class; ++i) {
      MnistImage img{};
      img.label = c;
      img.index = int(images.size());
      img.pixels[c * 10 + i % 10] = 1.0f;
      images.push_back(img);
    }
  }
  return images;
}

// Independent oracle for the modular-continuation predicate.
bool is_true_continuation(const SequencePair& p) {
  for (int t = 0; t < kContextLen - 1; ++t) {
    if (p.context_digits[t + 1] != (p.context_digits[t] + 1) % 10) return false;
  }
  for (int t = 0; t < kTargetLen; ++t) {
    if (p.target_digits[t] != (p.context_digits[3] + 1 + t) % 10) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("load_idx round trip preserves bytes and order") {
  const auto dir = temp_dir();
  auto images = synthetic_images(3);
  images[5].pixels[100] = 128.0f / 255.0f;
  write_idx(images, (dir / "imgs").string(), (dir / "labs").string());
  const auto loaded = load_idx((dir / "imgs").string(), (dir / "labs").string());
  REQUIRE(loaded.size() == images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    CHECK(loaded[i].label == images[i].label);
    CHECK(loaded[i].index == int(i));
    for (int p = 0; p < kImagePixels; ++p) {
      CHECK(loaded[i].pixels[p] == doctest::Approx(images[i].pixels[p]).epsilon(1e-9));
    }
  }
}

TEST_CASE("load_idx rejects bad magic") {
  const auto dir = temp_dir();
  craft_idx(dir / "bad_img", dir / "bad_lab", 2049, 2049, 2, 2, 0);
  CHECK_THROWS_AS(load_idx((dir / "bad_img").string(), (dir / "bad_lab").string()), FormatError);
}

TEST_CASE("load_idx rejects count mismatch") {
  const auto dir = temp_dir();
  craft_idx(dir / "mm_img", dir / "mm_lab", 2051, 2049, 3, 2, 0);
  CHECK_THROWS_AS(load_idx((dir / "mm_img").string(), (dir / "mm_lab").string()),
                  ConsistencyError);
}

TEST_CASE("load_idx rejects truncated payload") {
  const auto dir = temp_dir();
  craft_idx(dir / "tr_img", dir / "tr_lab", 2051, 2049, 2, 2, 0, /*truncate=*/true);
  CHECK_THROWS_AS(load_idx((dir / "tr_img").string(), (dir / "tr_lab").string()), IoError);
}

TEST_CASE("pixel byte 255 maps to exactly 1.0") {
  const auto dir = temp_dir();
  craft_idx(dir / "one_img", dir / "one_lab", 2051, 2049, 1, 1, 255);
  const auto loaded = load_idx((dir / "one_img").string(), (dir / "one_lab").string());
  REQUIRE(loaded.size() == 1);
  for (int p = 0; p < kImagePixels; ++p) CHECK(loaded[0].pixels[p] == 1.0f);
}

TEST_CASE("build_subset stratifies exactly") {
  const auto images = synthetic_images(40);
  const auto subset = build_subset(images, 25, 123);
  CHECK(subset.images.size() == 250);
  const auto hist = subset.class_histogram();
  for (int c = 0; c < 10; ++c) CHECK(hist[c] == 25);

  // no duplicates (sampling without replacement)
  std::set<int> indices;
  for (const auto& img : subset.images) indices.insert(img.index);
  CHECK(indices.size() == subset.images.size());
}

TEST_CASE("build_subset is deterministic and seed sensitive") {
  const auto images = synthetic_images(40);
  const auto a = build_subset(images, 25, 7);
  const auto b = build_subset(images, 25, 7);
  const auto c = build_subset(images, 25, 8);
  REQUIRE(a.images.size() == b.images.size());
  bool identical = true;
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    identical = identical && a.images[i].index == b.images[i].index;
  }
  CHECK(identical);
  bool differs = false;
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    differs = differs || a.images[i].index != c.images[i].index;
  }
  CHECK(differs);
}

TEST_CASE("build_subset rejects insufficient classes") {
  const auto images = synthetic_images(10);
  CHECK_THROWS_AS(build_subset(images, 11, 1), CapacityError);
}

TEST_CASE("subset dump is byte-stable") {
  const auto images = synthetic_images(5);
  const auto subset = build_subset(images, 3, 99);
  const auto dir = temp_dir();
  dump_subset(subset, (dir / "s1.tsv").string());
  dump_subset(subset, (dir / "s2.tsv").string());
  std::ifstream f1(dir / "s1.tsv"), f2(dir / "s2.tsv");
  std::stringstream b1, b2;
  b1 << f1.rdbuf();
  b2 << f2.rdbuf();
  CHECK(b1.str() == b2.str());
  CHECK(b1.str().rfind("spikecpc_subset v1", 0) == 0);
}

TEST_CASE("make_pair positive continuation, with wrap") {
  const auto images = synthetic_images(8);
  const auto subset = build_subset(images, 8, 1);
  PairSampler sampler(subset);
  Rng rng(4);

  const auto p1 = sampler.make_pair(1, 1, rng);
  CHECK(p1.context_digits == std::array<int, 4>{1, 2, 3, 4});
  CHECK(p1.target_digits == std::array<int, 4>{5, 6, 7, 8});
  for (int t = 0; t < 4; ++t) {
    CHECK(subset.images[p1.context_image_idx[t]].label == p1.context_digits[t]);
    CHECK(subset.images[p1.target_image_idx[t]].label == p1.target_digits[t]);
  }

  const auto p7 = sampler.make_pair(7, 1, rng);
  CHECK(p7.context_digits == std::array<int, 4>{7, 8, 9, 0});
  CHECK(p7.target_digits == std::array<int, 4>{1, 2, 3, 4});
}

TEST_CASE("make_pair negatives break the continuation") {
  const auto images = synthetic_images(8);
  const auto subset = build_subset(images, 8, 1);
  PairSampler sampler(subset);
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto p = sampler.make_pair(1, 0, rng);
    CHECK(p.target_digits != std::array<int, 4>{5, 6, 7, 8});
    for (int t = 0; t < 4; ++t) {
      CHECK(subset.images[p.target_image_idx[t]].label == p.target_digits[t]);
    }
  }
}

TEST_CASE("pair soundness against the oracle") {
  const auto images = synthetic_images(8);
  const auto subset = build_subset(images, 8, 1);
  PairSampler sampler(subset);
  Rng rng(21);
  const auto pairs = sampler.generate(300, 300, rng);
  for (const auto& p : pairs) {
    if (p.label == 1) {
      CHECK(is_true_continuation(p));
    } else {
      CHECK(!is_true_continuation(p));
    }
  }
}

TEST_CASE("no-wrap mode restricts start digits") {
  const auto images = synthetic_images(8);
  const auto subset = build_subset(images, 8, 1);
  PairSampler sampler(subset, /*wrap=*/false);
  CHECK(sampler.start_digit_count() == 3);
  Rng rng(2);
  const auto pairs = sampler.generate(100, 0, rng);
  for (const auto& p : pairs) {
    CHECK(p.context_digits[0] <= 2);
    // never wraps: digits strictly increase
    for (int t = 0; t < 3; ++t) CHECK(p.context_digits[t] < p.context_digits[t + 1]);
  }
}

TEST_CASE("generate is deterministic per seed") {
  const auto images = synthetic_images(8);
  const auto subset = build_subset(images, 8, 1);
  PairSampler sampler(subset);
  Rng r1(77), r2(77);
  const auto a = sampler.generate(50, 50, r1);
  const auto b = sampler.generate(50, 50, r2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].context_image_idx == b[i].context_image_idx);
    CHECK(a[i].target_image_idx == b[i].target_image_idx);
  }
  const auto dir = temp_dir();
  dump_pairs(a, (dir / "p1.tsv").string());
  dump_pairs(b, (dir / "p2.tsv").string());
  std::ifstream f1(dir / "p1.tsv"), f2(dir / "p2.tsv");
  std::stringstream b1, b2;
  b1 << f1.rdbuf();
  b2 << f2.rdbuf();
  CHECK(b1.str() == b2.str());
}

TEST_CASE("split_positions holds out a per-class slice") {
  const auto images = synthetic_images(20);
  const auto subset = build_subset(images, 20, 5);
  std::vector<int> train_pos, val_pos;
  split_positions(subset, 0.1, train_pos, val_pos);
  CHECK(train_pos.size() == 180);
  CHECK(val_pos.size() == 20);
  std::set<int> all(train_pos.begin(), train_pos.end());
  for (int v : val_pos) CHECK(all.insert(v).second);  // disjoint
  CHECK(all.size() == subset.images.size());
}

TEST_CASE("batch composition is exact and partial batches are dropped") {
  const auto images = synthetic_images(8);
  const auto subset = build_subset(images, 8, 1);
  PairSampler sampler(subset);
  Rng rng(5);

  SUBCASE("320+320 at 32+32 gives 10 batches of 64") {
    const auto pairs = sampler.generate(320, 320, rng);
    const auto batches = make_batches(pairs, 32, 32, rng);
    REQUIRE(batches.size() == 10);
    for (const auto& batch : batches) {
      CHECK(batch.size() == 64);
      int pos = 0;
      for (int idx : batch) pos += pairs[idx].label;
      CHECK(pos == 32);
    }
  }

  SUBCASE("validation pools of 10+10 give one batch of 20") {
    const auto pairs = sampler.generate(10, 10, rng);
    const auto batches = make_batches(pairs, 10, 10, rng);
    REQUIRE(batches.size() == 1);
    CHECK(batches[0].size() == 20);
  }

  SUBCASE("33+32 at 32+32 gives one batch, remainder dropped") {
    const auto pairs = sampler.generate(33, 32, rng);
    const auto batches = make_batches(pairs, 32, 32, rng);
    REQUIRE(batches.size() == 1);
    CHECK(batches[0].size() == 64);
  }

  SUBCASE("epoch order reshuffles") {
    const auto pairs = sampler.generate(64, 64, rng);
    const auto b1 = make_batches(pairs, 32, 32, rng);
    const auto b2 = make_batches(pairs, 32, 32, rng);
    CHECK(b1 != b2);
  }
}
