#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "spikecpc/rng.hpp"

using spikecpc::Rng;

TEST_CASE("same seed reproduces the stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform values live in [0,1)") {
  Rng rng(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  CHECK(lo < 0.001);
  CHECK(hi > 0.999);
}

TEST_CASE("uniform_int covers the full range uniformly") {
  Rng rng(3);
  std::vector<int> counts(10, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[rng.uniform_int(10)]++;
  for (int c : counts) {
    CHECK(c > n / 10 - 4 * int(std::sqrt(n * 0.1)));
    CHECK(c < n / 10 + 4 * int(std::sqrt(n * 0.1)));
  }
}

TEST_CASE("normal moments") {
  Rng rng(11);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("poisson edge cases and moments") {
  Rng rng(5);
  CHECK(rng.poisson(0.0) == 0);
  CHECK(rng.poisson(-1.0) == 0);

  const double lambda = 4.5;
  const int n = 100000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double k = double(rng.poisson(lambda));
    sum += k;
    sq += k * k;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  const double se = std::sqrt(lambda / n);
  CHECK(std::abs(mean - lambda) < 4 * se);
  CHECK(std::abs(var - lambda) < 0.15);
}

TEST_CASE("derive_seed is order independent") {
  const std::uint64_t a = spikecpc::derive_seed(123, 0);
  const std::uint64_t b = spikecpc::derive_seed(123, 1);
  CHECK(a != b);
  CHECK(a == spikecpc::derive_seed(123, 0));
}

TEST_CASE("shuffle is a permutation and seed-stable") {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  Rng rng(9);
  rng.shuffle(v);
  std::vector<int> w = v;
  std::sort(w.begin(), w.end());
  for (int i = 0; i < 50; ++i) CHECK(w[i] == i);

  std::vector<int> v2(50);
  for (int i = 0; i < 50; ++i) v2[i] = i;
  Rng rng2(9);
  rng2.shuffle(v2);
  CHECK(v == v2);
}
