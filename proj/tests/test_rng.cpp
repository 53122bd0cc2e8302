// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "reprforge/rng.hpp"

using namespace reprforge;

TEST_CASE("rng streams are deterministic and state round-trips") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  const std::uint64_t state = a.state();
  const double next = a.uniform();
  Rng c(0);
  c.set_state(state);
  CHECK(c.uniform() == next);
}

TEST_CASE("derived streams differ per tag") {
  Rng a(Rng::mix(7, 1, 0));
  Rng b(Rng::mix(7, 1, 1));
  CHECK(a.next_u64() != b.next_u64());
}

TEST_CASE("uniform and uniform_int ranges") {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const auto k = rng.uniform_int(7);
    CHECK(k >= 0);
    CHECK(k < 7);
  }
}

TEST_CASE("normal and beta have sane moments") {
  Rng rng(10);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.05);

  // Beta(a,a) has mean 1/2 and var 1/(8a+4)
  for (double alpha : {0.2, 1.0, 2.0}) {
    double bsum = 0, bsq = 0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.beta(alpha, alpha);
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
      bsum += x;
      bsq += x * x;
    }
    const double mean = bsum / n;
    const double var = bsq / n - mean * mean;
    CHECK(std::abs(mean - 0.5) < 0.02);
    CHECK(std::abs(var - 1.0 / (8 * alpha + 4)) < 0.02);
  }
}

TEST_CASE("shuffle is a seeded permutation") {
  Rng a(11), b(11);
  std::vector<int> va{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<int> vb = va;
  a.shuffle(va);
  b.shuffle(vb);
  CHECK(va == vb);
  std::vector<int> sorted = va;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}
