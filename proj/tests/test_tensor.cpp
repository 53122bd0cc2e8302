// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "reprforge/errors.hpp"
#include "reprforge/rng.hpp"
#include "reprforge/tensor.hpp"

using namespace reprforge;

namespace {

std::vector<double> vec(const Tensor& t) {
  return {t.values().begin(), t.values().end()};
}

} // namespace

TEST_CASE("matmul basics") {
  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  Tensor identity = Tensor::from_data({2, 2}, {1, 0, 0, 1});
  CHECK(vec(matmul(a, identity)) == std::vector<double>{1, 2, 3, 4});

  Tensor b = Tensor::from_data({2, 2}, {5, 6, 7, 8});
  CHECK(vec(matmul(a, b)) == std::vector<double>{19, 22, 43, 50});

  Tensor bad = Tensor::from_data({2, 3}, {0, 0, 0, 0, 0, 0});
  CHECK_THROWS_AS(matmul(bad, bad), ShapeMismatch);

  // a . b^T agrees with explicit transpose
  Tensor bt = Tensor::from_data({2, 2}, {5, 7, 6, 8});
  CHECK(vec(matmul_nt(a, bt)) == vec(matmul(a, b)));
}

TEST_CASE("conv2d examples") {
  Tensor x = Tensor::from_data({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor k1 = Tensor::from_data({1, 1, 1, 1}, {1});
  CHECK(vec(conv2d(x, k1, 1, 0)) == vec(x));

  Tensor x2 = Tensor::from_data({1, 2, 2}, {1, 2, 3, 4});
  Tensor kones = Tensor::from_data({1, 1, 2, 2}, {1, 1, 1, 1});
  Tensor y = conv2d(x2, kones, 1, 0);
  CHECK(y.shape() == std::vector<int>{1, 1, 1});
  CHECK(y.values()[0] == doctest::Approx(10.0));

  Tensor x3 = Tensor::from_data({3, 2, 2}, std::vector<double>(12, 1.0));
  CHECK_THROWS_AS(conv2d(x3, kones, 1, 0), ShapeMismatch);

  // output geometry with stride and padding
  Tensor x4 = Tensor::from_data({1, 5, 5}, std::vector<double>(25, 1.0));
  Tensor k3 = Tensor::from_data({2, 1, 3, 3}, std::vector<double>(18, 1.0));
  CHECK(conv2d(x4, k3, 2, 1).shape() == std::vector<int>{2, 3, 3});
}

TEST_CASE("softmax rows") {
  Tensor flat = softmax(Tensor::from_data({3}, {0, 0, 0}));
  for (double v : flat.values()) CHECK(v == doctest::Approx(1.0 / 3));

  Tensor big = softmax(Tensor::from_data({2}, {1000, 0}));
  CHECK(big.values()[0] == doctest::Approx(1.0));
  CHECK(big.values()[1] == doctest::Approx(0.0));
  CHECK(std::isfinite(big.values()[0]));

  Tensor p = softmax(Tensor::from_data({3}, {1, 2, 3}));
  CHECK(p.values()[0] == doctest::Approx(0.0900305731703804).epsilon(1e-10));
  CHECK(p.values()[1] == doctest::Approx(0.2447284710547976).epsilon(1e-10));
  CHECK(p.values()[2] == doctest::Approx(0.6652409557748218).epsilon(1e-10));

  // rows sum to 1 within 1e-12 for inputs up to magnitude 1e3
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> data(24);
    for (auto& v : data) v = rng.uniform(-1e3, 1e3);
    Tensor rows = softmax(Tensor::from_data({4, 6}, data));
    for (int r = 0; r < 4; ++r) {
      double s = 0.0;
      for (int c = 0; c < 6; ++c) s += rows.values()[static_cast<std::size_t>(r * 6 + c)];
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("l2_normalize") {
  Tensor v = l2_normalize(Tensor::from_data({2}, {3, 4}));
  CHECK(v.values()[0] == doctest::Approx(0.6));
  CHECK(v.values()[1] == doctest::Approx(0.8));

  CHECK(vec(l2_normalize(Tensor::from_data({2}, {1, 0}))) == std::vector<double>{1, 0});
  CHECK(vec(l2_normalize(Tensor::from_data({2}, {0, 0}), 1e-12)) == std::vector<double>{0, 0});
}

TEST_CASE("backward populates gradients") {
  SUBCASE("sum gives ones") {
    Tensor x = Tensor::from_data({2, 3}, {1, -2, 3, 4, -5, 6}, true);
    backward(sum(x));
    for (double g : x.grad()) CHECK(g == 1.0);
  }
  SUBCASE("sum of squares") {
    Tensor x = Tensor::from_data({3}, {1, 2, 3}, true);
    backward(sum(mul(x, x)));
    CHECK(vec(Tensor::from_data({3}, {x.grad()[0], x.grad()[1], x.grad()[2]})) ==
          std::vector<double>{2, 4, 6});
  }
  SUBCASE("errors") {
    Tensor x = Tensor::from_data({3}, {1, 2, 3}, true);
    CHECK_THROWS_AS(backward(add(x, x)), NotScalar);
    Tensor leaf = Tensor::scalar(1.0, true);
    CHECK_THROWS_AS(backward(leaf), DetachedRoot);
    Tensor constant = sum(Tensor::from_data({2}, {1, 2}));
    CHECK_THROWS_AS(backward(constant), DetachedRoot);
  }
  SUBCASE("diamond graph accumulates both paths") {
    // y = sum(a*a + a) : dy/da = 2a + 1
    Tensor a = Tensor::from_data({2}, {1.5, -0.5}, true);
    Tensor shared = mul(a, a);
    backward(sum(add(shared, a)));
    CHECK(a.grad()[0] == doctest::Approx(4.0));
    CHECK(a.grad()[1] == doctest::Approx(0.0));
  }
  SUBCASE("tape is cleared after backward") {
    Tensor x = Tensor::from_data({2}, {1, 2}, true);
    Tensor loss = sum(mul(x, x));
    backward(loss);
    CHECK_THROWS_AS(backward(loss), DetachedRoot);
  }
  SUBCASE("forward+backward is bitwise repeatable") {
    auto run = [] {
      Tensor x = Tensor::from_data({4}, {0.3, -1.7, 2.9, 0.01}, true);
      Tensor y = sum(mul(exp(mul_scalar(x, 0.5)), relu(x)));
      backward(y);
      std::vector<double> out{y.values()[0]};
      out.insert(out.end(), x.grad().begin(), x.grad().end());
      return out;
    };
    CHECK(run() == run());
  }
}

TEST_CASE("maxpool2x2 selects and routes") {
  Tensor x = Tensor::from_data({1, 2, 4}, {1, 5, 2, 2, 3, 4, 8, 1}, true);
  Tensor y = maxpool2x2(x);
  CHECK(y.shape() == std::vector<int>{1, 1, 2});
  CHECK(vec(y) == std::vector<double>{5, 8});
  backward(sum(y));
  CHECK(vec(Tensor::from_data({8}, {x.grad()[0], x.grad()[1], x.grad()[2], x.grad()[3],
                                    x.grad()[4], x.grad()[5], x.grad()[6], x.grad()[7]})) ==
        std::vector<double>{0, 1, 0, 0, 0, 0, 1, 0});
}

TEST_CASE("indexing ops") {
  Tensor x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(vec(gather(x, {2, 0})) == std::vector<double>{3, 4});
  CHECK_THROWS_AS(gather(x, {3, 0}), IndexOutOfRange);

  Tensor rows = take_rows(x, {1, 1, 0});
  CHECK(rows.shape() == std::vector<int>{3, 3});
  CHECK(vec(rows) == std::vector<double>{4, 5, 6, 4, 5, 6, 1, 2, 3});

  CHECK(reshape(x, {3, 2}).shape() == std::vector<int>{3, 2});
  CHECK_THROWS_AS(reshape(x, {4, 2}), ShapeMismatch);
}

TEST_CASE("acos_clamped is finite at the boundary") {
  Tensor x = Tensor::from_data({3}, {-1.0, 1.0, 0.5}, true);
  Tensor y = acos_clamped(x);
  for (double v : y.values()) CHECK(std::isfinite(v));
  backward(sum(y));
  CHECK(x.grad()[0] == 0.0);  // clamped: zero slope outside the interval
  CHECK(x.grad()[1] == 0.0);
  CHECK(x.grad()[2] == doctest::Approx(-1.0 / std::sqrt(1.0 - 0.25)));
}
