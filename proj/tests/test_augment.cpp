// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "reprforge/augment.hpp"
#include "reprforge/rng.hpp"

using namespace reprforge;

namespace {

Tensor ramp_image(int c, int h, int w) {
  std::vector<double> data(static_cast<std::size_t>(c) * h * w);
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = static_cast<double>(i) / static_cast<double>(data.size());
  return Tensor::from_data({c, h, w}, std::move(data));
}

std::vector<double> vec(const Tensor& t) {
  return {t.values().begin(), t.values().end()};
}

} // namespace

TEST_CASE("intensity schedule") {
  AugmentPlan plan;
  plan.aug_epoch = 10;

  SUBCASE("prog_learn ramps linearly") {
    plan.prog_learn = true;
    CHECK(intensity(0, plan) == doctest::Approx(0.0));
    CHECK(intensity(5, plan) == doctest::Approx(0.5));
    CHECK(intensity(10, plan) == doctest::Approx(1.0));
    CHECK(intensity(25, plan) == doctest::Approx(1.0));
  }
  SUBCASE("step schedule switches at aug_epoch") {
    plan.prog_learn = false;
    CHECK(intensity(9, plan) == doctest::Approx(0.0));
    CHECK(intensity(10, plan) == doctest::Approx(1.0));
  }
  SUBCASE("aug_epoch=0 with prog_learn is full intensity immediately") {
    plan.prog_learn = true;
    plan.aug_epoch = 0;
    CHECK(intensity(0, plan) == doctest::Approx(1.0));
  }
  SUBCASE("non-decreasing in epoch") {
    for (bool prog : {false, true}) {
      plan.prog_learn = prog;
      plan.aug_epoch = 7;
      double prev = 0.0;
      for (int e = 0; e < 20; ++e) {
        const double i = intensity(e, plan);
        CHECK(i >= prev);
        prev = i;
      }
    }
  }
}

TEST_CASE("cutout") {
  Tensor img = ramp_image(1, 8, 8);

  SUBCASE("size zero is the identity") {
    CHECK(vec(cutout(img, 3, 3, 0, 0.0)) == vec(img));
  }
  SUBCASE("corner clipping leaves exactly a 2x2 block") {
    Tensor out = cutout(img, 0, 0, 4, -1.0);
    int changed = 0;
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        const auto idx = static_cast<std::size_t>(y * 8 + x);
        if (out.values()[idx] != img.values()[idx]) {
          ++changed;
          CHECK(out.values()[idx] == -1.0);
          CHECK(y < 2);
          CHECK(x < 2);
        }
      }
    CHECK(changed == 4);
  }
  SUBCASE("oversized square covers the whole image") {
    Tensor out = cutout(img, 4, 4, 16, 0.5);
    for (double v : out.values()) CHECK(v == 0.5);
  }
  SUBCASE("changed pixels equal the clipped-square oracle") {
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
      const int row = static_cast<int>(rng.uniform_int(8));
      const int col = static_cast<int>(rng.uniform_int(8));
      const int size = static_cast<int>(rng.uniform_int(9));
      Tensor out = cutout(img, row, col, size, -2.0);
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          const bool inside = size > 0 && y >= row - size / 2 && y < row - size / 2 + size &&
                              x >= col - size / 2 && x < col - size / 2 + size;
          const auto idx = static_cast<std::size_t>(y * 8 + x);
          if (inside) {
            CHECK(out.values()[idx] == -2.0);
          } else {
            CHECK(out.values()[idx] == img.values()[idx]);
          }
        }
    }
  }
}

TEST_CASE("random_crop") {
  Tensor img = ramp_image(2, 6, 6);

  SUBCASE("pad=0 is the identity") {
    Rng rng(32);
    CHECK(vec(random_crop(img, 0, rng)) == vec(img));
  }
  SUBCASE("offset (0,0) shifts the image down-right with a zero border") {
    Tensor out = random_crop_at(img, 1, 0, 0);
    const auto src = img.values();
    const auto dst = out.values();
    for (int ch = 0; ch < 2; ++ch)
      for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) {
          const double expect =
              (y == 0 || x == 0)
                  ? 0.0
                  : src[static_cast<std::size_t>((ch * 6 + y - 1) * 6 + (x - 1))];
          CHECK(dst[static_cast<std::size_t>((ch * 6 + y) * 6 + x)] == expect);
        }
  }
  SUBCASE("shape is preserved for any offset") {
    Rng rng(33);
    for (int t = 0; t < 10; ++t)
      CHECK(random_crop(img, 3, rng).shape() == img.shape());
  }
}

TEST_CASE("color_jitter") {
  SUBCASE("max_scale=0 is the identity") {
    Rng rng(34);
    Tensor img = ramp_image(3, 4, 4);
    CHECK(vec(color_jitter(img, 0.0, rng)) == vec(img));
  }
  SUBCASE("explicit factors scale and clamp") {
    Tensor img = Tensor::from_data({2, 1, 2}, {0.4, 0.4, 0.6, 0.6});
    Tensor out = scale_channels(img, {0.5, 2.0});
    CHECK(out.values()[0] == doctest::Approx(0.2));
    CHECK(out.values()[1] == doctest::Approx(0.2));
    CHECK(out.values()[2] == doctest::Approx(1.0));  // clamped
    CHECK(out.values()[3] == doctest::Approx(1.0));
  }
}

TEST_CASE("mixup_images") {
  Tensor a = Tensor::full({1, 2, 2}, 0.2);
  Tensor b = Tensor::full({1, 2, 2}, 0.8);
  CHECK(vec(mixup_images(a, b, 1.0)) == vec(a));
  CHECK(vec(mixup_images(a, b, 0.0)) == vec(b));
  const Tensor half = mixup_images(a, b, 0.5);
  for (double v : half.values()) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("pipeline preserves shape and pixel range and is reproducible") {
  AugmentPlan plan;
  plan.ops = {AugOp{AugKind::kRandomCrop, 2, 0, 0, 0, 0, 0},
              AugOp{AugKind::kHFlip, 0, 0.5, 0, 0, 0, 0},
              AugOp{AugKind::kColorJitter, 0, 0, 0.4, 0, 0, 0},
              AugOp{AugKind::kCutout, 0, 0, 0, 3, 0.0, 0}};
  plan.aug_epoch = 4;
  plan.prog_learn = true;
  plan.validate(8, 8);

  Tensor img = ramp_image(1, 8, 8);
  for (int epoch = 0; epoch < 8; ++epoch) {
    const double inten = intensity(epoch, plan);
    Rng rng(Rng::mix(99, static_cast<std::uint64_t>(epoch), 5));
    Tensor out = augment_sample(img, plan, inten, rng);
    CHECK(out.shape() == img.shape());
    for (double v : out.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    Rng rng2(Rng::mix(99, static_cast<std::uint64_t>(epoch), 5));
    CHECK(vec(augment_sample(img, plan, inten, rng2)) == vec(out));  // bitwise
  }
}
