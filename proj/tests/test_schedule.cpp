// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "reprforge/errors.hpp"
#include "reprforge/schedule.hpp"

using namespace reprforge;

TEST_CASE("cosine schedule with warmup") {
  ScheduleSpec spec;
  spec.kind = ScheduleKind::kCosineWarmup;
  spec.warmup_epochs = 10;
  spec.total_epochs = 50;
  spec.lr_peak = 0.4;
  spec.lr_start = 0.04;
  spec.eta_min = 0.004;
  spec.validate();

  SUBCASE("endpoints are exact") {
    CHECK(lr_at(0, spec) == spec.lr_start);
    CHECK(lr_at(10, spec) == spec.lr_peak);
    CHECK(lr_at(50, spec) == doctest::Approx(spec.eta_min).epsilon(1e-15));
  }
  SUBCASE("continuous at the warmup boundary") {
    const double before = spec.lr_start + (spec.lr_peak - spec.lr_start) * 9.0 / 10.0;
    CHECK(std::abs(lr_at(9, spec) - before) <= 1e-12);
    CHECK(std::abs(lr_at(10, spec) - spec.lr_peak) <= 1e-12);
  }
  SUBCASE("cosine midpoint is the arithmetic mean") {
    CHECK(std::abs(lr_at(30, spec) - (spec.eta_min + 0.5 * (spec.lr_peak - spec.eta_min))) <=
          1e-12);
  }
  SUBCASE("monotone decay after warmup") {
    double prev = lr_at(10, spec);
    for (int e = 11; e <= 50; ++e) {
      const double cur = lr_at(e, spec);
      CHECK(cur <= prev);
      prev = cur;
    }
  }
  SUBCASE("epoch out of range") {
    CHECK_THROWS_AS(lr_at(-1, spec), EpochOutOfRange);
    CHECK_THROWS_AS(lr_at(51, spec), EpochOutOfRange);
  }
}

TEST_CASE("degenerate warmup gives a pure cosine") {
  ScheduleSpec spec;
  spec.kind = ScheduleKind::kCosineWarmup;
  spec.warmup_epochs = 0;
  spec.total_epochs = 20;
  spec.lr_peak = 1.0;
  spec.eta_min = 0.0;
  spec.validate();
  CHECK(lr_at(0, spec) == doctest::Approx(1.0));
  CHECK(lr_at(10, spec) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lr_at(20, spec) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("constant schedule") {
  ScheduleSpec spec;
  spec.kind = ScheduleKind::kConstant;
  spec.lr_peak = 0.05;
  for (int e : {0, 3, 1000}) CHECK(lr_at(e, spec) == 0.05);
}

TEST_CASE("schedule validation") {
  ScheduleSpec spec;
  spec.kind = ScheduleKind::kCosineWarmup;
  spec.warmup_epochs = 5;
  spec.total_epochs = 5;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec.total_epochs = 10;
  spec.lr_start = 1.0;
  spec.lr_peak = 0.1;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}
