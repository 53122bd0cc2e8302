// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "reprforge/encoder.hpp"
#include "reprforge/errors.hpp"

using namespace reprforge;

namespace {

EncoderConfig mlp_config() {
  EncoderConfig cfg;
  cfg.kind = EncoderKind::kMlp;
  cfg.in_channels = 1;
  cfg.in_height = 1;
  cfg.in_width = 2;
  cfg.hidden = {2};
  cfg.embed_dim = 2;
  return cfg;
}

} // namespace

TEST_CASE("encode with a zeroed final layer returns the bias row") {
  EncoderConfig cfg = mlp_config();
  Rng rng(1);
  ModelParams params = init_params(cfg, 0, false, rng);
  auto wv = params.encoder.at("out.weight").values_mut();
  std::fill(wv.begin(), wv.end(), 0.0);
  auto bv = params.encoder.at("out.bias").values_mut();
  bv[0] = 0.25;
  bv[1] = -0.75;

  Tensor x = Tensor::from_data({3, 1, 1, 2}, {1, 2, 3, 4, 5, 6});
  Tensor z = encode(cfg, params, x);
  REQUIRE(z.shape() == std::vector<int>{3, 2});
  for (int i = 0; i < 3; ++i) {
    CHECK(z.values()[static_cast<std::size_t>(2 * i)] == 0.25);
    CHECK(z.values()[static_cast<std::size_t>(2 * i + 1)] == -0.75);
  }
}

TEST_CASE("mlp encode reproduces a hand-computed affine chain") {
  // 1-pixel image, one hidden unit, identity-like weights
  EncoderConfig cfg;
  cfg.kind = EncoderKind::kMlp;
  cfg.in_channels = 1;
  cfg.in_height = 1;
  cfg.in_width = 1;
  cfg.hidden = {1};
  cfg.embed_dim = 2;
  Rng rng(2);
  ModelParams params = init_params(cfg, 0, false, rng);
  params.encoder.at("fc0.weight").values_mut()[0] = 2.0;  // h = relu(2x + 1)
  params.encoder.at("fc0.bias").values_mut()[0] = 1.0;
  auto ow = params.encoder.at("out.weight").values_mut();
  ow[0] = 1.0;   // z0 = h + 0.5
  ow[1] = -3.0;  // z1 = -3h - 0.25
  auto ob = params.encoder.at("out.bias").values_mut();
  ob[0] = 0.5;
  ob[1] = -0.25;

  Tensor x = Tensor::from_data({1, 1, 1, 1}, {0.75});
  Tensor z = encode(cfg, params, x);
  const double h = 2.0 * 0.75 + 1.0;
  CHECK(z.values()[0] == doctest::Approx(h + 0.5).epsilon(1e-15));
  CHECK(z.values()[1] == doctest::Approx(-3.0 * h - 0.25).epsilon(1e-15));
}

TEST_CASE("batch shape contract and input validation") {
  EncoderConfig cfg = mlp_config();
  Rng rng(3);
  ModelParams params = init_params(cfg, 0, false, rng);
  Tensor x = Tensor::from_data({4, 1, 1, 2}, std::vector<double>(8, 0.5));
  CHECK(encode(cfg, params, x).shape() == std::vector<int>{4, 2});

  Tensor bad = Tensor::from_data({4, 1, 2, 2}, std::vector<double>(16, 0.5));
  CHECK_THROWS_AS(encode(cfg, params, bad), ShapeMismatch);
}

TEST_CASE("cnn encode produces the right shapes and a conv trace") {
  EncoderConfig cfg;
  cfg.kind = EncoderKind::kCnn;
  cfg.in_channels = 1;
  cfg.in_height = 8;
  cfg.in_width = 8;
  cfg.hidden = {4, 6};
  cfg.embed_dim = 5;
  Rng rng(4);
  ModelParams params = init_params(cfg, 3, true, rng);
  CHECK(params.encoder.at("conv0.weight").shape() == std::vector<int>{4, 1, 3, 3});
  CHECK(params.encoder.at("conv1.weight").shape() == std::vector<int>{6, 4, 3, 3});
  CHECK(params.encoder.at("out.weight").shape() == std::vector<int>{5, 6 * 2 * 2});

  Tensor x = Tensor::from_data({2, 1, 8, 8}, std::vector<double>(128, 0.25));
  ForwardTrace trace;
  Tensor z = encode(cfg, params, x, &trace);
  CHECK(z.shape() == std::vector<int>{2, 5});
  // trace holds the post-relu activation of the last conv, before pooling
  CHECK(trace.last_conv.shape() == std::vector<int>{2, 6, 4, 4});
  for (double v : trace.last_conv.values()) CHECK(v >= 0.0);
}

TEST_CASE("encode is deterministic for fixed params and input") {
  EncoderConfig cfg = mlp_config();
  Rng rng(5);
  ModelParams params = init_params(cfg, 0, false, rng);
  Tensor x = Tensor::from_data({2, 1, 1, 2}, {0.1, 0.9, 0.4, 0.6});
  const Tensor a = encode(cfg, params, x);
  const Tensor b = encode(cfg, params, x);
  CHECK(std::vector<double>(a.values().begin(), a.values().end()) ==
        std::vector<double>(b.values().begin(), b.values().end()));
}

TEST_CASE("classify") {
  ModelParams params;
  params.head["weight"] = Tensor::from_data({2, 2}, {2, 0, 0, 3});
  params.head["bias"] = Tensor::from_data({2}, {1, 1});
  Tensor z = Tensor::from_data({1, 2}, {1, 0});
  Tensor logits = classify(params, z);
  CHECK(logits.values()[0] == doctest::Approx(3.0));
  CHECK(logits.values()[1] == doctest::Approx(1.0));

  SUBCASE("identity head passes the embedding through") {
    ModelParams id;
    id.head["weight"] = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    id.head["bias"] = Tensor::from_data({2}, {0, 0});
    Tensor out = classify(id, z);
    CHECK(out.values()[0] == doctest::Approx(1.0));
    CHECK(out.values()[1] == doctest::Approx(0.0));
  }
  SUBCASE("dimension mismatch") {
    Tensor bad = Tensor::from_data({1, 3}, {1, 0, 0});
    CHECK_THROWS_AS(classify(params, bad), ShapeMismatch);
  }
}

TEST_CASE("cosine_logits") {
  ModelParams params;
  params.head["weight"] = Tensor::from_data({3, 2}, {1, 0, 0, 2, 1, 1});
  SUBCASE("alignment, orthogonality and the 45-degree case") {
    Tensor z = Tensor::from_data({2, 2}, {3, 0, 1, 1});
    Tensor cosines = cosine_logits(params, z);
    CHECK(cosines.values()[0] == doctest::Approx(1.0));           // parallel
    CHECK(cosines.values()[1] == doctest::Approx(0.0));           // orthogonal
    CHECK(cosines.values()[3] == doctest::Approx(1.0 / std::sqrt(2.0)));  // [1,1] vs [0,1]
  }
  SUBCASE("always within [-1, 1] on random inputs") {
    Rng rng(6);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> zd(8), wd(6);
      for (auto& v : zd) v = rng.uniform(-5, 5);
      for (auto& v : wd) v = rng.uniform(-5, 5);
      ModelParams p;
      p.head["weight"] = Tensor::from_data({3, 2}, wd);
      Tensor cosines = cosine_logits(p, Tensor::from_data({4, 2}, zd));
      for (double v : cosines.values()) {
        CHECK(v <= 1.0 + 1e-12);
        CHECK(v >= -1.0 - 1e-12);
      }
    }
  }
}

TEST_CASE("init_params draws within the fan-in bound and is seeded") {
  EncoderConfig cfg;
  cfg.kind = EncoderKind::kMlp;
  cfg.in_channels = 1;
  cfg.in_height = 4;
  cfg.in_width = 4;
  cfg.hidden = {8};
  cfg.embed_dim = 4;
  Rng rng_a(7);
  Rng rng_b(7);
  ModelParams a = init_params(cfg, 5, true, rng_a);
  ModelParams b = init_params(cfg, 5, true, rng_b);
  const double bound = std::sqrt(1.0 / 16.0);
  for (double v : a.encoder.at("fc0.weight").values()) {
    CHECK(v <= bound);
    CHECK(v >= -bound);
  }
  for (const auto& [name, t] : a.all()) {
    const auto& other = name.rfind("encoder/", 0) == 0 ? b.encoder.at(name.substr(8))
                                                       : b.head.at(name.substr(5));
    CHECK(std::vector<double>(t.values().begin(), t.values().end()) ==
          std::vector<double>(other.values().begin(), other.values().end()));
  }
}
