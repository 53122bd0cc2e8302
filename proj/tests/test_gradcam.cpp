// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "reprforge/errors.hpp"
#include "reprforge/gradcam.hpp"
#include "reprforge/image_io.hpp"
#include "reprforge/rng.hpp"
#include "reprforge/trainer.hpp"

using namespace reprforge;
namespace fs = std::filesystem;

namespace {

RunConfig cnn_config() {
  return parse_config(
      "task: classification\n"
      "model: {encoder: cnn, input: [1, 8, 8], hidden: [4], embed_dim: 6}\n"
      "data:\n"
      "  synthetic: {classes: 3, per_class: 8, image: [1, 8, 8], views_per_identity: 4, seed: 2}\n"
      "train: {epochs: 0, seed: 13}\n");
}

Tensor test_image(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> px(64);
  for (auto& v : px) v = rng.uniform();
  return Tensor::from_data({1, 8, 8}, px);
}

std::string read_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

} // namespace

TEST_CASE("gradcam contracts") {
  const RunConfig cfg = cnn_config();
  const TrainOutput out = train_run(cfg);
  const ModelParams params = params_from_checkpoint(out.checkpoint);
  const Tensor img = test_image(40);

  SUBCASE("values lie in [0,1] and the peak is 1 unless all-zero") {
    const Heatmap hm = gradcam(cfg, params, img, 1);
    CHECK(hm.height == 8);
    CHECK(hm.width == 8);
    double mx = 0.0;
    for (double v : hm.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      mx = std::max(mx, v);
    }
    CHECK((mx == doctest::Approx(1.0) || mx == 0.0));
  }
  SUBCASE("class out of range") {
    CHECK_THROWS_AS(gradcam(cfg, params, img, 3), ClassOutOfRange);
    CHECK_THROWS_AS(gradcam(cfg, params, img, -1), ClassOutOfRange);
  }
  SUBCASE("mlp encoder is rejected") {
    const RunConfig mlp = parse_config(
        "task: classification\n"
        "model: {encoder: mlp, input: [1, 8, 8], hidden: [4], embed_dim: 6}\n"
        "data:\n"
        "  synthetic: {classes: 3, per_class: 8, image: [1, 8, 8], views_per_identity: 4, seed: 2}\n"
        "train: {epochs: 0, seed: 13}\n");
    const TrainOutput mlp_out = train_run(mlp);
    CHECK_THROWS_AS(gradcam(mlp, params_from_checkpoint(mlp_out.checkpoint), img, 0),
                    WrongEncoderKind);
  }
  SUBCASE("a head row of zeros yields the all-zero map") {
    ModelParams zeroed = params_from_checkpoint(out.checkpoint);
    auto w = zeroed.head.at("weight").values_mut();
    std::fill(w.begin(), w.begin() + 6, 0.0);  // class-0 weights
    auto b = zeroed.head.at("bias").values_mut();
    b[0] = 0.0;
    const Heatmap hm = gradcam(cfg, zeroed, img, 0);
    for (double v : hm.values) CHECK(v == 0.0);
  }
  SUBCASE("invariant to a constant shift of all logits") {
    const Heatmap base = gradcam(cfg, params, img, 2);
    ModelParams shifted = params_from_checkpoint(out.checkpoint);
    for (auto& v : shifted.head.at("bias").values_mut()) v += 3.7;
    const Heatmap moved = gradcam(cfg, shifted, img, 2);
    REQUIRE(base.values.size() == moved.values.size());
    for (std::size_t i = 0; i < base.values.size(); ++i)
      CHECK(moved.values[i] == doctest::Approx(base.values[i]).epsilon(1e-12));
  }
  SUBCASE("checkpoint overload matches the explicit config path") {
    const Heatmap a = gradcam(cfg, params, img, 1);
    const Heatmap b = gradcam(out.checkpoint, img, 1);
    CHECK(a.values == b.values);
  }
}

TEST_CASE("bilinear upsampling keeps a dominant peak inside its source cell") {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const int sh = 4, sw = 4, scale = 4;
    std::vector<double> src(sh * sw);
    for (auto& v : src) v = rng.uniform(0.0, 0.5);
    const auto peak = static_cast<std::size_t>(rng.uniform_int(sh * sw));
    src[peak] = 1.0;
    const auto up = bilinear_upsample(src, sh, sw, sh * scale, sw * scale);

    const int sy = static_cast<int>(peak) / sw, sx = static_cast<int>(peak) % sw;
    const auto up_arg = static_cast<int>(
        std::max_element(up.begin(), up.end()) - up.begin());
    const int uy = up_arg / (sw * scale), ux = up_arg % (sw * scale);
    CHECK(uy / scale == sy);
    CHECK(ux / scale == sx);
  }
}

TEST_CASE("render_heatmap") {
  const RunConfig cfg = cnn_config();
  const TrainOutput out = train_run(cfg);
  const ModelParams params = params_from_checkpoint(out.checkpoint);
  const Tensor img = test_image(42);
  const auto dir = fs::temp_directory_path() / "reprforge_test_cam";
  fs::create_directories(dir);

  SUBCASE("an all-zero map renders the input image") {
    Heatmap zero;
    zero.height = 8;
    zero.width = 8;
    zero.values.assign(64, 0.0);
    const std::string path = (dir / "zero.png").string();
    render_heatmap(zero, img, path);
    const ImageU8 png = read_png(path);
    CHECK(png.height == 8);
    CHECK(png.width == 8);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        const auto expected = static_cast<unsigned char>(
            std::lround(img.values()[static_cast<std::size_t>(y * 8 + x)] * 255.0));
        for (int c = 0; c < 3; ++c)
          CHECK(png.pixels[static_cast<std::size_t>((y * 8 + x) * 3 + c)] == expected);
      }
  }
  SUBCASE("re-rendering is byte-identical") {
    const Heatmap hm = gradcam(cfg, params, img, 0);
    const std::string p1 = (dir / "a.png").string();
    const std::string p2 = (dir / "b.png").string();
    render_heatmap(hm, img, p1);
    render_heatmap(hm, img, p2);
    CHECK(read_bytes(p1) == read_bytes(p2));
  }
}
