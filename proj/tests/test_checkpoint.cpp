// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "reprforge/checkpoint.hpp"
#include "reprforge/errors.hpp"

using namespace reprforge;
namespace fs = std::filesystem;

namespace {

Checkpoint sample_checkpoint() {
  Checkpoint ckpt;
  ckpt.config_yaml = "task: classification\ntrain:\n  epochs: 3\n";
  ckpt.epoch = 3;
  ckpt.rng_state = 0xDEADBEEFCAFE1234ULL;
  ckpt.optim_step = 42;
  ckpt.tensors["params/encoder/fc0.weight"] =
      TensorBlob{{2, 3}, {0.1, -0.2, 0.3, 1e-300, -1.5, 2.25}};
  ckpt.tensors["params/head/weight"] = TensorBlob{{4, 2}, {1, 2, 3, 4, 5, 6, 7, 8}};
  ckpt.tensors["optim/momentum/encoder/fc0.weight"] = TensorBlob{{6}, {0, 0, 1, 2, 3, 4}};
  return ckpt;
}

std::string read_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

} // namespace

TEST_CASE("checkpoint round trip is exact") {
  const auto dir = fs::temp_directory_path() / "reprforge_test_ckpt";
  fs::create_directories(dir);
  const std::string path = (dir / "a.ckpt").string();

  const Checkpoint ckpt = sample_checkpoint();
  save_checkpoint(ckpt, path);
  const Checkpoint back = load_checkpoint(path);

  CHECK(back.config_yaml == ckpt.config_yaml);
  CHECK(back.epoch == ckpt.epoch);
  CHECK(back.rng_state == ckpt.rng_state);
  CHECK(back.optim_step == ckpt.optim_step);
  REQUIRE(back.tensors.size() == ckpt.tensors.size());
  for (const auto& [name, blob] : ckpt.tensors) {
    const auto& got = back.tensors.at(name);
    CHECK(got.shape == blob.shape);
    CHECK(got.data == blob.data);  // bitwise through the raw f64 payload
  }

  SUBCASE("save -> load -> save is byte-identical") {
    const std::string path2 = (dir / "b.ckpt").string();
    save_checkpoint(back, path2);
    CHECK(read_bytes(path) == read_bytes(path2));
  }
  SUBCASE("truncated payload is CorruptTensor") {
    const std::string bytes = read_bytes(path);
    const std::string cut = (dir / "cut.ckpt").string();
    std::ofstream os(cut, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 24));
    os.close();
    CHECK_THROWS_AS(load_checkpoint(cut), CorruptTensor);
  }
  SUBCASE("bad magic is FormatError") {
    std::string bytes = read_bytes(path);
    bytes[0] = 'X';
    const std::string bad = (dir / "bad.ckpt").string();
    std::ofstream os(bad, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    os.close();
    CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
  }
  SUBCASE("bad version is FormatError") {
    std::string bytes = read_bytes(path);
    bytes[4] = 99;
    const std::string bad = (dir / "badv.ckpt").string();
    std::ofstream os(bad, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    os.close();
    CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
  }
  SUBCASE("missing file is IoError") {
    CHECK_THROWS_AS(load_checkpoint((dir / "missing.ckpt").string()), IoError);
  }
}
