// SPDX-License-Identifier: Apache-2.0
#include "reprforge/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "reprforge/errors.hpp"

namespace reprforge {

namespace {

constexpr char kMagic[4] = {'D', 'O', 'R', 'A'};
constexpr std::uint32_t kVersion = 1;

std::string u64_to_hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

std::uint64_t hex_to_u64(const std::string& s) {
  std::uint64_t v = 0;
  std::istringstream is(s);
  is >> std::hex >> v;
  if (is.fail()) throw FormatError("checkpoint: bad rng_state field");
  return v;
}

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json header;
  header["config"] = ckpt.config_yaml;
  header["epoch"] = ckpt.epoch;
  header["optim_step"] = ckpt.optim_step;
  header["rng_state"] = u64_to_hex(ckpt.rng_state);

  nlohmann::json table = nlohmann::json::array();
  std::int64_t offset = 0;
  for (const auto& [name, blob] : ckpt.tensors) {
    nlohmann::json entry;
    entry["name"] = name;
    entry["shape"] = blob.shape;
    entry["offset"] = offset;
    entry["count"] = blob.data.size();
    table.push_back(entry);
    offset += static_cast<std::int64_t>(blob.data.size());
  }
  header["tensors"] = table;
  const std::string header_str = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_checkpoint: cannot open " + path);
  os.write(kMagic, 4);
  const std::uint32_t version = kVersion;
  os.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint64_t header_len = header_str.size();
  os.write(reinterpret_cast<const char*>(&header_len), 8);
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& [name, blob] : ckpt.tensors)
    os.write(reinterpret_cast<const char*>(blob.data.data()),
             static_cast<std::streamsize>(blob.data.size() * sizeof(double)));
  if (!os) throw IoError("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_checkpoint: cannot open " + path);

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("load_checkpoint: bad magic in " + path);
  std::uint32_t version = 0;
  is.read(reinterpret_cast<char*>(&version), 4);
  if (!is || version != kVersion)
    throw FormatError("load_checkpoint: unsupported version " + std::to_string(version));
  std::uint64_t header_len = 0;
  is.read(reinterpret_cast<char*>(&header_len), 8);
  if (!is) throw CorruptTensor("load_checkpoint: truncated header length");

  std::string header_str(header_len, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (static_cast<std::uint64_t>(is.gcount()) != header_len)
    throw CorruptTensor("load_checkpoint: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception&) {
    throw FormatError("load_checkpoint: unreadable header in " + path);
  }

  Checkpoint ckpt;
  std::map<std::string, std::int64_t> offsets;
  try {
    ckpt.config_yaml = header.at("config").get<std::string>();
    ckpt.epoch = header.at("epoch").get<int>();
    ckpt.optim_step = header.at("optim_step").get<std::int64_t>();
    ckpt.rng_state = hex_to_u64(header.at("rng_state").get<std::string>());
    for (const auto& entry : header.at("tensors")) {
      const std::string name = entry.at("name").get<std::string>();
      TensorBlob blob;
      blob.shape = entry.at("shape").get<std::vector<int>>();
      const std::size_t count = entry.at("count").get<std::size_t>();
      std::int64_t expected = 1;
      for (int e : blob.shape) expected *= e;
      if (expected != static_cast<std::int64_t>(count))
        throw CorruptTensor("load_checkpoint: tensor '" + name + "' count/shape mismatch");
      blob.data.resize(count);
      offsets[name] = entry.at("offset").get<std::int64_t>();
      ckpt.tensors.emplace(name, std::move(blob));
    }
  } catch (const nlohmann::json::exception&) {
    throw FormatError("load_checkpoint: malformed header fields in " + path);
  }

  const std::int64_t payload_start = 16 + static_cast<std::int64_t>(header_len);
  for (auto& [name, blob] : ckpt.tensors) {
    is.clear();
    is.seekg(payload_start + offsets.at(name) * static_cast<std::int64_t>(sizeof(double)));
    is.read(reinterpret_cast<char*>(blob.data.data()),
            static_cast<std::streamsize>(blob.data.size() * sizeof(double)));
    if (static_cast<std::size_t>(is.gcount()) != blob.data.size() * sizeof(double))
      throw CorruptTensor("load_checkpoint: truncated payload for tensor '" + name + "'");
  }
  return ckpt;
}

} // namespace reprforge
