// SPDX-License-Identifier: Apache-2.0
#include "reprforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include "reprforge/errors.hpp"
#include "reprforge/image_io.hpp"
#include "reprforge/rng.hpp"

namespace fs = std::filesystem;

namespace reprforge {

namespace {

constexpr char kMagic[4] = {'D', 'O', 'R', 'D'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw CorruptTensor("dataset: unexpected end of file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

Tensor Dataset::image(int i) const {
  const auto& s = samples[static_cast<std::size_t>(i)];
  return Tensor::from_data({channels, height, width}, s.pixels);
}

std::pair<Dataset, Dataset> Dataset::split(double val_fraction, std::uint64_t seed) const {
  if (val_fraction < 0.0 || val_fraction >= 1.0)
    throw ValidationError("data.val_fraction: must be in [0,1)");
  Dataset train, val;
  for (Dataset* d : {&train, &val}) {
    d->channels = channels;
    d->height = height;
    d->width = width;
    d->classes = classes;
  }
  if (val_fraction == 0.0) {
    train.samples = samples;
    return {train, val};
  }

  // Group by identity so every identity keeps views on both sides.
  std::map<int, std::vector<int>> by_identity;
  for (int i = 0; i < size(); ++i)
    by_identity[samples[static_cast<std::size_t>(i)].identity_id].push_back(i);

  for (auto& [identity, idx] : by_identity) {
    const int n = static_cast<int>(idx.size());
    int n_val = static_cast<int>(std::lround(val_fraction * n));
    n_val = std::clamp(n_val, n > 1 ? 1 : 0, n - 1);
    Rng rng(Rng::mix(seed, 0x5917u, static_cast<std::uint64_t>(identity)));
    rng.shuffle(idx);
    std::vector<int> val_idx(idx.begin(), idx.begin() + n_val);
    std::vector<int> train_idx(idx.begin() + n_val, idx.end());
    // Keep on-disk order stable inside each split.
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    for (int i : train_idx) train.samples.push_back(samples[static_cast<std::size_t>(i)]);
    for (int i : val_idx) val.samples.push_back(samples[static_cast<std::size_t>(i)]);
  }
  return {train, val};
}

void SyntheticSpec::validate() const {
  if (classes < 2) throw ValidationError("data.synthetic.classes: must be >= 2");
  if (per_class < 4) throw ValidationError("data.synthetic.per_class: must be >= 4");
  if (channels < 1 || height < 2 || width < 2)
    throw ValidationError("data.synthetic.image: extents too small");
  if (noise_sigma < 0.0) throw ValidationError("data.synthetic.noise_sigma: must be >= 0");
  const int views = resolved_views();
  if (views < 4)
    throw ValidationError("data.synthetic.views_per_identity: each identity needs >= 4 views");
  if (per_class % views != 0)
    throw ValidationError("data.synthetic.views_per_identity: must divide per_class");
  if (identity_jitter < 0.0 || view_jitter < 0.0)
    throw ValidationError("data.synthetic: jitter values must be >= 0");
}

double SyntheticSpec::resolved_blob_sigma() const {
  return blob_sigma > 0.0 ? blob_sigma : std::min(height, width) / 8.0;
}

std::pair<double, double> SyntheticSpec::class_center(int k) const {
  if (classes <= 4) {
    const double qr[4] = {0.25, 0.25, 0.75, 0.75};
    const double qc[4] = {0.25, 0.75, 0.25, 0.75};
    return {qr[k % 4] * height, qc[k % 4] * width};
  }
  const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(classes))));
  const int row = k / grid, col = k % grid;
  return {(row + 0.5) * height / grid, (col + 0.5) * width / grid};
}

Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.channels = spec.channels;
  ds.height = spec.height;
  ds.width = spec.width;
  ds.classes = spec.classes;

  const int views = spec.resolved_views();
  const int groups_per_class = spec.per_class / views;
  const double sigma = spec.resolved_blob_sigma();
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);

  int global_index = 0;
  for (int k = 0; k < spec.classes; ++k) {
    const auto [base_row, base_col] = spec.class_center(k);
    // Deterministic per-class color in [0.4, 1].
    std::vector<double> color(static_cast<std::size_t>(spec.channels));
    for (int c = 0; c < spec.channels; ++c) {
      const double phase = k * 0.6180339887498949 + c * 0.37;
      color[static_cast<std::size_t>(c)] = 0.4 + 0.6 * (phase - std::floor(phase));
    }
    for (int g = 0; g < groups_per_class; ++g) {
      const int identity = k * groups_per_class + g;
      Rng id_rng(Rng::mix(spec.seed, 0xA11ce5u, static_cast<std::uint64_t>(identity)));
      const double id_dr = id_rng.uniform(-spec.identity_jitter, spec.identity_jitter);
      const double id_dc = id_rng.uniform(-spec.identity_jitter, spec.identity_jitter);
      for (int v = 0; v < views; ++v, ++global_index) {
        Rng view_rng(Rng::mix(spec.seed, 0xBEEF5u, static_cast<std::uint64_t>(global_index)));
        const double row = base_row + id_dr + view_rng.uniform(-spec.view_jitter, spec.view_jitter);
        const double col = base_col + id_dc + view_rng.uniform(-spec.view_jitter, spec.view_jitter);

        Sample s;
        s.class_id = k;
        s.identity_id = identity;
        s.pixels.resize(static_cast<std::size_t>(spec.channels) * spec.height * spec.width);
        for (int c = 0; c < spec.channels; ++c) {
          for (int y = 0; y < spec.height; ++y) {
            for (int x = 0; x < spec.width; ++x) {
              const double dy = y - row, dx = x - col;
              double v_px = color[static_cast<std::size_t>(c)] *
                            std::exp(-(dy * dy + dx * dx) * inv_two_sigma_sq);
              if (spec.noise_sigma > 0.0) v_px += spec.noise_sigma * view_rng.normal();
              s.pixels[static_cast<std::size_t>((c * spec.height + y) * spec.width + x)] =
                  std::clamp(v_px, 0.0, 1.0);
            }
          }
        }
        ds.samples.push_back(std::move(s));
      }
    }
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_dataset: cannot open " + path);
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_u32(os, static_cast<std::uint32_t>(ds.classes));
  const bool uniform = ds.classes > 0 && ds.size() % ds.classes == 0;
  write_u32(os, uniform ? static_cast<std::uint32_t>(ds.size() / ds.classes) : 0);
  write_u32(os, static_cast<std::uint32_t>(ds.channels));
  write_u32(os, static_cast<std::uint32_t>(ds.height));
  write_u32(os, static_cast<std::uint32_t>(ds.width));
  std::vector<float> buf;
  for (const auto& s : ds.samples) {
    write_u32(os, static_cast<std::uint32_t>(s.class_id));
    write_u32(os, static_cast<std::uint32_t>(s.identity_id));
    buf.assign(s.pixels.begin(), s.pixels.end());
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!os) throw IoError("save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_dataset: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("load_dataset: bad magic in " + path);
  const std::uint32_t version = read_u32(is);
  if (version != kVersion)
    throw FormatError("load_dataset: unsupported version " + std::to_string(version));

  Dataset ds;
  ds.classes = static_cast<int>(read_u32(is));
  read_u32(is);  // nominal per_class; sample records are authoritative
  ds.channels = static_cast<int>(read_u32(is));
  ds.height = static_cast<int>(read_u32(is));
  ds.width = static_cast<int>(read_u32(is));
  const std::size_t pixel_count =
      static_cast<std::size_t>(ds.channels) * ds.height * ds.width;

  std::vector<float> buf(pixel_count);
  for (;;) {
    char peek[4];
    is.read(peek, 4);
    if (is.gcount() == 0) break;  // clean EOF
    if (is.gcount() != 4) throw CorruptTensor("load_dataset: truncated record in " + path);
    Sample s;
    s.class_id = static_cast<int>(
        static_cast<std::uint32_t>(static_cast<unsigned char>(peek[0])) |
        (static_cast<std::uint32_t>(static_cast<unsigned char>(peek[1])) << 8) |
        (static_cast<std::uint32_t>(static_cast<unsigned char>(peek[2])) << 16) |
        (static_cast<std::uint32_t>(static_cast<unsigned char>(peek[3])) << 24));
    s.identity_id = static_cast<int>(read_u32(is));
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(pixel_count * sizeof(float)));
    if (static_cast<std::size_t>(is.gcount()) != pixel_count * sizeof(float))
      throw CorruptTensor("load_dataset: truncated pixels in " + path);
    s.pixels.assign(buf.begin(), buf.end());
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset import_image_folder(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("import_image_folder: " + dir + " is not a directory");
  std::vector<std::string> class_dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) class_dirs.push_back(entry.path().filename().string());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) throw IoError("import_image_folder: no class directories in " + dir);

  Dataset ds;
  ds.classes = static_cast<int>(class_dirs.size());
  int next_identity = 0;
  for (int k = 0; k < ds.classes; ++k) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(fs::path(dir) / class_dirs[static_cast<std::size_t>(k)]))
      if (entry.is_regular_file() && entry.path().extension() == ".png")
        files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());

    std::map<std::string, int> identity_of;  // per-class "<number>_" prefix
    for (const auto& file : files) {
      const ImageU8 img = read_png(file);
      if (ds.channels == 0) {
        ds.channels = img.channels;
        ds.height = img.height;
        ds.width = img.width;
      } else if (img.channels != ds.channels || img.height != ds.height ||
                 img.width != ds.width) {
        throw FormatError("import_image_folder: " + file + " has mismatched dimensions");
      }
      Sample s;
      s.class_id = k;
      const std::string stem = fs::path(file).stem().string();
      const auto underscore = stem.find('_');
      std::string token;
      if (underscore != std::string::npos &&
          stem.find_first_not_of("0123456789") == underscore)
        token = stem.substr(0, underscore);
      if (token.empty()) {
        s.identity_id = next_identity++;
      } else {
        auto [it, inserted] = identity_of.try_emplace(token, next_identity);
        if (inserted) ++next_identity;
        s.identity_id = it->second;
      }
      s.pixels = to_chw(img);
      ds.samples.push_back(std::move(s));
    }
  }
  if (ds.samples.empty()) throw IoError("import_image_folder: no PNG files under " + dir);
  return ds;
}

std::pair<Dataset, Dataset> load_dataset_dir(const std::string& dir) {
  const fs::path train_path = fs::path(dir) / "train.dord";
  const fs::path val_path = fs::path(dir) / "val.dord";
  if (fs::exists(train_path)) {
    Dataset train = load_dataset(train_path.string());
    Dataset val;
    if (fs::exists(val_path)) {
      val = load_dataset(val_path.string());
    } else {
      val.channels = train.channels;
      val.height = train.height;
      val.width = train.width;
      val.classes = train.classes;
    }
    return {std::move(train), std::move(val)};
  }
  Dataset train = import_image_folder(dir);
  Dataset val;
  val.channels = train.channels;
  val.height = train.height;
  val.width = train.width;
  val.classes = train.classes;
  return {std::move(train), std::move(val)};
}

} // namespace reprforge
