// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "reprforge/tensor.hpp"

namespace reprforge {

struct Sample {
  std::vector<double> pixels;  // CxHxW row-major in [0,1]
  int class_id = 0;
  int identity_id = 0;
};

struct Dataset {
  int channels = 0;
  int height = 0;
  int width = 0;
  int classes = 0;
  std::vector<Sample> samples;

  int size() const { return static_cast<int>(samples.size()); }
  Tensor image(int i) const;  // CxHxW tensor view copy of one sample

  /// Stratified split aligned to identity boundaries: each identity keeps
  /// round(val_fraction * views) of its views in the held-out part,
  /// deterministically by seed.
  std::pair<Dataset, Dataset> split(double val_fraction, std::uint64_t seed) const;
};

/// Class-dependent Gaussian-blob images: a distinct center and color per
/// class, identity- and view-level position jitter, additive pixel noise.
/// Stands in for the large-scale photo corpora this engine does not ship.
struct SyntheticSpec {
  int classes = 3;
  int per_class = 50;
  int channels = 1;
  int height = 16;
  int width = 16;
  int views_per_identity = 0;  // 0 = per_class (one identity per class)
  double noise_sigma = 0.05;
  double blob_sigma = 0.0;  // 0 = min(H,W)/8
  double identity_jitter = 1.5;
  double view_jitter = 1.0;
  std::uint64_t seed = 7;

  void validate() const;
  int resolved_views() const { return views_per_identity > 0 ? views_per_identity : per_class; }
  double resolved_blob_sigma() const;
  /// Blob center (row, col) of class k before jitter. For K <= 4 classes the
  /// centers sit in distinct quadrants; beyond that on a regular grid.
  std::pair<double, double> class_center(int k) const;
};

Dataset generate(const SyntheticSpec& spec);

// On-disk format, one file per split: magic "DORD", little-endian u32
// version, u32 K, u32 per_class, u32 C, u32 H, u32 W, then per-sample
// records (u32 class, u32 identity, f32 pixels row-major).
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Import a directory-per-class folder of PNG images. Files named
/// "<number>_*.png" group into identities by that number; other files each
/// get their own identity.
Dataset import_image_folder(const std::string& dir);

/// Load train/val splits from a directory holding train.dord/val.dord, or
/// import an image-folder layout (train = whole folder, no val).
std::pair<Dataset, Dataset> load_dataset_dir(const std::string& dir);

} // namespace reprforge
