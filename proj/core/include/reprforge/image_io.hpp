// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace reprforge {

struct ImageU8 {
  int height = 0;
  int width = 0;
  int channels = 0;  // 1 (gray) or 3 (rgb)
  std::vector<unsigned char> pixels;  // HxWxC interleaved
};

ImageU8 read_png(const std::string& path);

/// 8-bit PNG; channels must be 1 or 3. Deterministic output bytes.
void write_png(const std::string& path, const ImageU8& img);

/// CxHxW doubles in [0,1] -> interleaved 8-bit.
ImageU8 to_u8(const std::vector<double>& chw, int channels, int height, int width);

/// Interleaved 8-bit -> CxHxW doubles in [0,1].
std::vector<double> to_chw(const ImageU8& img);

} // namespace reprforge
