#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tactex/image.hpp"

namespace tactex {

// Decoded PNG. Samples are stored as uint16 regardless of source depth;
// 8-bit files keep their 0..255 range. Palette images are kept as raw
// indices (channels == 1) so label maps survive round trips.
struct PngImage {
  int width = 0, height = 0, channels = 0, bit_depth = 0;
  bool palette = false;
  std::vector<uint16_t> pixels;

  uint16_t at(int x, int y, int c = 0) const {
    return pixels[(size_t(y) * width + x) * channels + c];
  }
};

PngImage read_png(const std::string& path);

// samples must hold width*height*channels values in [0, 2^bit_depth - 1].
void write_png(const std::string& path, int width, int height, int channels, int bit_depth,
               const std::vector<uint16_t>& samples);

// 8-bit gray or RGB from floats in [0, 1] (clamped).
void write_png8(const std::string& path, const ImageF& img);

// Indexed 8-bit PNG; value 0 is background. Uses a fixed distinct-color palette.
void write_png_indexed(const std::string& path, const std::vector<uint8_t>& indices, int width,
                       int height);

std::vector<uint8_t> read_png_indices(const std::string& path, int* width, int* height);

// Normal map <-> PNG, encoding v = round((n + 1) / 2 * vmax).
void write_normal_png16(const std::string& path, const ImageF& normals);

// 8-bit mask PNG, nonzero = set.
void write_mask_png(const std::string& path, const Mask& mask);
Mask read_mask_png(const std::string& path);

}  // namespace tactex
