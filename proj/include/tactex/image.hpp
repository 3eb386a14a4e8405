#pragma once

#include <cstdint>
#include <vector>

#include "tactex/vec.hpp"

namespace tactex {

// Row-major interleaved image. Pixel (x, y) channel c sits at
// (y * width + x) * channels + c.
template <typename T>
struct Image {
  int width = 0, height = 0, channels = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c, T fill = T(0))
      : width(w), height(h), channels(c), data(size_t(w) * h * c, fill) {}

  T& at(int x, int y, int c = 0) { return data[(size_t(y) * width + x) * channels + c]; }
  T at(int x, int y, int c = 0) const { return data[(size_t(y) * width + x) * channels + c]; }

  Vec3<T> pixel3(int x, int y) const {
    size_t i = (size_t(y) * width + x) * channels;
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set_pixel3(int x, int y, const Vec3<T>& v) {
    size_t i = (size_t(y) * width + x) * channels;
    data[i] = v.x;
    data[i + 1] = v.y;
    data[i + 2] = v.z;
  }

  size_t pixel_count() const { return size_t(width) * height; }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

using ImageF = Image<float>;
using ImageD = Image<double>;

struct Mask {
  int width = 0, height = 0;
  std::vector<uint8_t> data;

  Mask() = default;
  Mask(int w, int h, uint8_t fill = 0) : width(w), height(h), data(size_t(w) * h, fill) {}

  uint8_t& at(int x, int y) { return data[size_t(y) * width + x]; }
  uint8_t at(int x, int y) const { return data[size_t(y) * width + x]; }

  size_t count() const;
  bool empty_mask() const { return count() == 0; }
};

// Removes pixels with any unset 4-neighbor (border pixels always removed).
Mask erode(const Mask& m, int iterations = 1);

// Clamp-to-edge bilinear sample of channel c at continuous (u, v) in [0, 1]^2,
// texel centers at (i + 0.5) / size.
float sample_bilinear(const ImageF& img, float u, float v, int c);
Vec3f sample_bilinear3(const ImageF& img, float u, float v);

// Bilinear sample of a 3-channel unit-vector image, renormalized. Falls back
// to +z when the interpolated vector degenerates.
Vec3f sample_normal(const ImageF& img, float u, float v);

}  // namespace tactex
