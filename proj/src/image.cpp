#include "tactex/image.hpp"

#include <algorithm>
#include <cmath>

namespace tactex {

size_t Mask::count() const {
  size_t n = 0;
  for (uint8_t v : data) n += v ? 1 : 0;
  return n;
}

Mask erode(const Mask& m, int iterations) {
  Mask cur = m;
  for (int it = 0; it < iterations; it++) {
    Mask next(cur.width, cur.height, 0);
    for (int y = 0; y < cur.height; y++) {
      for (int x = 0; x < cur.width; x++) {
        if (!cur.at(x, y)) continue;
        bool interior = x > 0 && x + 1 < cur.width && y > 0 && y + 1 < cur.height &&
                        cur.at(x - 1, y) && cur.at(x + 1, y) && cur.at(x, y - 1) &&
                        cur.at(x, y + 1);
        next.at(x, y) = interior ? 1 : 0;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

float sample_bilinear(const ImageF& img, float u, float v, int c) {
  float fx = u * img.width - 0.5f;
  float fy = v * img.height - 0.5f;
  int x0 = int(std::floor(fx));
  int y0 = int(std::floor(fy));
  float ax = fx - x0;
  float ay = fy - y0;
  auto clampx = [&](int x) { return std::clamp(x, 0, img.width - 1); };
  auto clampy = [&](int y) { return std::clamp(y, 0, img.height - 1); };
  float v00 = img.at(clampx(x0), clampy(y0), c);
  float v10 = img.at(clampx(x0 + 1), clampy(y0), c);
  float v01 = img.at(clampx(x0), clampy(y0 + 1), c);
  float v11 = img.at(clampx(x0 + 1), clampy(y0 + 1), c);
  return (1 - ax) * ((1 - ay) * v00 + ay * v01) + ax * ((1 - ay) * v10 + ay * v11);
}

Vec3f sample_bilinear3(const ImageF& img, float u, float v) {
  return {sample_bilinear(img, u, v, 0), sample_bilinear(img, u, v, 1),
          sample_bilinear(img, u, v, 2)};
}

Vec3f sample_normal(const ImageF& img, float u, float v) {
  Vec3f n = sample_bilinear3(img, u, v);
  float len = length(n);
  if (len < 1e-8f) return {0, 0, 1};
  return n / len;
}

}  // namespace tactex
