#include "fixtures.hpp"

#include <cmath>

namespace tactex::testing {

HeightMap gaussian_bump_field(int width, int height, int n_bumps, float amplitude_mm,
                              uint64_t seed, float pitch_mm, float margin_px, float sigma_lo,
                              float sigma_hi) {
  HeightMap h(width, height, pitch_mm);
  std::mt19937_64 rng(seed);
  struct Bump {
    float x, y, amp, sigma;
  };
  std::vector<Bump> bumps;
  for (int i = 0; i < n_bumps; i++) {
    bumps.push_back({runif(rng, margin_px, width - margin_px),
                     runif(rng, margin_px, height - margin_px),
                     runif(rng, 0.3f, 1.0f) * amplitude_mm * (rng() % 2 ? 1.0f : -1.0f),
                     runif(rng, sigma_lo, sigma_hi)});
  }
  for (int y = 0; y < height; y++)
    for (int x = 0; x < width; x++) {
      float v = 0;
      for (const Bump& b : bumps) {
        float dx = x - b.x, dy = y - b.y;
        v += b.amp * std::exp(-(dx * dx + dy * dy) / (2 * b.sigma * b.sigma));
      }
      h.at(x, y) = v;
    }
  double mean = 0;
  for (float v : h.data) mean += v;
  mean /= double(h.data.size());
  for (float& v : h.data) v -= float(mean);
  return h;
}

ImageF sinusoid_albedo(int size) {
  ImageF img(size, size, 3);
  for (int y = 0; y < size; y++)
    for (int x = 0; x < size; x++) {
      float u = (x + 0.5f) / size, v = (y + 0.5f) / size;
      img.set_pixel3(x, y,
                     {0.5f + 0.3f * std::sin(2 * float(M_PI) * u),
                      0.5f + 0.3f * std::sin(2 * float(M_PI) * v),
                      0.55f + 0.25f * std::sin(2 * float(M_PI) * (u + v))});
    }
  return img;
}

ImageF bump_normal_uv(int size, float amplitude_mm, uint64_t seed) {
  HeightMap h = gaussian_bump_field(size, size, size * size / 2048, amplitude_mm, seed,
                                    kDefaultPitchMm, 8.0f, 10.0f, 18.0f);
  return normal_map_to_image(height_to_normals(h));
}

FieldConfig small_field_config(int n_labels) {
  FieldConfig config;
  config.grid.levels = 4;
  config.grid.features_per_level = 2;
  config.grid.table_size_log2 = 10;
  config.grid.base_resolution = 4;
  config.grid.max_resolution = 32;
  config.hidden_width = 16;
  config.n_labels = n_labels;
  return config;
}

TextureField randomized_field(const FieldConfig& config, uint64_t seed) {
  TextureField field = TextureField::create(config, seed);
  std::mt19937_64 rng(seed ^ 0xabcdef);
  for (size_t i = field.layout.wa; i < field.layout.total; i++)
    field.params[i] = runif(rng, -0.4f, 0.4f);
  // perturb the tables as well so encodings vary
  for (size_t i = 0; i < field.layout.w1; i++) field.params[i] = runif(rng, -0.1f, 0.1f);
  return field;
}

}  // namespace tactex::testing
