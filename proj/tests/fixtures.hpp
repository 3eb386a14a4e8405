#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "tactex/image.hpp"
#include "tactex/mesh.hpp"
#include "tactex/tactile.hpp"
#include "tactex/texfield.hpp"

namespace tactex::testing {

inline std::string tmp_dir() {
  std::filesystem::create_directories(TEST_TMP_DIR);
  return TEST_TMP_DIR;
}

inline std::string data_dir() { return TEST_DATA_DIR; }

inline float runif(std::mt19937_64& rng, float lo = 0.0f, float hi = 1.0f) {
  return lo + (hi - lo) * float(rng() >> 40) * 0x1.0p-24f;
}

inline Vec3f random_unit_vector(std::mt19937_64& rng) {
  while (true) {
    Vec3f v{runif(rng, -1, 1), runif(rng, -1, 1), runif(rng, -1, 1)};
    float len = length(v);
    if (len > 1e-3f && len <= 1.0f) return v / len;
  }
}

// Zero-mean sum of Gaussian bumps, Neumann-compatible enough for round trips.
HeightMap gaussian_bump_field(int width, int height, int n_bumps, float amplitude_mm,
                              uint64_t seed, float pitch_mm = kDefaultPitchMm,
                              float margin_px = 24.0f, float sigma_lo = 6.0f,
                              float sigma_hi = 14.0f);

// Smooth sinusoidal albedo in UV space.
ImageF sinusoid_albedo(int size);

// Quilted-style tactile normal map built from a bump height field; gentle
// slopes so the mean deviation from +z stays moderate.
ImageF bump_normal_uv(int size, float amplitude_mm, uint64_t seed);

// Tiny field config used by gradient checks.
FieldConfig small_field_config(int n_labels = 0);

// Field with randomized heads (zero-init heads hide gradient paths).
TextureField randomized_field(const FieldConfig& config, uint64_t seed);

// Central finite difference with a kink guard: the probe is valid only when
// the two one-sided derivatives agree, i.e. no ReLU/max/sign switch sits
// inside the bracket (central differences do not estimate a derivative
// across a non-smooth point).
struct FdProbe {
  double fd = 0;
  bool valid = false;
};

template <typename F>
FdProbe central_difference(F&& f, std::vector<double>& params, size_t idx, double h) {
  double keep = params[idx];
  params[idx] = keep + h;
  double up = f();
  params[idx] = keep - h;
  double down = f();
  params[idx] = keep;
  double mid = f();

  FdProbe probe;
  probe.fd = (up - down) / (2 * h);
  double right = (up - mid) / h;
  double left = (mid - down) / h;
  double scale = std::max({std::fabs(right), std::fabs(left), 1e-9});
  probe.valid = std::fabs(right - left) <= 0.02 * scale;
  return probe;
}

}  // namespace tactex::testing
