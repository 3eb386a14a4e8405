#pragma once

#include <string>
#include <vector>

#include "tactex/image.hpp"
#include "tactex/pngio.hpp"
#include "tactex/tensorio.hpp"
#include "tactex/vec.hpp"

namespace tactex {

// GelSight Mini sensor geometry: 240x320 px over 21x25 mm.
inline constexpr float kDefaultPitchMm = 0.085f;
inline constexpr int kSensorWidth = 320;
inline constexpr int kSensorHeight = 240;

// Per-pixel unit normals with n_z > 0 at valid pixels.
struct NormalMap {
  int width = 0, height = 0;
  std::vector<Vec3f> data;
  Mask mask;
  float pitch_mm = kDefaultPitchMm;

  NormalMap() = default;
  NormalMap(int w, int h, float pitch = kDefaultPitchMm)
      : width(w), height(h), data(size_t(w) * h, {0, 0, 1}), mask(w, h, 1), pitch_mm(pitch) {}

  Vec3f& at(int x, int y) { return data[size_t(y) * width + x]; }
  const Vec3f& at(int x, int y) const { return data[size_t(y) * width + x]; }
};

// Heights in millimeters. Integration ops leave the valid-pixel mean at zero.
struct HeightMap {
  int width = 0, height = 0;
  std::vector<float> data;
  Mask mask;
  float pitch_mm = kDefaultPitchMm;

  HeightMap() = default;
  HeightMap(int w, int h, float pitch = kDefaultPitchMm)
      : width(w), height(h), data(size_t(w) * h, 0.0f), mask(w, h, 1), pitch_mm(pitch) {}

  float& at(int x, int y) { return data[size_t(y) * width + x]; }
  float at(int x, int y) const { return data[size_t(y) * width + x]; }
};

// Dimensionless slopes dh/dx, dh/dy (mm per mm). x grows with column index,
// y with row index.
struct GradientField {
  int width = 0, height = 0;
  std::vector<float> gx, gy;
  Mask mask;
  float pitch_mm = kDefaultPitchMm;

  GradientField() = default;
  GradientField(int w, int h, float pitch = kDefaultPitchMm)
      : width(w),
        height(h),
        gx(size_t(w) * h, 0.0f),
        gy(size_t(w) * h, 0.0f),
        mask(w, h, 1),
        pitch_mm(pitch) {}
};

// Decode encoding n = 2 v / vmax - 1, then renormalize. Pixels whose decoded
// n_z falls at or below kDecodeMinNz (about one 8-bit step above zero) are
// masked invalid. Vectors shorter than kDecodeMinLen count as zero-length
// (a unit normal encodes to length ~1, so anything near gray is not normal
// content); if more than half the pixels are zero-length the image is
// rejected as not a normal map.
inline constexpr float kDecodeMinNz = 0.005f;
inline constexpr float kDecodeMinLen = 0.1f;
NormalMap decode_normal_image(const PngImage& img, float pitch_mm = kDefaultPitchMm);

// Inverse encoding v = round((n + 1) / 2 * vmax) at 16 bit.
ImageF normal_map_to_image(const NormalMap& n);
NormalMap normal_map_from_image(const ImageF& img, float pitch_mm);

// gx = -n_x / n_z, gy = -n_y / n_z. Pixels with n_z < 0.05 are masked out.
GradientField normals_to_gradients(const NormalMap& n);

// Least-squares height from gradients: forward link differences against
// face-averaged slopes, Neumann boundary, solved spectrally with a DCT.
// Invalid-pixel gradients are zeroed first; the result has zero mean.
HeightMap poisson_integrate(const GradientField& g);

// h - G_sigma * h with sigma = sigma_mm / pitch_mm pixels, mirrored boundary,
// then recentered to zero mean over valid pixels.
HeightMap high_pass(const HeightMap& h, float sigma_mm = 1.0f);

// Contact mask |h| > k * MAD (k = 3); output is the largest centered square
// inside the contact bounding box, clipped to the frame, fully valid.
// Throws when that square is smaller than 32 px.
HeightMap contact_crop(const HeightMap& h);

// n proportional to (-dh/dx, -dh/dy, 1); central differences in the
// interior, one-sided at borders.
NormalMap height_to_normals(const HeightMap& h);

// Height map <-> tensor file ([height, width] f32, pitch in a side channel
// is not stored; callers pass it explicitly).
Tensor height_to_tensor(const HeightMap& h);
HeightMap height_from_tensor(const Tensor& t, float pitch_mm);

struct IngestParams {
  float pitch_mm = kDefaultPitchMm;
  float hp_sigma_mm = 1.0f;
};

struct IngestResult {
  HeightMap height;   // high-passed, contact-cropped patch
  NormalMap normals;  // patch converted back to normals
};

// Full capture pipeline: decode -> gradients -> Poisson -> high-pass ->
// contact crop -> normals.
IngestResult ingest_normal_image(const PngImage& img, const Mask* valid_mask,
                                 const IngestParams& params);

}  // namespace tactex
