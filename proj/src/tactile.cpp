#include "tactex/tactile.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace tactex {

namespace {

// FFTW plan creation is not thread-safe.
std::mutex g_fftw_mutex;

float lower_median(std::vector<float> v) {
  if (v.empty()) throw std::runtime_error("median of empty set");
  size_t k = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + k, v.end());
  return v[k];
}

// reflect-101 index: ... 2 1 | 0 1 2 ... N-1 | N-2 N-3 ...
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  int period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

std::vector<float> gaussian_kernel(float sigma_px) {
  int radius = std::max(1, int(std::ceil(3.0f * sigma_px)));
  std::vector<float> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; i++) {
    double w = std::exp(-0.5 * double(i) * i / (double(sigma_px) * sigma_px));
    k[i + radius] = float(w);
    sum += w;
  }
  for (float& w : k) w = float(w / sum);
  return k;
}

}  // namespace

NormalMap decode_normal_image(const PngImage& img, float pitch_mm) {
  if (img.channels != 3) throw std::runtime_error("normal image must have 3 channels");
  float vmax = img.bit_depth == 16 ? 65535.0f : 255.0f;

  NormalMap out(img.width, img.height, pitch_mm);
  size_t zero_count = 0;
  for (int y = 0; y < img.height; y++) {
    for (int x = 0; x < img.width; x++) {
      Vec3f v{2.0f * img.at(x, y, 0) / vmax - 1.0f, 2.0f * img.at(x, y, 1) / vmax - 1.0f,
              2.0f * img.at(x, y, 2) / vmax - 1.0f};
      float len = length(v);
      if (len < kDecodeMinLen) {
        zero_count++;
        out.at(x, y) = {0, 0, 1};
        out.mask.at(x, y) = 0;
        continue;
      }
      if (v.z <= kDecodeMinNz) {
        out.at(x, y) = {0, 0, 1};
        out.mask.at(x, y) = 0;
        continue;
      }
      out.at(x, y) = v / len;
      out.mask.at(x, y) = 1;
    }
  }
  if (zero_count * 2 > size_t(img.width) * img.height)
    throw std::runtime_error("image does not look like a normal map (mostly zero vectors)");
  return out;
}

ImageF normal_map_to_image(const NormalMap& n) {
  ImageF img(n.width, n.height, 3);
  for (int y = 0; y < n.height; y++)
    for (int x = 0; x < n.width; x++) img.set_pixel3(x, y, n.at(x, y));
  return img;
}

NormalMap normal_map_from_image(const ImageF& img, float pitch_mm) {
  NormalMap n(img.width, img.height, pitch_mm);
  for (int y = 0; y < img.height; y++) {
    for (int x = 0; x < img.width; x++) {
      Vec3f v = img.pixel3(x, y);
      float len = length(v);
      if (len < 1e-6f || v.z <= 0) {
        n.at(x, y) = {0, 0, 1};
        n.mask.at(x, y) = 0;
      } else {
        n.at(x, y) = v / len;
      }
    }
  }
  return n;
}

GradientField normals_to_gradients(const NormalMap& n) {
  GradientField g(n.width, n.height, n.pitch_mm);
  for (int y = 0; y < n.height; y++) {
    for (int x = 0; x < n.width; x++) {
      size_t i = size_t(y) * n.width + x;
      const Vec3f& v = n.data[i];
      if (!n.mask.data[i] || v.z < 0.05f) {
        g.gx[i] = 0;
        g.gy[i] = 0;
        g.mask.data[i] = 0;
        continue;
      }
      g.gx[i] = -v.x / v.z;
      g.gy[i] = -v.y / v.z;
      g.mask.data[i] = 1;
    }
  }
  return g;
}

HeightMap poisson_integrate(const GradientField& g) {
  const int W = g.width, H = g.height;
  if (W < 4 || H < 4) throw std::runtime_error("poisson_integrate: grid smaller than 4x4");
  const double step = g.pitch_mm;

  // Slopes at pixels, zeroed where invalid; link values are face averages
  // scaled to mm per pixel step.
  auto gx_at = [&](int x, int y) -> double {
    size_t i = size_t(y) * W + x;
    return g.mask.data[i] ? double(g.gx[i]) : 0.0;
  };
  auto gy_at = [&](int x, int y) -> double {
    size_t i = size_t(y) * W + x;
    return g.mask.data[i] ? double(g.gy[i]) : 0.0;
  };

  std::vector<double> rhs(size_t(W) * H, 0.0);
  for (int y = 0; y < H; y++) {
    for (int x = 0; x < W; x++) {
      double lx_left = x > 0 ? 0.5 * (gx_at(x - 1, y) + gx_at(x, y)) * step : 0.0;
      double lx_right = x + 1 < W ? 0.5 * (gx_at(x, y) + gx_at(x + 1, y)) * step : 0.0;
      double ly_up = y > 0 ? 0.5 * (gy_at(x, y - 1) + gy_at(x, y)) * step : 0.0;
      double ly_down = y + 1 < H ? 0.5 * (gy_at(x, y) + gy_at(x, y + 1)) * step : 0.0;
      rhs[size_t(y) * W + x] = (lx_left - lx_right) + (ly_up - ly_down);
    }
  }

  std::vector<double> freq(size_t(W) * H);
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_plan fwd = fftw_plan_r2r_2d(H, W, rhs.data(), freq.data(), FFTW_REDFT10, FFTW_REDFT10,
                                     FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);
  }

  // Neumann Laplacian eigenvalues in the DCT-II basis.
  std::vector<double> lam_x(W), lam_y(H);
  for (int k = 0; k < W; k++) lam_x[k] = 2.0 - 2.0 * std::cos(M_PI * k / W);
  for (int k = 0; k < H; k++) lam_y[k] = 2.0 - 2.0 * std::cos(M_PI * k / H);
  for (int ky = 0; ky < H; ky++) {
    for (int kx = 0; kx < W; kx++) {
      double lam = lam_x[kx] + lam_y[ky];
      size_t i = size_t(ky) * W + kx;
      freq[i] = (lam > 0) ? freq[i] / lam : 0.0;  // zero the gauge mode
    }
  }

  std::vector<double> sol(size_t(W) * H);
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_plan inv = fftw_plan_r2r_2d(H, W, freq.data(), sol.data(), FFTW_REDFT01, FFTW_REDFT01,
                                     FFTW_ESTIMATE);
    fftw_execute(inv);
    fftw_destroy_plan(inv);
  }

  const double scale = 1.0 / (4.0 * W * H);
  double mean = 0;
  for (double v : sol) mean += v * scale;
  mean /= double(W) * H;

  HeightMap h(W, H, g.pitch_mm);
  for (size_t i = 0; i < sol.size(); i++) h.data[i] = float(sol[i] * scale - mean);
  h.mask = Mask(W, H, 1);
  return h;
}

HeightMap high_pass(const HeightMap& h, float sigma_mm) {
  if (sigma_mm <= 0) throw std::runtime_error("high_pass: sigma must be positive");
  float sigma_px = sigma_mm / h.pitch_mm;
  std::vector<float> kernel = gaussian_kernel(sigma_px);
  int radius = int(kernel.size() / 2);

  // Separable blur, mirrored boundary.
  std::vector<double> tmp(size_t(h.width) * h.height);
  for (int y = 0; y < h.height; y++) {
    for (int x = 0; x < h.width; x++) {
      double acc = 0;
      for (int i = -radius; i <= radius; i++)
        acc += double(kernel[i + radius]) * h.at(reflect_index(x + i, h.width), y);
      tmp[size_t(y) * h.width + x] = acc;
    }
  }
  HeightMap out(h.width, h.height, h.pitch_mm);
  out.mask = h.mask;
  for (int y = 0; y < h.height; y++) {
    for (int x = 0; x < h.width; x++) {
      double acc = 0;
      for (int i = -radius; i <= radius; i++)
        acc += double(kernel[i + radius]) * tmp[size_t(reflect_index(y + i, h.height)) * h.width + x];
      out.at(x, y) = h.at(x, y) - float(acc);
    }
  }

  double mean = 0;
  size_t n = 0;
  for (size_t i = 0; i < out.data.size(); i++) {
    if (!out.mask.data[i]) continue;
    mean += out.data[i];
    n++;
  }
  if (n > 0) {
    mean /= double(n);
    for (size_t i = 0; i < out.data.size(); i++) out.data[i] -= float(mean);
  }
  return out;
}

HeightMap contact_crop(const HeightMap& h) {
  std::vector<float> valid_values;
  valid_values.reserve(h.data.size());
  for (size_t i = 0; i < h.data.size(); i++)
    if (h.mask.data[i]) valid_values.push_back(h.data[i]);
  if (valid_values.empty()) throw std::runtime_error("contact_crop: empty valid mask");

  float med = lower_median(valid_values);
  std::vector<float> dev(valid_values.size());
  for (size_t i = 0; i < valid_values.size(); i++) dev[i] = std::fabs(valid_values[i] - med);
  float mad = lower_median(dev);
  float threshold = 3.0f * mad;

  int x0 = h.width, x1 = -1, y0 = h.height, y1 = -1;
  for (int y = 0; y < h.height; y++) {
    for (int x = 0; x < h.width; x++) {
      size_t i = size_t(y) * h.width + x;
      if (!h.mask.data[i]) continue;
      if (std::fabs(h.data[i]) > threshold) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
  }
  if (x1 < 0) throw std::runtime_error("contact_crop: no contact region (flat patch)");

  int bw = x1 - x0 + 1, bh = y1 - y0 + 1;
  int side = std::min(bw, bh);
  if (side < 32) throw std::runtime_error("contact_crop: contact region smaller than 32x32 px");

  int sx = std::clamp(x0 + (bw - side) / 2, 0, h.width - side);
  int sy = std::clamp(y0 + (bh - side) / 2, 0, h.height - side);

  HeightMap out(side, side, h.pitch_mm);
  for (int y = 0; y < side; y++)
    for (int x = 0; x < side; x++) out.at(x, y) = h.at(sx + x, sy + y);
  return out;
}

NormalMap height_to_normals(const HeightMap& h) {
  NormalMap n(h.width, h.height, h.pitch_mm);
  n.mask = h.mask;
  float inv_pitch = 1.0f / h.pitch_mm;
  for (int y = 0; y < h.height; y++) {
    for (int x = 0; x < h.width; x++) {
      float gx, gy;
      if (x == 0)
        gx = (h.at(1, y) - h.at(0, y)) * inv_pitch;
      else if (x == h.width - 1)
        gx = (h.at(x, y) - h.at(x - 1, y)) * inv_pitch;
      else
        gx = (h.at(x + 1, y) - h.at(x - 1, y)) * 0.5f * inv_pitch;
      if (y == 0)
        gy = (h.at(x, 1) - h.at(x, 0)) * inv_pitch;
      else if (y == h.height - 1)
        gy = (h.at(x, y) - h.at(x, y - 1)) * inv_pitch;
      else
        gy = (h.at(x, y + 1) - h.at(x, y - 1)) * 0.5f * inv_pitch;
      n.at(x, y) = normalize(Vec3f{-gx, -gy, 1.0f});
    }
  }
  return n;
}

Tensor height_to_tensor(const HeightMap& h) {
  Tensor t;
  t.shape = {h.height, h.width};
  t.data = h.data;
  return t;
}

HeightMap height_from_tensor(const Tensor& t, float pitch_mm) {
  if (t.shape.size() != 2) throw std::runtime_error("height tensor must have shape [H, W]");
  HeightMap h(t.shape[1], t.shape[0], pitch_mm);
  h.data = t.data;
  return h;
}

IngestResult ingest_normal_image(const PngImage& img, const Mask* valid_mask,
                                 const IngestParams& params) {
  NormalMap normals = decode_normal_image(img, params.pitch_mm);
  if (valid_mask) {
    if (valid_mask->width != normals.width || valid_mask->height != normals.height)
      throw std::runtime_error("mask resolution does not match the normal image");
    for (size_t i = 0; i < normals.mask.data.size(); i++)
      normals.mask.data[i] = normals.mask.data[i] && valid_mask->data[i];
  }
  GradientField grads = normals_to_gradients(normals);
  HeightMap heights = poisson_integrate(grads);
  heights.mask = grads.mask;  // track contact validity through the crop
  HeightMap filtered = high_pass(heights, params.hp_sigma_mm);
  HeightMap patch = contact_crop(filtered);

  IngestResult res;
  res.normals = height_to_normals(patch);
  res.height = std::move(patch);
  return res;
}

}  // namespace tactex
