#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tactex/image.hpp"

namespace tactex {

enum class VmMode { PerPixel, MeanColor };

// Visual matching loss. PerPixel: mean over masked pixels and channels of the
// squared difference. MeanColor: squared difference of per-channel masked
// means, averaged over channels. grad (w.r.t. pred) may be null; when given
// it must hold mask.width * mask.height * channels entries and is
// accumulated into.
template <typename Real>
Real loss_vm(const Real* pred, const Real* target, const Mask& mask, int channels, VmMode mode,
             Real* grad) {
  size_t n = mask.count();
  if (n == 0) throw std::runtime_error("loss_vm: empty mask");
  const size_t total = size_t(mask.width) * mask.height;

  if (mode == VmMode::PerPixel) {
    Real denom = Real(n) * Real(channels);
    Real acc = 0;
    for (size_t i = 0; i < total; i++) {
      if (!mask.data[i]) continue;
      for (int c = 0; c < channels; c++) {
        Real d = pred[i * channels + c] - target[i * channels + c];
        acc += d * d;
        if (grad) grad[i * channels + c] += Real(2) * d / denom;
      }
    }
    return acc / denom;
  }

  std::vector<Real> mean_diff(channels, Real(0));
  for (size_t i = 0; i < total; i++) {
    if (!mask.data[i]) continue;
    for (int c = 0; c < channels; c++)
      mean_diff[c] += pred[i * channels + c] - target[i * channels + c];
  }
  Real acc = 0;
  for (int c = 0; c < channels; c++) {
    mean_diff[c] /= Real(n);
    acc += mean_diff[c] * mean_diff[c];
  }
  acc /= Real(channels);
  if (grad) {
    for (size_t i = 0; i < total; i++) {
      if (!mask.data[i]) continue;
      for (int c = 0; c < channels; c++)
        grad[i * channels + c] += Real(2) * mean_diff[c] / (Real(channels) * Real(n));
    }
  }
  return acc;
}

// Cosine mismatch of unit-vector images: mean over masked pixels of
// 1 - dot(pred, target). Shared by the tactile matching and tactile guidance
// losses. Bit-identical pixels contribute exactly zero (cos(x, x) = 1), and
// dot products are capped at 1 so unit-length float noise cannot push the
// loss negative.
template <typename Real>
Real loss_cosine(const Real* pred, const Real* target, const Mask& mask, Real* grad) {
  size_t n = mask.count();
  if (n == 0) throw std::runtime_error("cosine loss: empty mask");
  const size_t total = size_t(mask.width) * mask.height;
  Real acc = 0;
  for (size_t i = 0; i < total; i++) {
    if (!mask.data[i]) continue;
    const Real* p = pred + i * 3;
    const Real* t = target + i * 3;
    if (!(p[0] == t[0] && p[1] == t[1] && p[2] == t[2])) {
      Real d = p[0] * t[0] + p[1] * t[1] + p[2] * t[2];
      acc += Real(1) - (d > Real(1) ? Real(1) : d);
    }
    if (grad)
      for (int c = 0; c < 3; c++) grad[i * 3 + c] += -t[c] / Real(n);
  }
  return acc / Real(n);
}

namespace pyr {

// [1, 2, 1]/4 separable blur with zero padding; self-adjoint.
template <typename Real>
std::vector<Real> blur3(const std::vector<Real>& img, int w, int h, int c) {
  std::vector<Real> tmp(img.size(), Real(0)), out(img.size(), Real(0));
  auto px = [&](const std::vector<Real>& v, int x, int y, int ch) -> Real {
    if (x < 0 || y < 0 || x >= w || y >= h) return Real(0);
    return v[(size_t(y) * w + x) * c + ch];
  };
  for (int y = 0; y < h; y++)
    for (int x = 0; x < w; x++)
      for (int ch = 0; ch < c; ch++)
        tmp[(size_t(y) * w + x) * c + ch] =
            (px(img, x - 1, y, ch) + Real(2) * px(img, x, y, ch) + px(img, x + 1, y, ch)) / Real(4);
  for (int y = 0; y < h; y++)
    for (int x = 0; x < w; x++)
      for (int ch = 0; ch < c; ch++)
        out[(size_t(y) * w + x) * c + ch] =
            (px(tmp, x, y - 1, ch) + Real(2) * px(tmp, x, y, ch) + px(tmp, x, y + 1, ch)) / Real(4);
  return out;
}

// Blur then keep even rows/columns.
template <typename Real>
std::vector<Real> down(const std::vector<Real>& img, int w, int h, int c, int* ow, int* oh) {
  std::vector<Real> b = blur3(img, w, h, c);
  *ow = (w + 1) / 2;
  *oh = (h + 1) / 2;
  std::vector<Real> out(size_t(*ow) * *oh * c);
  for (int y = 0; y < *oh; y++)
    for (int x = 0; x < *ow; x++)
      for (int ch = 0; ch < c; ch++)
        out[(size_t(y) * *ow + x) * c + ch] = b[(size_t(2 * y) * w + 2 * x) * c + ch];
  return out;
}

// Adjoint of down: scatter to even sites, blur.
template <typename Real>
std::vector<Real> down_adjoint(const std::vector<Real>& img, int ow, int oh, int w, int h, int c) {
  std::vector<Real> stuffed(size_t(w) * h * c, Real(0));
  for (int y = 0; y < oh; y++)
    for (int x = 0; x < ow; x++)
      for (int ch = 0; ch < c; ch++)
        stuffed[(size_t(2 * y) * w + 2 * x) * c + ch] = img[(size_t(y) * ow + x) * c + ch];
  return blur3(stuffed, w, h, c);
}

// Zero-stuff to (tw, th), blur, gain 4 to preserve intensity.
template <typename Real>
std::vector<Real> up(const std::vector<Real>& img, int w, int h, int c, int tw, int th) {
  std::vector<Real> stuffed(size_t(tw) * th * c, Real(0));
  for (int y = 0; y < h; y++)
    for (int x = 0; x < w; x++)
      for (int ch = 0; ch < c; ch++)
        if (2 * x < tw && 2 * y < th)
          stuffed[(size_t(2 * y) * tw + 2 * x) * c + ch] = img[(size_t(y) * w + x) * c + ch];
  std::vector<Real> out = blur3(stuffed, tw, th, c);
  for (Real& v : out) v *= Real(4);
  return out;
}

// Adjoint of up: blur, sample even sites, gain 4.
template <typename Real>
std::vector<Real> up_adjoint(const std::vector<Real>& img, int tw, int th, int w, int h, int c) {
  std::vector<Real> b = blur3(img, tw, th, c);
  std::vector<Real> out(size_t(w) * h * c, Real(0));
  for (int y = 0; y < h; y++)
    for (int x = 0; x < w; x++)
      for (int ch = 0; ch < c; ch++)
        if (2 * x < tw && 2 * y < th)
          out[(size_t(y) * w + x) * c + ch] = Real(4) * b[(size_t(2 * y) * tw + 2 * x) * c + ch];
  return out;
}

template <typename Real>
struct Pyramid {
  std::vector<std::vector<Real>> laplacian;  // K levels, finest first
  std::vector<int> widths, heights;
};

inline constexpr int kPyramidLevels = 4;

template <typename Real>
Pyramid<Real> laplacian_pyramid(const std::vector<Real>& img, int w, int h, int c) {
  Pyramid<Real> p;
  std::vector<Real> g = img;
  int gw = w, gh = h;
  for (int k = 0; k < kPyramidLevels - 1; k++) {
    int ow, oh;
    std::vector<Real> next = down(g, gw, gh, c, &ow, &oh);
    std::vector<Real> upsampled = up(next, ow, oh, c, gw, gh);
    std::vector<Real> lap(g.size());
    for (size_t i = 0; i < g.size(); i++) lap[i] = g[i] - upsampled[i];
    p.laplacian.push_back(std::move(lap));
    p.widths.push_back(gw);
    p.heights.push_back(gh);
    g = std::move(next);
    gw = ow;
    gh = oh;
  }
  p.laplacian.push_back(std::move(g));
  p.widths.push_back(gw);
  p.heights.push_back(gh);
  return p;
}

}  // namespace pyr

template <typename Real>
struct VgResult {
  Real l1 = 0;
  Real pyramid = 0;
  Real total = 0;
};

// Visual guidance loss: masked mean L1 plus a 4-level Laplacian-pyramid L1
// (per-level weight 1/4) computed on mask-premultiplied images. Both terms
// weighted 1.0 in the total.
template <typename Real>
VgResult<Real> loss_vg(const Real* pred, const Real* target, const Mask& mask, int channels,
                       Real* grad) {
  size_t n = mask.count();
  if (n == 0) throw std::runtime_error("loss_vg: empty mask");
  const int w = mask.width, h = mask.height, c = channels;
  const size_t total_px = size_t(w) * h;

  VgResult<Real> res;

  Real l1_denom = Real(n) * Real(c);
  for (size_t i = 0; i < total_px; i++) {
    if (!mask.data[i]) continue;
    for (int ch = 0; ch < c; ch++) {
      Real d = pred[i * c + ch] - target[i * c + ch];
      res.l1 += std::fabs(d);
      if (grad) grad[i * c + ch] += (d > 0 ? Real(1) : (d < 0 ? Real(-1) : Real(0))) / l1_denom;
    }
  }
  res.l1 /= l1_denom;

  std::vector<Real> mp(size_t(w) * h * c, Real(0)), mt(size_t(w) * h * c, Real(0));
  for (size_t i = 0; i < total_px; i++) {
    if (!mask.data[i]) continue;
    for (int ch = 0; ch < c; ch++) {
      mp[i * c + ch] = pred[i * c + ch];
      mt[i * c + ch] = target[i * c + ch];
    }
  }
  pyr::Pyramid<Real> pp = pyr::laplacian_pyramid(mp, w, h, c);
  pyr::Pyramid<Real> pt = pyr::laplacian_pyramid(mt, w, h, c);

  const Real level_weight = Real(1) / Real(pyr::kPyramidLevels);
  std::vector<std::vector<Real>> d_lap(pyr::kPyramidLevels);
  for (int k = 0; k < pyr::kPyramidLevels; k++) {
    const auto& lp = pp.laplacian[k];
    const auto& lt = pt.laplacian[k];
    Real denom = Real(pp.widths[k]) * Real(pp.heights[k]) * Real(c);
    Real acc = 0;
    if (grad) d_lap[k].assign(lp.size(), Real(0));
    for (size_t i = 0; i < lp.size(); i++) {
      Real d = lp[i] - lt[i];
      acc += std::fabs(d);
      if (grad)
        d_lap[k][i] = level_weight * (d > 0 ? Real(1) : (d < 0 ? Real(-1) : Real(0))) / denom;
    }
    res.pyramid += level_weight * acc / denom;
  }

  if (grad) {
    // Reverse the pyramid: acc[k+1] collects -up^T from level k, then flows
    // down through down^T.
    std::vector<std::vector<Real>> acc(pyr::kPyramidLevels);
    acc[pyr::kPyramidLevels - 1] = d_lap[pyr::kPyramidLevels - 1];
    for (int k = pyr::kPyramidLevels - 2; k >= 0; k--) {
      std::vector<Real> upT = pyr::up_adjoint(d_lap[k], pp.widths[k], pp.heights[k],
                                              pp.widths[k + 1], pp.heights[k + 1], c);
      for (size_t i = 0; i < acc[k + 1].size(); i++) acc[k + 1][i] -= upT[i];
      std::vector<Real> downT = pyr::down_adjoint(acc[k + 1], pp.widths[k + 1], pp.heights[k + 1],
                                                  pp.widths[k], pp.heights[k], c);
      acc[k] = d_lap[k];
      for (size_t i = 0; i < acc[k].size(); i++) acc[k][i] += downT[i];
    }
    for (size_t i = 0; i < total_px; i++) {
      if (!mask.data[i]) continue;
      for (int ch = 0; ch < c; ch++) grad[i * c + ch] += acc[0][i * c + ch];
    }
  }

  res.total = res.l1 + res.pyramid;
  return res;
}

struct LossWeights {
  double vm = 0, tm = 0, vg = 0, tg = 0;
};

// Eq-style weighted sum; rejects non-finite parts.
double total_loss(double vm, double tm, double vg, double tg, const LossWeights& w);

}  // namespace tactex
