#include "tactex/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tactex/pngio.hpp"
#include "tactex/tactile.hpp"

namespace tactex {

ImageF IdentityProvider::refine(const GuidanceRequest& req) const {
  if (!req.image) throw std::runtime_error("refine: missing input image");
  return *req.image;
}

ImageF FileProvider::refine(const GuidanceRequest& req) const {
  if (!req.image) throw std::runtime_error("refine: missing input image");
  std::string path =
      dir_ + "/" + req.kind + "/" + std::to_string(req.view_index) + "_" +
      std::to_string(req.iteration) + ".png";
  PngImage png = read_png(path);
  if (png.width != req.image->width || png.height != req.image->height)
    throw std::runtime_error("file provider: resolution mismatch for " + path);

  ImageF out(png.width, png.height, 3);
  if (req.kind == "tactile") {
    NormalMap n = decode_normal_image(png);
    out = normal_map_to_image(n);
  } else {
    if (png.channels != 3) throw std::runtime_error("file provider: expected RGB image at " + path);
    float vmax = png.bit_depth == 16 ? 65535.0f : 255.0f;
    for (int y = 0; y < png.height; y++)
      for (int x = 0; x < png.width; x++)
        out.set_pixel3(x, y, {png.at(x, y, 0) / vmax, png.at(x, y, 1) / vmax,
                              png.at(x, y, 2) / vmax});
  }
  return out;
}

ImageF BlurProvider::refine(const GuidanceRequest& req) const {
  if (!req.image) throw std::runtime_error("refine: missing input image");
  const ImageF& src = *req.image;
  float sigma = sigma_scale_ * float(req.t_start);
  if (sigma <= 0) return src;

  int radius = std::max(1, int(std::ceil(3.0f * sigma)));
  std::vector<float> kernel(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; i++) {
    double w = std::exp(-0.5 * double(i) * i / (double(sigma) * sigma));
    kernel[i + radius] = float(w);
    sum += w;
  }
  for (float& w : kernel) w = float(w / sum);

  auto reflect = [](int i, int n) {
    if (n == 1) return 0;
    int period = 2 * (n - 1);
    i = std::abs(i) % period;
    return i < n ? i : period - i;
  };

  ImageF tmp(src.width, src.height, src.channels);
  for (int y = 0; y < src.height; y++)
    for (int x = 0; x < src.width; x++)
      for (int c = 0; c < src.channels; c++) {
        float acc = 0;
        for (int i = -radius; i <= radius; i++)
          acc += kernel[i + radius] * src.at(reflect(x + i, src.width), y, c);
        tmp.at(x, y, c) = acc;
      }
  ImageF out(src.width, src.height, src.channels);
  for (int y = 0; y < src.height; y++)
    for (int x = 0; x < src.width; x++)
      for (int c = 0; c < src.channels; c++) {
        float acc = 0;
        for (int i = -radius; i <= radius; i++)
          acc += kernel[i + radius] * tmp.at(x, reflect(y + i, src.height), c);
        out.at(x, y, c) = acc;
      }
  return out;
}

std::unique_ptr<GuidanceProvider> make_provider(const std::string& spec) {
  if (spec == "identity") return std::make_unique<IdentityProvider>();
  if (spec == "blur") return std::make_unique<BlurProvider>();
  if (spec.rfind("file:", 0) == 0) return std::make_unique<FileProvider>(spec.substr(5));
  throw std::runtime_error("unknown guidance provider: " + spec +
                           " (expected identity, blur, or file:<dir>)");
}

double schedule_t(const TimestepSchedule& sched, int phase2_iteration) {
  if (phase2_iteration < 0 || phase2_iteration >= sched.phase2_iters)
    throw std::runtime_error("schedule_t: iteration out of range");
  if (sched.phase2_iters == 1) return sched.t_hi;
  double a = double(phase2_iteration) / double(sched.phase2_iters - 1);
  return sched.t_hi + (sched.t_lo - sched.t_hi) * a;
}

}  // namespace tactex
