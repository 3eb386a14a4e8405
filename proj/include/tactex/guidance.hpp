#pragma once

#include <memory>
#include <string>

#include "tactex/image.hpp"

namespace tactex {

// One refinement request. kind/view_index/iteration key the file provider's
// directory layout <dir>/<kind>/<view-index>_<iter>.png.
struct GuidanceRequest {
  const ImageF* image = nullptr;      // rendered RGB or normal image
  const ImageF* condition = nullptr;  // optional normal condition
  std::string prompt;
  double t_start = 0.5;
  uint64_t noise_seed = 0;
  std::string kind = "visual";  // "visual" | "tactile"
  int view_index = 0;
  int iteration = 0;
};

// Stand-in for the diffusion refiners: returns an image of the same
// resolution, deterministic for a fixed request.
class GuidanceProvider {
 public:
  virtual ~GuidanceProvider() = default;
  virtual ImageF refine(const GuidanceRequest& req) const = 0;
  virtual std::string name() const = 0;
};

// Returns the input unchanged.
class IdentityProvider : public GuidanceProvider {
 public:
  ImageF refine(const GuidanceRequest& req) const override;
  std::string name() const override { return "identity"; }
};

// Replays precomputed refinements from <dir>/<kind>/<view-index>_<iter>.png.
// Visual images load as 8/16-bit color in [0,1]; tactile images decode the
// standard (n+1)/2 normal encoding.
class FileProvider : public GuidanceProvider {
 public:
  explicit FileProvider(std::string dir) : dir_(std::move(dir)) {}
  ImageF refine(const GuidanceRequest& req) const override;
  std::string name() const override { return "file:" + dir_; }

 private:
  std::string dir_;
};

// Test provider: Gaussian blur with sigma = sigma_scale * t_start pixels,
// so t_start = 0 is the identity.
class BlurProvider : public GuidanceProvider {
 public:
  explicit BlurProvider(float sigma_scale = 8.0f) : sigma_scale_(sigma_scale) {}
  ImageF refine(const GuidanceRequest& req) const override;
  std::string name() const override { return "blur"; }

 private:
  float sigma_scale_;
};

// "identity" | "file:<dir>" | "blur"
std::unique_ptr<GuidanceProvider> make_provider(const std::string& spec);

struct TimestepSchedule {
  double t_hi = 0.5;
  double t_lo = 0.3;
  int phase2_iters = 50;
};

// Linear decay from t_hi at iteration 0 to t_lo at the last phase-2
// iteration, endpoints inclusive.
double schedule_t(const TimestepSchedule& sched, int phase2_iteration);

}  // namespace tactex
