#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tactex/camera.hpp"
#include "tactex/guidance.hpp"
#include "tactex/mesh.hpp"
#include "tactex/partlabel.hpp"
#include "tactex/shade.hpp"
#include "tactex/texfield.hpp"

namespace tactex {

// Two-phase schedule: 150 matching-only iterations at (vm, tm) = (500, 1),
// then 50 guided iterations with mean-color vm, tm dropped to 0.05, and
// (vg, tg) = (5, 0.05); Adam lr 0.01 throughout.
struct TrainConfig {
  int phase1_iters = 150;
  int phase2_iters = 50;
  AdamParams adam;
  float lambda_vm = 500.0f;
  float lambda_tm_phase1 = 1.0f;
  float lambda_tm_phase2 = 0.05f;
  float lambda_vg = 5.0f;
  float lambda_tg = 0.05f;
  float lambda_label = 1.0f;
  int views_per_iter = 1;  // visual + tactile pairs per iteration
  uint64_t seed = 0;
  VisualCameraParams visual;
  TactileCameraParams tactile;
  TimestepSchedule schedule;
  FieldConfig field;
  std::string prompt;
};

// A fixed camera with its part-label supervision image.
struct LabeledView {
  Camera camera;
  LabelMap labels;
};

struct FitInputs {
  const Mesh* mesh = nullptr;
  ImageF albedo_uv;                 // exported albedo UV map
  std::vector<ImageF> tactile_uv;   // one quilted normal map per part
  const GuidanceProvider* provider = nullptr;
  std::vector<const GuidanceProvider*> tactile_providers;  // optional, per part
  std::vector<LabeledView> labeled_views;  // required for multi-part fits
};

struct FitHistoryRow {
  int iteration = 0;
  double l_vm = 0, l_tm = 0, l_vg = 0, l_tg = 0, l_label = 0;
  double total = 0;  // weighted
};

struct FitResult {
  TextureField field;
  std::vector<FitHistoryRow> history;
};

using FitCallback = std::function<void(int iteration, const TextureField& field)>;

FitResult fit(const FitInputs& inputs, const TrainConfig& config, const FitCallback& callback = {});

// CSV columns: iteration, l_vm, l_tm, l_vg, l_tg, total.
void write_history_csv(const std::string& path, const std::vector<FitHistoryRow>& history);

// Held-out comparison of the field path against the UV targets on freshly
// sampled views (single-texture meshes).
struct EvalMetrics {
  double albedo_mae = 0;            // mean |albedo - target| over covered pixels
  double tactile_mean_angle_deg = 0;
  double l_vm = 0;                  // per-pixel visual matching loss
};

EvalMetrics evaluate_field(const Mesh& m, const TextureField& field, const ImageF& albedo_uv,
                           const ImageF& tactile_uv, int n_views, uint64_t seed,
                           const VisualCameraParams& visual = {},
                           const TactileCameraParams& tactile = {});

}  // namespace tactex
