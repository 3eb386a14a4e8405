#include "tactex/fit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tactex/losses.hpp"
#include "tactex/raster.hpp"

namespace tactex {

namespace {

// Sample the UV-path reference images at the GBuffer's uv coordinates.
ImageF albedo_target(const GBuffer& g, const ImageF& albedo_uv) {
  ImageF out(g.width, g.height, 3);
  for (int y = 0; y < g.height; y++)
    for (int x = 0; x < g.width; x++) {
      if (!g.coverage.at(x, y)) continue;
      Vec2f uv = g.uv[g.index(x, y)];
      out.set_pixel3(x, y, sample_bilinear3(albedo_uv, uv.x, uv.y));
    }
  return out;
}

ImageF tactile_target(const GBuffer& g, const ImageF& tactile_uv) {
  ImageF out(g.width, g.height, 3);
  for (int y = 0; y < g.height; y++)
    for (int x = 0; x < g.width; x++) {
      Vec2f uv = g.coverage.at(x, y) ? g.uv[g.index(x, y)] : Vec2f{0, 0};
      out.set_pixel3(x, y, g.coverage.at(x, y) ? sample_normal(tactile_uv, uv.x, uv.y)
                                               : Vec3f{0, 0, 1});
    }
  return out;
}

// Renormalize a provider's tactile output per pixel. Vectors that are
// already unit within float noise pass through untouched so an identity
// provider keeps the render bit-exactly.
void renormalize_normals(ImageF& img) {
  for (int y = 0; y < img.height; y++)
    for (int x = 0; x < img.width; x++) {
      Vec3f v = img.pixel3(x, y);
      float len2 = dot(v, v);
      if (std::fabs(len2 - 1.0f) <= 1e-4f) continue;
      float len = std::sqrt(len2);
      img.set_pixel3(x, y, len > 1e-8f ? v / len : Vec3f{0, 0, 1});
    }
}

void axpy(std::vector<float>& dst, float a, const std::vector<float>& x) {
  for (size_t i = 0; i < dst.size(); i++) dst[i] += a * x[i];
}

uint64_t derive_seed(uint64_t seed, uint64_t salt) {
  uint64_t v = seed ^ (salt * 0x9e3779b97f4a7c15ull + 0xbf58476d1ce4e5b9ull);
  v ^= v >> 31;
  return v;
}

}  // namespace

FitResult fit(const FitInputs& inputs, const TrainConfig& config, const FitCallback& callback) {
  if (!inputs.mesh) throw std::runtime_error("fit: missing mesh");
  if (!inputs.provider) throw std::runtime_error("fit: missing guidance provider");
  if (inputs.tactile_uv.empty()) throw std::runtime_error("fit: need at least one tactile map");
  const Mesh& mesh = *inputs.mesh;
  const int n_parts = int(inputs.tactile_uv.size());
  const bool multi_part = n_parts > 1;
  if (multi_part && config.field.n_labels != n_parts)
    throw std::runtime_error("fit: multi-part training needs n_labels == number of tactile maps");
  if (multi_part && inputs.labeled_views.empty())
    throw std::runtime_error("fit: multi-part training needs labeled views");
  if (!inputs.tactile_providers.empty() &&
      int(inputs.tactile_providers.size()) != n_parts)
    throw std::runtime_error("fit: need one tactile provider per part");
  const bool use_labels = config.field.n_labels > 0 && !inputs.labeled_views.empty();

  TextureField field = TextureField::create(config.field, config.seed);
  std::mt19937_64 rng(config.seed);

  std::vector<float> grad(field.params.size());
  FitResult result;
  const int total_iters = config.phase1_iters + config.phase2_iters;

  for (int iter = 0; iter < total_iters; iter++) {
    const bool phase2 = iter >= config.phase1_iters;
    const int phase2_iter = iter - config.phase1_iters;
    const float lambda_tm = phase2 ? config.lambda_tm_phase2 : config.lambda_tm_phase1;

    std::fill(grad.begin(), grad.end(), 0.0f);
    FitHistoryRow row;
    row.iteration = iter;

    for (int view = 0; view < config.views_per_iter; view++) {
      // Visual pass.
      Camera vcam;
      GBuffer gv;
      Mask mv;
      for (int attempt = 0;; attempt++) {
        vcam = sample_visual_camera(rng, config.visual);
        gv = rasterize(mesh, vcam);
        mv = erode(gv.coverage, 1);
        if (!mv.empty_mask()) break;
        if (attempt >= 8) throw std::runtime_error("fit: visual views never cover the mesh");
      }
      Light vlight = headlight(vcam);
      FieldRender<float> rv;
      render_field_t<float>(gv, field.config, field.layout, field.params.data(), vlight, rv);
      ImageF target_albedo = albedo_target(gv, inputs.albedo_uv);

      std::vector<float> d_albedo(rv.albedo.size(), 0.0f);
      std::vector<float> d_color;
      std::vector<float> tmp(rv.albedo.size(), 0.0f);

      row.l_vm += loss_vm<float>(rv.albedo.data(), target_albedo.data.data(), mv, 3,
                                 phase2 ? VmMode::MeanColor : VmMode::PerPixel, tmp.data());
      axpy(d_albedo, config.lambda_vm, tmp);

      if (phase2) {
        double t_start = schedule_t(config.schedule, phase2_iter);
        ImageF color_img(gv.width, gv.height, 3);
        color_img.data = rv.color;
        ImageF normal_img(gv.width, gv.height, 3);
        normal_img.data = rv.normal;

        GuidanceRequest req;
        req.image = &color_img;
        req.condition = &normal_img;
        req.prompt = config.prompt;
        req.t_start = t_start;
        req.noise_seed = derive_seed(config.seed, uint64_t(iter) * 2 + 1);
        req.kind = "visual";
        req.view_index = iter;
        req.iteration = phase2_iter;
        ImageF refined = inputs.provider->refine(req);
        if (refined.width != gv.width || refined.height != gv.height)
          throw std::runtime_error("fit: provider returned a different resolution");

        d_color.assign(rv.color.size(), 0.0f);
        std::fill(tmp.begin(), tmp.end(), 0.0f);
        row.l_vg += loss_vg<float>(rv.color.data(), refined.data.data(), mv, 3, tmp.data()).total;
        axpy(d_color, config.lambda_vg, tmp);
      }

      // Label supervision on one fixed labeled view per iteration.
      std::vector<float> d_logits_lv;
      if (use_labels) {
        const LabeledView& lv = inputs.labeled_views[size_t(iter) % inputs.labeled_views.size()];
        GBuffer gl = rasterize(mesh, lv.camera);
        FieldRender<float> rl;
        render_field_t<float>(gl, field.config, field.layout, field.params.data(),
                              headlight(lv.camera), rl);
        Mask ml = erode(gl.coverage, 1);
        if (!ml.empty_mask()) {
          d_logits_lv.assign(rl.logits.size(), 0.0f);
          std::vector<float> tmpl(rl.logits.size(), 0.0f);
          row.l_label += loss_label<float>(rl.logits.data(), lv.labels, ml, field.config.n_labels,
                                           tmpl.data());
          axpy(d_logits_lv, config.lambda_label, tmpl);
          render_field_backward_t<float>(gl, field.config, field.layout, field.params.data(), rl,
                                         headlight(lv.camera), nullptr, nullptr, nullptr,
                                         d_logits_lv.data(), grad.data());
        }
      }

      render_field_backward_t<float>(gv, field.config, field.layout, field.params.data(), rv,
                                     vlight, d_color.empty() ? nullptr : d_color.data(),
                                     d_albedo.data(), nullptr, nullptr, grad.data());

      // Tactile pass.
      Camera tcam;
      GBuffer gt;
      Mask mt;
      for (int attempt = 0;; attempt++) {
        tcam = sample_tactile_camera(mesh, rng, config.tactile);
        gt = rasterize(mesh, tcam);
        mt = erode(gt.coverage, 1);
        if (!mt.empty_mask()) break;
        if (attempt >= 8) throw std::runtime_error("fit: tactile views never cover the mesh");
      }
      Light tlight = headlight(tcam);
      FieldRender<float> rt;
      render_field_t<float>(gt, field.config, field.layout, field.params.data(), tlight, rt);

      std::vector<float> d_tactile(rt.tactile.size(), 0.0f);
      std::vector<float> tmpt(rt.tactile.size(), 0.0f);

      // Hard part masks from the rendered label field (single part: full mask).
      std::vector<Mask> part_masks;
      if (multi_part) {
        part_masks.assign(n_parts, Mask(gt.width, gt.height, 0));
        for (size_t i = 0; i < mt.data.size(); i++) {
          if (!mt.data[i]) continue;
          int best = 0;
          for (int c = 1; c < n_parts; c++)
            if (rt.logits[i * n_parts + c] > rt.logits[i * n_parts + best]) best = c;
          part_masks[best].data[i] = 1;
        }
      } else {
        part_masks.push_back(mt);
      }

      std::vector<ImageF> targets;
      std::vector<const float*> target_ptrs;
      for (int n = 0; n < n_parts; n++) {
        targets.push_back(tactile_target(gt, inputs.tactile_uv[n]));
        target_ptrs.push_back(targets.back().data.data());
      }
      row.l_tm += masked_tactile_losses<float>(rt.tactile.data(), target_ptrs, part_masks,
                                               tmpt.data());
      axpy(d_tactile, lambda_tm, tmpt);

      if (phase2) {
        double t_start = schedule_t(config.schedule, phase2_iter);
        ImageF tactile_img(gt.width, gt.height, 3);
        tactile_img.data = rt.tactile;

        std::vector<ImageF> refined(n_parts);
        std::vector<const float*> refined_ptrs;
        for (int n = 0; n < n_parts; n++) {
          const GuidanceProvider* provider =
              inputs.tactile_providers.empty() ? inputs.provider : inputs.tactile_providers[n];
          GuidanceRequest req;
          req.image = &tactile_img;
          req.prompt = config.prompt;
          req.t_start = t_start;
          req.noise_seed = derive_seed(config.seed, uint64_t(iter) * 2 * (n + 1));
          req.kind = "tactile";
          req.view_index = iter;
          req.iteration = phase2_iter;
          refined[n] = provider->refine(req);
          if (refined[n].width != gt.width || refined[n].height != gt.height)
            throw std::runtime_error("fit: provider returned a different resolution");
          renormalize_normals(refined[n]);
          refined_ptrs.push_back(refined[n].data.data());
        }
        std::fill(tmpt.begin(), tmpt.end(), 0.0f);
        row.l_tg += masked_tactile_losses<float>(rt.tactile.data(), refined_ptrs, part_masks,
                                                 tmpt.data());
        axpy(d_tactile, config.lambda_tg, tmpt);
      }

      render_field_backward_t<float>(gt, field.config, field.layout, field.params.data(), rt,
                                     tlight, nullptr, nullptr, d_tactile.data(), nullptr,
                                     grad.data());
    }

    row.total = config.lambda_vm * row.l_vm + lambda_tm * row.l_tm + config.lambda_vg * row.l_vg +
                config.lambda_tg * row.l_tg + config.lambda_label * row.l_label;
    if (!std::isfinite(row.total))
      throw std::runtime_error("fit: non-finite loss at iteration " + std::to_string(iter));

    adam_step(field, grad, config.adam);
    result.history.push_back(row);
    if (callback) callback(iter, field);
  }

  result.field = std::move(field);
  return result;
}

void write_history_csv(const std::string& path, const std::vector<FitHistoryRow>& history) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write history CSV: " + path);
  f << "iteration,l_vm,l_tm,l_vg,l_tg,total\n";
  for (const FitHistoryRow& row : history)
    f << row.iteration << "," << row.l_vm << "," << row.l_tm << "," << row.l_vg << "," << row.l_tg
      << "," << row.total << "\n";
}

EvalMetrics evaluate_field(const Mesh& m, const TextureField& field, const ImageF& albedo_uv,
                           const ImageF& tactile_uv, int n_views, uint64_t seed,
                           const VisualCameraParams& visual, const TactileCameraParams& tactile) {
  std::mt19937_64 rng(seed);
  EvalMetrics metrics;
  double mae_acc = 0, vm_acc = 0, angle_acc = 0;
  size_t mae_n = 0, angle_n = 0;

  for (int v = 0; v < n_views; v++) {
    Camera cam = sample_visual_camera(rng, visual);
    GBuffer g = rasterize(m, cam);
    Mask mask = erode(g.coverage, 1);
    if (mask.empty_mask()) continue;
    FieldRender<float> r;
    render_field_t<float>(g, field.config, field.layout, field.params.data(), headlight(cam), r);
    ImageF target = albedo_target(g, albedo_uv);
    vm_acc += loss_vm<float>(r.albedo.data(), target.data.data(), mask, 3, VmMode::PerPixel,
                             nullptr);
    for (size_t i = 0; i < mask.data.size(); i++) {
      if (!mask.data[i]) continue;
      for (int c = 0; c < 3; c++)
        mae_acc += std::fabs(r.albedo[i * 3 + c] - target.data[i * 3 + c]);
      mae_n += 3;
    }
  }

  for (int v = 0; v < n_views; v++) {
    Camera cam = sample_tactile_camera(m, rng, tactile);
    GBuffer g = rasterize(m, cam);
    Mask mask = erode(g.coverage, 1);
    if (mask.empty_mask()) continue;
    FieldRender<float> r;
    render_field_t<float>(g, field.config, field.layout, field.params.data(), headlight(cam), r);
    ImageF target = tactile_target(g, tactile_uv);
    for (size_t i = 0; i < mask.data.size(); i++) {
      if (!mask.data[i]) continue;
      float d = 0;
      for (int c = 0; c < 3; c++) d += r.tactile[i * 3 + c] * target.data[i * 3 + c];
      d = std::clamp(d, -1.0f, 1.0f);
      angle_acc += std::acos(d) * 180.0 / M_PI;
      angle_n++;
    }
  }

  metrics.albedo_mae = mae_n ? mae_acc / double(mae_n) : 0.0;
  metrics.l_vm = n_views ? vm_acc / n_views : 0.0;
  metrics.tactile_mean_angle_deg = angle_n ? angle_acc / double(angle_n) : 0.0;
  return metrics;
}

}  // namespace tactex
