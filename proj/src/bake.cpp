#include "tactex/bake.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "tactex/pngio.hpp"
#include "tactex/raster.hpp"

namespace tactex {

BakeResult bake(const TextureField& field, const Mesh& m, int resolution) {
  if (!m.has_uvs()) throw std::runtime_error("bake: mesh has no UVs");

  UvGBuffer uvg = rasterize_uv(m, resolution);
  BakeResult out;
  out.resolution = resolution;
  out.albedo_uv = ImageF(resolution, resolution, 3);
  out.normal_uv = ImageF(resolution, resolution, 3);
  out.coverage = uvg.coverage;

  std::vector<size_t> texels;
  std::vector<Vec3f> points;
  for (size_t i = 0; i < uvg.coverage.data.size(); i++) {
    if (!uvg.coverage.data[i]) continue;
    const auto& tri = m.triangles[uvg.triangle[i]];
    Vec3f b = uvg.bary[i];
    texels.push_back(i);
    points.push_back(m.positions[tri[0]] * b.x + m.positions[tri[1]] * b.y +
                     m.positions[tri[2]] * b.z);
  }

  FieldActivations<float> acts;
  field_forward(field, points.data(), points.size(), acts);

  const int n_labels = field.config.n_labels;
  if (n_labels > 0) {
    out.label_uv.width = resolution;
    out.label_uv.height = resolution;
    out.label_uv.labels.assign(size_t(resolution) * resolution, 0);
  }
  for (size_t k = 0; k < texels.size(); k++) {
    size_t i = texels[k];
    for (int c = 0; c < 3; c++) {
      out.albedo_uv.data[i * 3 + c] = acts.albedo[k * 3 + c];
      out.normal_uv.data[i * 3 + c] = acts.n_tac[k * 3 + c];
    }
    if (n_labels > 0) {
      int best = 0;
      for (int c = 1; c < n_labels; c++)
        if (acts.logits[k * n_labels + c] > acts.logits[k * n_labels + best]) best = c;
      out.label_uv.labels[i] = uint8_t(best + 1);
    }
  }

  // Gutters: dilate colors and normals, renormalize the normals afterwards;
  // labels copy the first covered 8-neighbor.
  Mask cov_albedo = out.coverage;
  dilate_gutter(out.albedo_uv, cov_albedo, 4);
  Mask cov_normal = out.coverage;
  dilate_gutter(out.normal_uv, cov_normal, 4);
  // renormalize the averaged gutter texels; chart texels keep the field's
  // exact output
  for (int y = 0; y < resolution; y++)
    for (int x = 0; x < resolution; x++) {
      if (out.coverage.at(x, y)) continue;
      Vec3f n = out.normal_uv.pixel3(x, y);
      float len = length(n);
      out.normal_uv.set_pixel3(x, y, len > 1e-8f ? n / len : Vec3f{0, 0, 1});
    }
  if (n_labels > 0) {
    Mask cov = out.coverage;
    for (int it = 0; it < 4; it++) {
      Mask next = cov;
      for (int y = 0; y < resolution; y++)
        for (int x = 0; x < resolution; x++) {
          if (cov.at(x, y)) continue;
          for (int dy = -1; dy <= 1 && !next.at(x, y); dy++)
            for (int dx = -1; dx <= 1; dx++) {
              int nx = x + dx, ny = y + dy;
              if (nx < 0 || ny < 0 || nx >= resolution || ny >= resolution) continue;
              if (!cov.at(nx, ny)) continue;
              out.label_uv.labels[size_t(y) * resolution + x] =
                  out.label_uv.labels[size_t(ny) * resolution + nx];
              next.at(x, y) = 1;
              break;
            }
        }
      cov = std::move(next);
    }
  }
  return out;
}

int turntable(const Mesh& m, const TurntableSource& src, int frames, const std::string& out_dir,
              int resolution) {
  if (frames < 1) throw std::runtime_error("turntable: need at least one frame");
  if (!src.field && !src.albedo_uv && !src.tactile_uv)
    throw std::runtime_error("turntable: need a field or baked maps");
  std::filesystem::create_directories(out_dir);

  VisualCameraParams params;
  params.resolution = resolution;
  char name[64];
  for (int f = 0; f < frames; f++) {
    float azimuth = 360.0f * float(f) / float(frames);
    Camera cam = make_orbit_camera(azimuth, 20.0f, params);
    Light light = headlight(cam);

    RenderSet set;
    if (src.field) {
      FieldRenderResult r = render_field(m, *src.field, cam, light);
      set = to_render_set(r.render);
    } else {
      set = render_uvmaps(m, src.albedo_uv, src.tactile_uv, cam, light);
    }

    std::snprintf(name, sizeof(name), "/color_%03d.png", f);
    write_png8(out_dir + name, set.color);
    std::snprintf(name, sizeof(name), "/albedo_%03d.png", f);
    write_png8(out_dir + name, set.albedo);
    std::snprintf(name, sizeof(name), "/normal_%03d.png", f);
    write_normal_png16(out_dir + name, set.normal);
  }
  return frames;
}

}  // namespace tactex
