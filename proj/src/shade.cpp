#include "tactex/shade.hpp"

namespace tactex {

namespace {

ImageF to_image(const std::vector<float>& data, int w, int h, int c) {
  ImageF img(w, h, c);
  img.data = data;
  return img;
}

}  // namespace

RenderSet to_render_set(const FieldRender<float>& r) {
  RenderSet set;
  set.color = to_image(r.color, r.width, r.height, 3);
  set.albedo = to_image(r.albedo, r.width, r.height, 3);
  set.tactile = to_image(r.tactile, r.width, r.height, 3);
  set.normal = to_image(r.normal, r.width, r.height, 3);
  if (r.n_labels > 0) set.logits = to_image(r.logits, r.width, r.height, r.n_labels);
  set.mask = r.mask;
  return set;
}

FieldRenderResult render_field(const Mesh& m, const TextureField& field, const Camera& cam,
                               const Light& light) {
  FieldRenderResult res;
  res.gbuffer = rasterize(m, cam);
  render_field_t<float>(res.gbuffer, field.config, field.layout, field.params.data(), light,
                        res.render);
  return res;
}

void render_field_backward(const GBuffer& g, const TextureField& field,
                           const FieldRender<float>& r, const Light& light, const float* d_color,
                           const float* d_albedo, const float* d_tactile, const float* d_logits,
                           std::vector<float>& grad) {
  if (grad.size() != field.params.size())
    throw std::runtime_error("render_field_backward: gradient buffer size mismatch");
  render_field_backward_t<float>(g, field.config, field.layout, field.params.data(), r, light,
                                 d_color, d_albedo, d_tactile, d_logits, grad.data());
}

RenderSet shade(const GBuffer& g, const ImageF& albedo_px, const ImageF& ntac_px,
                const Light& light) {
  RenderSet set;
  set.color = ImageF(g.width, g.height, 3);
  set.albedo = ImageF(g.width, g.height, 3);
  set.tactile = ImageF(g.width, g.height, 3);
  set.normal = ImageF(g.width, g.height, 3);
  set.mask = g.coverage;

  for (int y = 0; y < g.height; y++) {
    for (int x = 0; x < g.width; x++) {
      if (!g.coverage.at(x, y)) continue;
      size_t i = g.index(x, y);
      Vec3f a = albedo_px.pixel3(x, y);
      Vec3f nt = ntac_px.pixel3(x, y);
      Vec3f sn = composite_normal(g.normal[i], g.tangent[i], nt);
      Vec3f c = shade_pixel(a, sn, g.position[i], light.position, light.ambient, light.diffuse);
      set.color.set_pixel3(x, y, c);
      set.albedo.set_pixel3(x, y, a);
      set.tactile.set_pixel3(x, y, nt);
      set.normal.set_pixel3(x, y, sn);
    }
  }
  return set;
}

RenderSet shade_gbuffer_uvmaps(const GBuffer& g, const ImageF* albedo_uv, const ImageF* tactile_uv,
                               const Light& light) {
  ImageF albedo_px(g.width, g.height, 3, 1.0f);
  ImageF ntac_px(g.width, g.height, 3, 0.0f);
  for (int y = 0; y < g.height; y++) {
    for (int x = 0; x < g.width; x++) {
      if (!g.coverage.at(x, y)) {
        ntac_px.set_pixel3(x, y, {0, 0, 1});
        continue;
      }
      size_t i = g.index(x, y);
      Vec2f uv = g.uv[i];
      if (albedo_uv) albedo_px.set_pixel3(x, y, sample_bilinear3(*albedo_uv, uv.x, uv.y));
      ntac_px.set_pixel3(x, y, tactile_uv ? sample_normal(*tactile_uv, uv.x, uv.y)
                                          : Vec3f{0, 0, 1});
    }
  }
  return shade(g, albedo_px, ntac_px, light);
}

RenderSet render_uvmaps(const Mesh& m, const ImageF* albedo_uv, const ImageF* tactile_uv,
                        const Camera& cam, const Light& light) {
  GBuffer g = rasterize(m, cam);
  return shade_gbuffer_uvmaps(g, albedo_uv, tactile_uv, light);
}

}  // namespace tactex
