#pragma once

#include <vector>

#include "tactex/image.hpp"
#include "tactex/raster.hpp"
#include "tactex/texfield.hpp"

namespace tactex {

struct Light {
  Vec3f position{0, 0, 0};
  float ambient = 0.1f;
  float diffuse = 0.9f;
};

inline Light headlight(const Camera& cam) { return Light{cam.position(), 0.1f, 0.9f}; }

// Shading normal n = [t, n_B x t, n_B] * n_T. The identity perturbation
// n_T = (0, 0, 1) returns n_B bit-exactly.
template <typename Real>
inline Vec3<Real> composite_normal(const Vec3<Real>& n_base, const Vec3<Real>& tangent,
                                   const Vec3<Real>& n_tac) {
  if (n_tac.x == Real(0) && n_tac.y == Real(0) && n_tac.z == Real(1)) return n_base;
  Vec3<Real> bitangent = cross(n_base, tangent);
  return tangent * n_tac.x + bitangent * n_tac.y + n_base * n_tac.z;
}

// Diffuse point-light shading: albedo * (ambient + diffuse * max(0, n.l)).
template <typename Real>
inline Vec3<Real> shade_pixel(const Vec3<Real>& albedo, const Vec3<Real>& n,
                              const Vec3<Real>& position, const Vec3<Real>& light_pos,
                              Real ambient, Real diffuse) {
  Vec3<Real> l = normalize(light_pos - position);
  Real ndotl = dot(n, l);
  Real s = ambient + diffuse * (ndotl > Real(0) ? ndotl : Real(0));
  return albedo * s;
}

// One camera's rendered image set plus everything backward needs.
template <typename Real>
struct FieldRender {
  int width = 0, height = 0;
  int n_labels = 0;
  std::vector<Real> color, albedo, tactile, normal;  // 3 channels each
  std::vector<Real> logits;                          // n_labels channels
  Mask mask;
  std::vector<size_t> pixels;  // covered pixel indices in raster order
  FieldActivations<Real> acts;
};

// Query the field at covered GBuffer positions and shade. Background stays 0
// with mask 0.
template <typename Real>
void render_field_t(const GBuffer& g, const FieldConfig& config, const ParamLayout& layout,
                    const Real* params, const Light& light, FieldRender<Real>& out) {
  out.width = g.width;
  out.height = g.height;
  out.n_labels = config.n_labels;
  size_t n = size_t(g.width) * g.height;
  out.color.assign(n * 3, Real(0));
  out.albedo.assign(n * 3, Real(0));
  out.tactile.assign(n * 3, Real(0));
  out.normal.assign(n * 3, Real(0));
  out.logits.assign(n * size_t(config.n_labels), Real(0));
  out.mask = g.coverage;

  out.pixels.clear();
  for (size_t i = 0; i < n; i++)
    if (g.coverage.data[i]) out.pixels.push_back(i);

  std::vector<Vec3<Real>> points(out.pixels.size());
  for (size_t k = 0; k < out.pixels.size(); k++) points[k] = Vec3<Real>(g.position[out.pixels[k]]);
  field_forward<Real>(config, layout, params, points.data(), points.size(), out.acts);

  const Vec3<Real> lp(light.position);
  const Real ambient = Real(light.ambient), diffuse = Real(light.diffuse);
#pragma omp parallel for schedule(static)
  for (long long kk = 0; kk < (long long)out.pixels.size(); kk++) {
    size_t k = size_t(kk);
    size_t i = out.pixels[k];
    Vec3<Real> a{out.acts.albedo[k * 3], out.acts.albedo[k * 3 + 1], out.acts.albedo[k * 3 + 2]};
    Vec3<Real> nt{out.acts.n_tac[k * 3], out.acts.n_tac[k * 3 + 1], out.acts.n_tac[k * 3 + 2]};
    Vec3<Real> nb(g.normal[i]);
    Vec3<Real> tan(g.tangent[i]);
    Vec3<Real> pos(g.position[i]);
    Vec3<Real> sn = composite_normal(nb, tan, nt);
    Vec3<Real> c = shade_pixel(a, sn, pos, lp, ambient, diffuse);
    for (int ch = 0; ch < 3; ch++) {
      out.color[i * 3 + ch] = c[ch];
      out.albedo[i * 3 + ch] = a[ch];
      out.tactile[i * 3 + ch] = nt[ch];
      out.normal[i * 3 + ch] = sn[ch];
    }
    for (int ch = 0; ch < config.n_labels; ch++)
      out.logits[i * config.n_labels + ch] = out.acts.logits[k * config.n_labels + ch];
  }
}

// Chain upstream image gradients (any of them may be null) back into field
// parameters. No gradients flow through the light, the geometry, or the
// shading-normal output image.
template <typename Real>
void render_field_backward_t(const GBuffer& g, const FieldConfig& config,
                             const ParamLayout& layout, const Real* params,
                             const FieldRender<Real>& r, const Light& light, const Real* d_color,
                             const Real* d_albedo, const Real* d_tactile, const Real* d_logits,
                             Real* grad) {
  const size_t count = r.pixels.size();
  std::vector<Real> da(count * 3, Real(0));
  std::vector<Real> dnt(count * 3, Real(0));
  std::vector<Real> dlg;
  if (config.n_labels > 0 && d_logits) dlg.assign(count * config.n_labels, Real(0));

  const Vec3<Real> lp(light.position);
  const Real diffuse = Real(light.diffuse), ambient = Real(light.ambient);
#pragma omp parallel for schedule(static)
  for (long long kk = 0; kk < (long long)count; kk++) {
    size_t k = size_t(kk);
    size_t i = r.pixels[k];
    Vec3<Real> a{r.acts.albedo[k * 3], r.acts.albedo[k * 3 + 1], r.acts.albedo[k * 3 + 2]};
    Vec3<Real> nt{r.acts.n_tac[k * 3], r.acts.n_tac[k * 3 + 1], r.acts.n_tac[k * 3 + 2]};
    Vec3<Real> nb(g.normal[i]);
    Vec3<Real> tan(g.tangent[i]);
    Vec3<Real> pos(g.position[i]);
    Vec3<Real> bitan = cross(nb, tan);
    Vec3<Real> sn = tan * nt.x + bitan * nt.y + nb * nt.z;
    Vec3<Real> l = normalize(lp - pos);
    Real ndotl = dot(sn, l);
    Real s = ambient + diffuse * (ndotl > Real(0) ? ndotl : Real(0));

    Vec3<Real> dA{0, 0, 0}, dN{0, 0, 0};
    if (d_color) {
      Vec3<Real> dc{d_color[i * 3], d_color[i * 3 + 1], d_color[i * 3 + 2]};
      dA += dc * s;
      if (ndotl > Real(0)) dN += l * (diffuse * dot(dc, a));
    }
    if (d_albedo) dA += Vec3<Real>{d_albedo[i * 3], d_albedo[i * 3 + 1], d_albedo[i * 3 + 2]};

    Vec3<Real> dNT{dot(dN, tan), dot(dN, bitan), dot(dN, nb)};
    if (d_tactile)
      dNT += Vec3<Real>{d_tactile[i * 3], d_tactile[i * 3 + 1], d_tactile[i * 3 + 2]};

    for (int ch = 0; ch < 3; ch++) {
      da[k * 3 + ch] = dA[ch];
      dnt[k * 3 + ch] = dNT[ch];
    }
    if (!dlg.empty())
      for (int ch = 0; ch < config.n_labels; ch++)
        dlg[k * config.n_labels + ch] = d_logits[i * config.n_labels + ch];
  }

  field_backward<Real>(config, layout, params, r.acts, da.data(), dnt.data(),
                       dlg.empty() ? nullptr : dlg.data(), grad);
}

// Production image set.
struct RenderSet {
  ImageF color, albedo, tactile, normal;
  ImageF logits;  // n_labels channels when the field has a label head
  Mask mask;
};

struct FieldRenderResult {
  GBuffer gbuffer;
  FieldRender<float> render;
};

RenderSet to_render_set(const FieldRender<float>& r);

FieldRenderResult render_field(const Mesh& m, const TextureField& field, const Camera& cam,
                               const Light& light);

void render_field_backward(const GBuffer& g, const TextureField& field,
                           const FieldRender<float>& r, const Light& light, const float* d_color,
                           const float* d_albedo, const float* d_tactile, const float* d_logits,
                           std::vector<float>& grad);

// Per-pixel sample images (field outputs or UV-map lookups) -> shaded set.
RenderSet shade(const GBuffer& g, const ImageF& albedo_px, const ImageF& ntac_px,
                const Light& light);

// UV-path rendering: bilinear map lookups at the GBuffer uv. Either map may
// be null (albedo falls back to 1, tactile to (0,0,1)).
RenderSet shade_gbuffer_uvmaps(const GBuffer& g, const ImageF* albedo_uv, const ImageF* tactile_uv,
                               const Light& light);

RenderSet render_uvmaps(const Mesh& m, const ImageF* albedo_uv, const ImageF* tactile_uv,
                        const Camera& cam, const Light& light);

}  // namespace tactex
