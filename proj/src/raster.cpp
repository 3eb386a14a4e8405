#include "tactex/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tactex {

namespace {

constexpr float kNearDepth = 1e-4f;

struct ScreenVertex {
  float x = 0, y = 0;  // pixel units, pixel (i, j) center at (i+0.5, j+0.5)
  float depth = 0;     // distance along the view axis
};

inline double edge(const ScreenVertex& a, const ScreenVertex& b, float px, float py) {
  return double(b.x - a.x) * (py - a.y) - double(b.y - a.y) * (px - a.x);
}

// Top-left rule for y-down screen coordinates and positive-area winding:
// ties on top and left edges are inside, bottom and right are not.
inline bool tie_inside(const ScreenVertex& a, const ScreenVertex& b) {
  double dy = double(b.y) - a.y;
  double dx = double(b.x) - a.x;
  return dy < 0 || (dy == 0 && dx > 0);
}

// Shared triangle scan. emit(x, y, bary_in_corner_order, depth) runs for
// every covered sample.
template <typename Emit>
void scan_triangle(ScreenVertex sv[3], bool perspective, int width, int height, Emit&& emit) {
  int perm[3] = {0, 1, 2};
  double area = edge(sv[0], sv[1], sv[2].x, sv[2].y);
  if (area == 0) return;
  if (area < 0) {
    std::swap(sv[1], sv[2]);
    perm[1] = 2;
    perm[2] = 1;
    area = -area;
  }

  float min_x = std::min({sv[0].x, sv[1].x, sv[2].x});
  float max_x = std::max({sv[0].x, sv[1].x, sv[2].x});
  float min_y = std::min({sv[0].y, sv[1].y, sv[2].y});
  float max_y = std::max({sv[0].y, sv[1].y, sv[2].y});
  int x0 = std::max(0, int(std::floor(min_x - 0.5f)));
  int x1 = std::min(width - 1, int(std::ceil(max_x - 0.5f)));
  int y0 = std::max(0, int(std::floor(min_y - 0.5f)));
  int y1 = std::min(height - 1, int(std::ceil(max_y - 0.5f)));
  if (x0 > x1 || y0 > y1) return;

  for (int y = y0; y <= y1; y++) {
    float py = float(y) + 0.5f;
    for (int x = x0; x <= x1; x++) {
      float px = float(x) + 0.5f;
      double w0 = edge(sv[1], sv[2], px, py);
      double w1 = edge(sv[2], sv[0], px, py);
      double w2 = edge(sv[0], sv[1], px, py);
      bool in0 = w0 > 0 || (w0 == 0 && tie_inside(sv[1], sv[2]));
      bool in1 = w1 > 0 || (w1 == 0 && tie_inside(sv[2], sv[0]));
      bool in2 = w2 > 0 || (w2 == 0 && tie_inside(sv[0], sv[1]));
      if (!in0 || !in1 || !in2) continue;

      double l0 = w0 / area, l1 = w1 / area, l2 = w2 / area;
      double b0, b1, b2, depth;
      if (perspective) {
        double q0 = l0 / sv[0].depth, q1 = l1 / sv[1].depth, q2 = l2 / sv[2].depth;
        double q = q0 + q1 + q2;
        b0 = q0 / q;
        b1 = q1 / q;
        b2 = q2 / q;
        depth = 1.0 / q;
      } else {
        b0 = l0;
        b1 = l1;
        b2 = l2;
        depth = b0 * sv[0].depth + b1 * sv[1].depth + b2 * sv[2].depth;
      }

      Vec3f bary;
      bary[perm[0]] = float(b0);
      bary[perm[1]] = float(b1);
      bary[perm[2]] = float(b2);
      emit(x, y, bary, float(depth));
    }
  }
}

}  // namespace

GBuffer rasterize(const Mesh& m, const Camera& cam) {
  GBuffer g;
  g.width = cam.width;
  g.height = cam.height;
  size_t n = size_t(cam.width) * cam.height;
  g.coverage = Mask(cam.width, cam.height, 0);
  g.triangle.assign(n, -1);
  g.position.assign(n, {0, 0, 0});
  g.normal.assign(n, {0, 0, 1});
  g.tangent.assign(n, {1, 0, 0});
  g.uv.assign(n, {0, 0});
  g.bary.assign(n, {0, 0, 0});
  g.depth.assign(n, std::numeric_limits<float>::infinity());

  const bool perspective = cam.kind == Projection::Perspective;
  const float aspect = float(cam.width) / float(cam.height);
  const float tan_half = std::tan(cam.fov_deg * float(M_PI) / 360.0f);
  const float ortho_half_w = cam.ortho_width * 0.5f;
  const float ortho_half_h = ortho_half_w / aspect;

  // Project all vertices once.
  std::vector<ScreenVertex> projected(m.positions.size());
  std::vector<uint8_t> in_front(m.positions.size(), 1);
  for (size_t v = 0; v < m.positions.size(); v++) {
    Vec3f c = cam.to_camera(m.positions[v]);
    float d = -c.z;
    ScreenVertex sv;
    sv.depth = d;
    if (perspective) {
      if (d <= kNearDepth) {
        in_front[v] = 0;
        projected[v] = sv;
        continue;
      }
      float sx = c.x / (d * tan_half * aspect);
      float sy = c.y / (d * tan_half);
      sv.x = (sx * 0.5f + 0.5f) * float(cam.width);
      sv.y = (0.5f - sy * 0.5f) * float(cam.height);
    } else {
      sv.x = (c.x / ortho_half_w * 0.5f + 0.5f) * float(cam.width);
      sv.y = (0.5f - c.y / ortho_half_h * 0.5f) * float(cam.height);
    }
    projected[v] = sv;
  }

  for (size_t t = 0; t < m.triangles.size(); t++) {
    const auto& tri = m.triangles[t];
    // Cameras keep geometry in front of the near plane; triangles that
    // straddle it are dropped rather than clipped.
    if (perspective && (!in_front[tri[0]] || !in_front[tri[1]] || !in_front[tri[2]])) continue;
    ScreenVertex sv[3] = {projected[tri[0]], projected[tri[1]], projected[tri[2]]};

    scan_triangle(sv, perspective, cam.width, cam.height,
                  [&](int x, int y, const Vec3f& bary, float depth) {
                    size_t i = g.index(x, y);
                    if (depth >= g.depth[i]) return;
                    g.depth[i] = depth;
                    g.triangle[i] = int(t);
                    g.bary[i] = bary;
                    g.coverage.at(x, y) = 1;
                  });
  }

  // Resolve attributes once per pixel from the surviving triangle.
  for (int y = 0; y < g.height; y++) {
    for (int x = 0; x < g.width; x++) {
      size_t i = g.index(x, y);
      if (!g.coverage.at(x, y)) continue;
      const auto& tri = m.triangles[g.triangle[i]];
      Vec3f b = g.bary[i];
      for (int k = 0; k < 3; k++) b[k] = std::max(b[k], -1e-6f);

      g.position[i] = m.positions[tri[0]] * b.x + m.positions[tri[1]] * b.y +
                      m.positions[tri[2]] * b.z;
      Vec3f n = m.normals[tri[0]] * b.x + m.normals[tri[1]] * b.y + m.normals[tri[2]] * b.z;
      float nl = length(n);
      if (nl < 1e-8f) {
        Vec3f e1 = m.positions[tri[1]] - m.positions[tri[0]];
        Vec3f e2 = m.positions[tri[2]] - m.positions[tri[0]];
        n = normalize(cross(e1, e2));
      } else {
        n = n / nl;
      }
      Vec3f tan = m.tangents[tri[0]] * b.x + m.tangents[tri[1]] * b.y + m.tangents[tri[2]] * b.z;
      tan = tan - n * dot(n, tan);
      float tl = length(tan);
      g.normal[i] = n;
      g.tangent[i] = tl > 1e-8f ? tan / tl : orthogonal_axis(n);
      if (m.has_uvs()) {
        const auto& uv = m.corner_uvs[g.triangle[i]];
        g.uv[i] = {uv[0].x * b.x + uv[1].x * b.y + uv[2].x * b.z,
                   uv[0].y * b.x + uv[1].y * b.y + uv[2].y * b.z};
      }
      g.bary[i] = b;
    }
  }
  return g;
}

UvGBuffer rasterize_uv(const Mesh& m, int resolution) {
  UvGBuffer g;
  g.resolution = resolution;
  size_t n = size_t(resolution) * resolution;
  g.coverage = Mask(resolution, resolution, 0);
  g.triangle.assign(n, -1);
  g.bary.assign(n, {0, 0, 0});

  for (size_t t = 0; t < m.triangles.size(); t++) {
    const auto& uv = m.corner_uvs[t];
    ScreenVertex sv[3];
    for (int k = 0; k < 3; k++) {
      sv[k].x = uv[k].x * float(resolution);
      sv[k].y = uv[k].y * float(resolution);
      sv[k].depth = 1.0f;
    }
    scan_triangle(sv, false, resolution, resolution,
                  [&](int x, int y, const Vec3f& bary, float) {
                    size_t i = size_t(y) * resolution + x;
                    if (g.coverage.at(x, y)) return;  // first chart wins
                    g.coverage.at(x, y) = 1;
                    g.triangle[i] = int(t);
                    g.bary[i] = bary;
                  });
  }
  return g;
}

}  // namespace tactex
