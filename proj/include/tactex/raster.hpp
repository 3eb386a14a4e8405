#pragma once

#include <vector>

#include "tactex/camera.hpp"
#include "tactex/image.hpp"
#include "tactex/mesh.hpp"
#include "tactex/vec.hpp"

namespace tactex {

// Per-pixel rasterization state. Barycentrics are perspective-correct (plain
// for orthographic cameras), clamped to >= -1e-6 and summing to 1. Normals
// and tangents are renormalized / re-orthogonalized after interpolation.
struct GBuffer {
  int width = 0, height = 0;
  Mask coverage;
  std::vector<int> triangle;
  std::vector<Vec3f> position;  // world space
  std::vector<Vec3f> normal;    // interpolated base normal
  std::vector<Vec3f> tangent;   // interpolated tangent, orthogonal to normal
  std::vector<Vec2f> uv;
  std::vector<Vec3f> bary;
  std::vector<float> depth;

  size_t index(int x, int y) const { return size_t(y) * width + x; }
};

// Pixel-center sampling, closest-hit z-buffer, top-left fill rule on edge
// ties. Deterministic: triangles are committed in index order and depth ties
// keep the earlier triangle.
GBuffer rasterize(const Mesh& m, const Camera& cam);

// Same edge machinery in UV space (used for baking and albedo projection).
// Overlapping charts keep the first triangle.
struct UvGBuffer {
  int resolution = 0;
  Mask coverage;
  std::vector<int> triangle;
  std::vector<Vec3f> bary;
};

UvGBuffer rasterize_uv(const Mesh& m, int resolution);

}  // namespace tactex
