#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tactex/image.hpp"
#include "tactex/vec.hpp"

namespace tactex {

// Indexed triangle mesh, normalized to fit [-1, 1]^3. UVs live per corner so
// seams need no vertex duplication.
struct Mesh {
  std::vector<Vec3f> positions;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec3f> normals;   // per vertex, unit
  std::vector<Vec3f> tangents;  // per vertex, unit, orthogonal to normal
  std::vector<std::array<Vec2f, 3>> corner_uvs;  // per triangle corner, in [0, 1]^2
  std::vector<Vec3f> vertex_colors;              // optional, RGB in [0, 1]

  bool has_uvs() const { return !corner_uvs.empty(); }
  bool has_colors() const { return !vertex_colors.empty(); }
};

// Load OBJ or PLY (binary little-endian), triangulating polygons. The mesh is
// centered and uniformly scaled into [-1, 1]^3, vertex normals are rebuilt as
// area-weighted face averages, a per-triangle atlas is generated when UVs are
// absent, and tangents are computed. Rejects empty meshes.
Mesh load_mesh(const std::string& path);

// Same post-processing for meshes built in memory.
void finalize_mesh(Mesh& m);

void normalize_to_unit_box(Mesh& m);
void compute_vertex_normals(Mesh& m);

// Per-vertex tangents accumulated from UV derivatives, Gram-Schmidt
// orthogonalized against the normal. Triangles with degenerate UVs fall back
// to a deterministic axis-picked frame. The bitangent is n x t at use sites.
void compute_tangents(Mesh& m);

// Deterministic unit vector orthogonal to n: project the coordinate axis
// least aligned with n.
Vec3f orthogonal_axis(const Vec3f& n);

// Injective per-triangle UV atlas on a uniform grid of square cells.
void build_fallback_atlas(Mesh& m);

// Rasterize barycentric-interpolated vertex colors into UV space with a
// 4 px gutter. Throws when vertex colors are missing.
struct UvImage {
  ImageF image;
  Mask coverage;  // pre-dilation chart coverage
};
UvImage project_vertex_albedo(const Mesh& m, int resolution);

// Dilate image content outward from covered texels (used for bake gutters).
void dilate_gutter(ImageF& img, Mask& coverage, int pixels);

// Fixture/demo primitives.
Mesh make_icosphere(int subdivisions);              // no UVs until finalize
Mesh make_uv_sphere(int rings, int segments);       // seam-duplicated [0,1]^2 UVs
Mesh make_quad();                                   // unit quad in z=0, axis UVs

void save_obj(const std::string& path, const Mesh& m);

}  // namespace tactex
