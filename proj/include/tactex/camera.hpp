#pragma once

#include <random>

#include "tactex/mesh.hpp"
#include "tactex/vec.hpp"

namespace tactex {

enum class Projection { Perspective, Orthographic };

// World -> camera rotation + translation; camera space looks down -z with
// +x right and +y up. Perspective fov is the full vertical angle.
struct Camera {
  Projection kind = Projection::Perspective;
  Mat3f rotation;      // world -> camera
  Vec3f translation;   // x_cam = R * x_world + t
  float fov_deg = 45.0f;
  float ortho_width = 1.0f;  // world units across the frame
  int width = 512, height = 512;

  Vec3f position() const { return rotation.transposed() * (-translation); }
  Vec3f to_camera(const Vec3f& p) const { return rotation * p + translation; }
};

Camera look_at(const Vec3f& eye, const Vec3f& target, const Vec3f& up);

struct VisualCameraParams {
  float radius = 2.4f;
  float fov_deg = 45.0f;
  float elevation_min_deg = -30.0f;
  float elevation_max_deg = 60.0f;
  int resolution = 512;
};

// Orbit camera looking at the origin: azimuth uniform in [0, 360), elevation
// uniform in [min, max]. Azimuth 0 / elevation 0 puts the eye at
// (0, 0, radius) with +y up.
Camera sample_visual_camera(std::mt19937_64& rng, const VisualCameraParams& params = {});
Camera make_orbit_camera(float azimuth_deg, float elevation_deg,
                         const VisualCameraParams& params = {});

struct TactileCameraParams {
  float distance = 0.2f;     // offset along the vertex normal
  float texel_scale = 2.0f / 1024.0f;  // world units per pixel
  int resolution = 256;
};

// Orthographic close-up: pick a random vertex, place the eye along its
// normal, look back at the vertex. The up vector is the vertex's
// deterministic tangent-frame axis.
Camera sample_tactile_camera(const Mesh& m, std::mt19937_64& rng,
                             const TactileCameraParams& params = {});
Camera make_tactile_camera(const Mesh& m, int vertex, const TactileCameraParams& params = {});

}  // namespace tactex
