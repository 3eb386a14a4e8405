#include "tactex/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace tactex {

Camera look_at(const Vec3f& eye, const Vec3f& target, const Vec3f& up) {
  Vec3f forward = normalize(target - eye);
  Vec3f right = normalize(cross(forward, up));
  Vec3f true_up = cross(right, forward);

  Camera cam;
  cam.rotation = Mat3f::from_rows(right, true_up, -forward);
  cam.translation = -(cam.rotation * eye);
  return cam;
}

Camera make_orbit_camera(float azimuth_deg, float elevation_deg, const VisualCameraParams& p) {
  float az = azimuth_deg * float(M_PI) / 180.0f;
  float el = elevation_deg * float(M_PI) / 180.0f;
  Vec3f eye{p.radius * std::sin(az) * std::cos(el), p.radius * std::sin(el),
            p.radius * std::cos(az) * std::cos(el)};
  Camera cam = look_at(eye, {0, 0, 0}, {0, 1, 0});
  cam.kind = Projection::Perspective;
  cam.fov_deg = p.fov_deg;
  cam.width = cam.height = p.resolution;
  return cam;
}

Camera sample_visual_camera(std::mt19937_64& rng, const VisualCameraParams& p) {
  auto unit = [&] { return float(rng() >> 11) * float(0x1.0p-53); };
  float azimuth = 360.0f * unit();
  float elevation = p.elevation_min_deg + (p.elevation_max_deg - p.elevation_min_deg) * unit();
  return make_orbit_camera(azimuth, elevation, p);
}

Camera make_tactile_camera(const Mesh& m, int vertex, const TactileCameraParams& p) {
  if (vertex < 0 || size_t(vertex) >= m.positions.size())
    throw std::runtime_error("tactile camera: vertex out of range");
  const Vec3f& v = m.positions[vertex];
  const Vec3f& n = m.normals[vertex];
  Vec3f eye = v + n * p.distance;

  Camera cam;
  Vec3f forward = -n;
  Vec3f up_hint = orthogonal_axis(n);
  Vec3f right = normalize(cross(forward, up_hint));
  Vec3f true_up = cross(right, forward);
  cam.rotation = Mat3f::from_rows(right, true_up, -forward);
  cam.translation = -(cam.rotation * eye);
  cam.kind = Projection::Orthographic;
  cam.ortho_width = float(p.resolution) * p.texel_scale;
  cam.width = cam.height = p.resolution;
  return cam;
}

Camera sample_tactile_camera(const Mesh& m, std::mt19937_64& rng, const TactileCameraParams& p) {
  int vertex = int(rng() % m.positions.size());
  return make_tactile_camera(m, vertex, p);
}

}  // namespace tactex
