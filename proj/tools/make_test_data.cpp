// Regenerates the checked-in fixtures under tests/data: a synthetic tactile
// normal capture, a UV sphere mesh, an albedo map, and the demo fit config.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "tactex/mesh.hpp"
#include "tactex/pngio.hpp"
#include "tactex/tactile.hpp"

using namespace tactex;

namespace {

float rng_uniform(std::mt19937_64& rng, float lo, float hi) {
  return lo + (hi - lo) * float(rng() >> 40) * 0x1.0p-24f;
}

// Gaussian bumps clustered near the sensor center over a smooth gel sag,
// mimicking a pressed capture.
HeightMap synthetic_capture(uint64_t seed) {
  HeightMap h(kSensorWidth, kSensorHeight, kDefaultPitchMm);
  std::mt19937_64 rng(seed);
  const float cx = kSensorWidth / 2.0f, cy = kSensorHeight / 2.0f;
  const int n_bumps = 70;
  struct Bump {
    float x, y, amp, sigma;
  };
  std::vector<Bump> bumps;
  for (int i = 0; i < n_bumps; i++) {
    float ang = rng_uniform(rng, 0, 2 * float(M_PI));
    float rad = 88.0f * std::sqrt(rng_uniform(rng, 0, 1));
    bumps.push_back({cx + rad * std::cos(ang), cy + rad * std::sin(ang),
                     rng_uniform(rng, 0.08f, 0.22f) * (rng() % 2 ? 1.0f : -1.0f),
                     rng_uniform(rng, 4.0f, 7.0f)});
  }
  for (int y = 0; y < h.height; y++) {
    for (int x = 0; x < h.width; x++) {
      float dx = x - cx, dy = y - cy;
      float sag = 0.6f * std::exp(-(dx * dx + dy * dy) / (2 * 140.0f * 140.0f));
      float v = sag;
      for (const Bump& b : bumps) {
        float bx = x - b.x, by = y - b.y;
        float r2 = bx * bx + by * by;
        if (r2 < 9 * b.sigma * b.sigma) v += b.amp * std::exp(-r2 / (2 * b.sigma * b.sigma));
      }
      h.at(x, y) = v;
    }
  }
  return h;
}

ImageF smooth_albedo(int size) {
  ImageF img(size, size, 3);
  for (int y = 0; y < size; y++) {
    for (int x = 0; x < size; x++) {
      float u = (x + 0.5f) / size, v = (y + 0.5f) / size;
      img.set_pixel3(x, y,
                     {0.5f + 0.35f * std::sin(2 * float(M_PI) * u + 1.0f),
                      0.5f + 0.35f * std::sin(4 * float(M_PI) * v),
                      0.62f + 0.25f * std::sin(2 * float(M_PI) * (u + v))});
    }
  }
  return img;
}

}  // namespace

int main(int argc, char** argv) {
  std::string out_dir = argc > 1 ? argv[1] : "tests/data";
  std::filesystem::create_directories(out_dir);

  HeightMap capture = synthetic_capture(12345);
  NormalMap normals = height_to_normals(capture);
  write_normal_png16(out_dir + "/tactile_bump_normal.png", normal_map_to_image(normals));

  Mesh sphere = make_uv_sphere(32, 64);
  save_obj(out_dir + "/sphere.obj", sphere);

  write_png8(out_dir + "/albedo.png", smooth_albedo(512));

  std::ofstream cfg(out_dir + "/demo_config.json", std::ios::trunc);
  cfg << "{\n"
         "  \"phase1_iters\": 30,\n"
         "  \"phase2_iters\": 10,\n"
         "  \"visual_resolution\": 256,\n"
         "  \"tactile_resolution\": 128,\n"
         "  \"seed\": 7\n"
         "}\n";

  std::printf("fixtures written to %s\n", out_dir.c_str());
  return 0;
}
