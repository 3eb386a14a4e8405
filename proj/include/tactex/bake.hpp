#pragma once

#include <string>

#include "tactex/mesh.hpp"
#include "tactex/partlabel.hpp"
#include "tactex/shade.hpp"
#include "tactex/texfield.hpp"

namespace tactex {

// Field sampled at UV-texel surface points. The coverage mask marks real
// chart texels; image content is dilated 4 px beyond it for bilinear-safe
// gutters.
struct BakeResult {
  ImageF albedo_uv;   // 3 channels
  ImageF normal_uv;   // 3 channels, tangent-space unit normals
  LabelMap label_uv;  // present when the field has a label head; 0 = background
  Mask coverage;
  int resolution = 0;
};

BakeResult bake(const TextureField& field, const Mesh& m, int resolution);

// Azimuth sweep at elevation 20 with a headlight; writes numbered
// color/albedo/normal frames into out_dir and returns the frame count.
struct TurntableSource {
  const TextureField* field = nullptr;  // either a field ...
  const ImageF* albedo_uv = nullptr;    // ... or baked maps
  const ImageF* tactile_uv = nullptr;
};

int turntable(const Mesh& m, const TurntableSource& src, int frames, const std::string& out_dir,
              int resolution = 512);

}  // namespace tactex
