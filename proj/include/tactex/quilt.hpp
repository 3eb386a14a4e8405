#pragma once

#include <cstdint>
#include <vector>

#include "tactex/tactile.hpp"

namespace tactex {

struct QuiltParams {
  int block_px = 64;
  int overlap_px = 10;
  float tolerance = 0.1f;
  int out_width = 1024;
  int out_height = 1024;
  uint64_t seed = 0;
};

// Minimum-cost monotone top-to-bottom path through a rows x cols cost grid;
// adjacent rows move at most one column. Returns one column per row. Ties
// resolve to the smallest column index (lexicographically smallest path).
std::vector<int> min_cut_seam(const std::vector<float>& cost, int rows, int cols);

// Diagnostics for one placed block seam.
struct SeamRecord {
  std::vector<float> cost;  // rows x cols overlap cost grid
  int rows = 0, cols = 0;
  double cut_cost = 0;  // cost along the chosen min cut
};

struct QuiltTrace {
  struct Placement {
    int out_x = 0, out_y = 0;      // block origin in the output
    int exemplar = 0;              // source exemplar index
    int src_x = 0, src_y = 0;      // source block origin
    int width = 0, height = 0;     // clipped block size
    std::vector<SeamRecord> seams;
  };
  std::vector<Placement> placements;
};

// Efros-Freeman image quilting over pooled exemplar candidates. Blocks are
// placed in raster order on a stride of block_px - overlap_px; candidates
// within (1 + tolerance) of the best overlap SSD are drawn uniformly, and
// overlaps are joined along minimum-error boundary cuts. Deterministic for
// a fixed seed.
HeightMap quilt_height(const std::vector<HeightMap>& exemplars, const QuiltParams& params,
                       QuiltTrace* trace = nullptr);

// quilt_height followed by height_to_normals; the tactile UV reference map.
NormalMap quilted_normal_uv(const std::vector<HeightMap>& exemplars, const QuiltParams& params);

}  // namespace tactex
