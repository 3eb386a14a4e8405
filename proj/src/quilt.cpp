#include "tactex/quilt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace tactex {

std::vector<int> min_cut_seam(const std::vector<float>& cost, int rows, int cols) {
  if (rows < 1 || cols < 1 || cost.size() != size_t(rows) * cols)
    throw std::runtime_error("min_cut_seam: bad grid");

  // best[r][c] = cheapest path cost from (r, c) to the bottom row.
  std::vector<double> best(size_t(rows) * cols);
  for (int c = 0; c < cols; c++) best[size_t(rows - 1) * cols + c] = cost[size_t(rows - 1) * cols + c];
  for (int r = rows - 2; r >= 0; r--) {
    for (int c = 0; c < cols; c++) {
      double below = best[size_t(r + 1) * cols + c];
      if (c > 0) below = std::min(below, best[size_t(r + 1) * cols + c - 1]);
      if (c + 1 < cols) below = std::min(below, best[size_t(r + 1) * cols + c + 1]);
      best[size_t(r) * cols + c] = cost[size_t(r) * cols + c] + below;
    }
  }

  std::vector<int> path(rows);
  int cur = 0;
  for (int c = 1; c < cols; c++)
    if (best[c] < best[cur]) cur = c;  // first minimum wins the tie
  path[0] = cur;
  for (int r = 1; r < rows; r++) {
    int next = -1;
    double next_cost = std::numeric_limits<double>::infinity();
    for (int dc = -1; dc <= 1; dc++) {
      int c = cur + dc;
      if (c < 0 || c >= cols) continue;
      if (best[size_t(r) * cols + c] < next_cost) {
        next_cost = best[size_t(r) * cols + c];
        next = c;
      }
    }
    // Smallest column among optimal continuations: scan ascending.
    for (int c = std::max(0, cur - 1); c <= std::min(cols - 1, cur + 1); c++) {
      if (best[size_t(r) * cols + c] == next_cost) {
        next = c;
        break;
      }
    }
    cur = next;
    path[r] = cur;
  }
  return path;
}

namespace {

struct Candidate {
  int exemplar, sx, sy;
};

double seam_path_cost(const std::vector<float>& cost, int rows, int cols,
                      const std::vector<int>& path) {
  double s = 0;
  for (int r = 0; r < rows; r++) s += cost[size_t(r) * cols + path[r]];
  return s;
}

}  // namespace

HeightMap quilt_height(const std::vector<HeightMap>& exemplars, const QuiltParams& params,
                       QuiltTrace* trace) {
  if (exemplars.empty()) throw std::runtime_error("quilt: need at least one exemplar");
  const int block = params.block_px;
  const int overlap = params.overlap_px;
  if (overlap <= 0 || overlap >= block) throw std::runtime_error("quilt: need 0 < overlap < block");
  if (params.tolerance < 0) throw std::runtime_error("quilt: tolerance must be >= 0");
  float pitch = exemplars[0].pitch_mm;
  for (const HeightMap& e : exemplars) {
    if (e.width < block || e.height < block)
      throw std::runtime_error("quilt: exemplar smaller than block size");
    if (std::fabs(e.pitch_mm - pitch) > 1e-9f)
      throw std::runtime_error("quilt: exemplars must share pitch_mm");
  }

  std::vector<Candidate> candidates;
  for (int e = 0; e < int(exemplars.size()); e++)
    for (int sy = 0; sy + block <= exemplars[e].height; sy++)
      for (int sx = 0; sx + block <= exemplars[e].width; sx++)
        candidates.push_back({e, sx, sy});

  HeightMap out(params.out_width, params.out_height, pitch);
  std::mt19937_64 rng(params.seed);
  const int stride = block - overlap;

  std::vector<double> ssd(candidates.size());
  std::vector<uint8_t> usable(candidates.size());
  std::vector<int> qualifying;

  // Raster-order placements; a block flush with the edge ends its row/column.
  std::vector<int> xs, ys;
  for (int x0 = 0;; x0 += stride) {
    xs.push_back(x0);
    if (x0 + block >= params.out_width) break;
  }
  for (int y0 = 0;; y0 += stride) {
    ys.push_back(y0);
    if (y0 + block >= params.out_height) break;
  }

  for (int y0 : ys) {
    for (int x0 : xs) {
      const int bw = std::min(block, params.out_width - x0);
      const int bh = std::min(block, params.out_height - y0);
      const int ov_w = x0 > 0 ? std::min(overlap, bw) : 0;  // left overlap width
      const int ov_h = y0 > 0 ? std::min(overlap, bh) : 0;  // top overlap height

      // Mean SSD against the committed output over the L-shaped overlap.
      double min_ssd = std::numeric_limits<double>::infinity();
      for (size_t c = 0; c < candidates.size(); c++) {
        const Candidate& cand = candidates[c];
        const HeightMap& ex = exemplars[cand.exemplar];
        double acc = 0;
        long valid = 0, total = 0;
        auto add = [&](int bx, int by) {
          total++;
          if (!ex.mask.at(cand.sx + bx, cand.sy + by)) return;
          double d = double(out.at(x0 + bx, y0 + by)) - double(ex.at(cand.sx + bx, cand.sy + by));
          acc += d * d;
          valid++;
        };
        for (int by = 0; by < bh; by++)
          for (int bx = 0; bx < ov_w; bx++) add(bx, by);
        for (int by = 0; by < ov_h; by++)
          for (int bx = ov_w; bx < bw; bx++) add(bx, by);

        if (total == 0) {
          ssd[c] = 0;
          usable[c] = 1;
        } else if (valid * 5 < total * 4) {  // below 80% valid overlap
          ssd[c] = 0;
          usable[c] = 0;
        } else {
          ssd[c] = acc / double(valid);
          usable[c] = 1;
        }
        if (usable[c]) min_ssd = std::min(min_ssd, ssd[c]);
      }
      if (!std::isfinite(min_ssd))
        throw std::runtime_error("quilt: no usable candidate (masks too sparse)");

      qualifying.clear();
      double limit = (1.0 + double(params.tolerance)) * min_ssd;
      for (size_t c = 0; c < candidates.size(); c++)
        if (usable[c] && ssd[c] <= limit) qualifying.push_back(int(c));
      const Candidate& chosen = candidates[qualifying[rng() % qualifying.size()]];
      const HeightMap& ex = exemplars[chosen.exemplar];

      QuiltTrace::Placement rec;
      rec.out_x = x0;
      rec.out_y = y0;
      rec.exemplar = chosen.exemplar;
      rec.src_x = chosen.sx;
      rec.src_y = chosen.sy;
      rec.width = bw;
      rec.height = bh;

      // Seams through the overlap strips; committed pixels stay on the
      // low-index side of each cut.
      std::vector<int> vcut, hcut;
      if (ov_w > 0) {
        SeamRecord seam;
        seam.rows = bh;
        seam.cols = ov_w;
        seam.cost.resize(size_t(bh) * ov_w);
        for (int by = 0; by < bh; by++)
          for (int bx = 0; bx < ov_w; bx++) {
            double d = double(out.at(x0 + bx, y0 + by)) - double(ex.at(chosen.sx + bx, chosen.sy + by));
            seam.cost[size_t(by) * ov_w + bx] = float(d * d);
          }
        vcut = min_cut_seam(seam.cost, bh, ov_w);
        seam.cut_cost = seam_path_cost(seam.cost, bh, ov_w, vcut);
        if (trace) rec.seams.push_back(std::move(seam));
      }
      if (ov_h > 0) {
        SeamRecord seam;
        seam.rows = bw;
        seam.cols = ov_h;
        seam.cost.resize(size_t(bw) * ov_h);
        for (int bx = 0; bx < bw; bx++)
          for (int by = 0; by < ov_h; by++) {
            double d = double(out.at(x0 + bx, y0 + by)) - double(ex.at(chosen.sx + bx, chosen.sy + by));
            seam.cost[size_t(bx) * ov_h + by] = float(d * d);
          }
        hcut = min_cut_seam(seam.cost, bw, ov_h);
        seam.cut_cost = seam_path_cost(seam.cost, bw, ov_h, hcut);
        if (trace) rec.seams.push_back(std::move(seam));
      }

      for (int by = 0; by < bh; by++) {
        for (int bx = 0; bx < bw; bx++) {
          bool keep_old = false;
          if (ov_w > 0 && bx < ov_w && bx < vcut[by]) keep_old = true;
          if (ov_h > 0 && by < ov_h && by < hcut[bx]) keep_old = true;
          if (!keep_old) out.at(x0 + bx, y0 + by) = ex.at(chosen.sx + bx, chosen.sy + by);
        }
      }
      if (trace) trace->placements.push_back(std::move(rec));
    }
  }
  return out;
}

NormalMap quilted_normal_uv(const std::vector<HeightMap>& exemplars, const QuiltParams& params) {
  return height_to_normals(quilt_height(exemplars, params));
}

}  // namespace tactex
