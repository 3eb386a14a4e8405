#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tactex/vec.hpp"

namespace tactex {

// Instant-NGP style multi-resolution hash encoding.
struct HashGridConfig {
  int levels = 16;
  int features_per_level = 2;
  int table_size_log2 = 19;
  int base_resolution = 16;
  int max_resolution = 2048;
};

struct FieldConfig {
  HashGridConfig grid;
  int hidden_width = 64;
  int n_labels = 0;  // 0 disables the label head
};

// Offsets of each trainable group inside the flat parameter vector.
struct ParamLayout {
  std::vector<size_t> level_offset;
  std::vector<int64_t> level_entries;
  std::vector<int> level_resolution;
  std::vector<uint8_t> level_dense;  // full grid fits in the table
  size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
  size_t wa = 0, ba = 0, wt = 0, bt = 0, wl = 0, bl = 0;
  size_t total = 0;
  int input_dim = 0;
};

ParamLayout make_layout(const FieldConfig& config);

struct AdamParams {
  float lr = 0.01f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

struct AdamState {
  std::vector<float> m, v;
  int64_t step = 0;
};

struct TextureField {
  FieldConfig config;
  ParamLayout layout;
  std::vector<float> params;
  AdamState adam;

  // Hash tables uniform(-1e-4, 1e-4), hidden layers Kaiming-uniform over
  // fan-in, heads zero so the field starts at albedo 0.5 and n_T = (0,0,1).
  static TextureField create(const FieldConfig& config, uint64_t seed);
};

// Standard bias-corrected Adam. Throws on non-finite gradients.
void adam_step(TextureField& field, const std::vector<float>& grad, const AdamParams& params);

void save_checkpoint(const std::string& path, const TextureField& field);
TextureField load_checkpoint(const std::string& path);

// Saved activations for one forward batch.
template <typename Real>
struct FieldActivations {
  size_t count = 0;
  int input_dim = 0, hidden = 0, n_labels = 0;
  std::vector<Real> unit_points;  // count x 3, clamped to [0, 1]
  std::vector<uint8_t> clamped;
  std::vector<Real> encoding;   // count x input_dim
  std::vector<Real> h1, h2;     // count x hidden, post-ReLU
  std::vector<Real> albedo;     // count x 3, post-sigmoid
  std::vector<Real> tanh_out;   // count x 3
  std::vector<Real> n_tac;      // count x 3, unit with z > 0
  std::vector<Real> logits;     // count x n_labels
};

namespace detail {

inline constexpr float kNormalEps = 1e-3f;  // lift on the tanh z before normalize

inline uint32_t hash_coords(uint32_t x, uint32_t y, uint32_t z) {
  return (x * 1u) ^ (y * 2654435761u) ^ (z * 805459861u);
}

inline int64_t grid_index(const ParamLayout& layout, int level, int x, int y, int z) {
  if (layout.level_dense[level]) {
    int64_t n1 = layout.level_resolution[level] + 1;
    return x + n1 * (y + n1 * z);
  }
  uint32_t mask = uint32_t(layout.level_entries[level]) - 1u;
  return int64_t(hash_coords(uint32_t(x), uint32_t(y), uint32_t(z)) & mask);
}

}  // namespace detail

// Encode points in [-1, 1]^3 (clamped and flagged outside), run the 2-layer
// ReLU trunk, and apply the heads: sigmoid albedo, tanh tactile normal mapped
// to the +z hemisphere via normalize(t_x, t_y, t_z + 1 + eps), linear labels.
template <typename Real>
void field_forward(const FieldConfig& config, const ParamLayout& layout, const Real* params,
                   const Vec3<Real>* points, size_t count, FieldActivations<Real>& acts) {
  const int L = config.grid.levels;
  const int F = config.grid.features_per_level;
  const int in_dim = layout.input_dim;
  const int hidden = config.hidden_width;
  const int n_labels = config.n_labels;

  acts.count = count;
  acts.input_dim = in_dim;
  acts.hidden = hidden;
  acts.n_labels = n_labels;
  acts.unit_points.resize(count * 3);
  acts.clamped.assign(count, 0);
  acts.encoding.resize(count * in_dim);
  acts.h1.resize(count * hidden);
  acts.h2.resize(count * hidden);
  acts.albedo.resize(count * 3);
  acts.tanh_out.resize(count * 3);
  acts.n_tac.resize(count * 3);
  acts.logits.resize(count * size_t(n_labels));

#pragma omp parallel for schedule(static)
  for (long long pi = 0; pi < (long long)count; pi++) {
    const size_t p = size_t(pi);
    Real u[3];
    bool clamped = false;
    for (int k = 0; k < 3; k++) {
      Real v = (points[p][k] + Real(1)) * Real(0.5);
      if (v < Real(0)) {
        v = Real(0);
        clamped = true;
      } else if (v > Real(1)) {
        v = Real(1);
        clamped = true;
      }
      u[k] = v;
      acts.unit_points[p * 3 + k] = v;
    }
    acts.clamped[p] = clamped ? 1 : 0;

    Real* enc = &acts.encoding[p * in_dim];
    for (int level = 0; level < L; level++) {
      const int res = layout.level_resolution[level];
      const Real* table = params + layout.level_offset[level];
      int cell[3];
      Real frac[3];
      for (int k = 0; k < 3; k++) {
        Real pos = u[k] * Real(res);
        int c = int(pos);
        if (c > res - 1) c = res - 1;
        cell[k] = c;
        frac[k] = pos - Real(c);
      }
      for (int f = 0; f < F; f++) enc[level * F + f] = Real(0);
      for (int corner = 0; corner < 8; corner++) {
        int dx = corner & 1, dy = (corner >> 1) & 1, dz = (corner >> 2) & 1;
        Real w = (dx ? frac[0] : Real(1) - frac[0]) * (dy ? frac[1] : Real(1) - frac[1]) *
                 (dz ? frac[2] : Real(1) - frac[2]);
        int64_t idx = detail::grid_index(layout, level, cell[0] + dx, cell[1] + dy, cell[2] + dz);
        const Real* feat = table + size_t(idx) * F;
        for (int f = 0; f < F; f++) enc[level * F + f] += w * feat[f];
      }
    }

    // trunk
    Real* h1 = &acts.h1[p * hidden];
    const Real* w1 = params + layout.w1;
    const Real* b1 = params + layout.b1;
    for (int i = 0; i < hidden; i++) {
      Real acc = b1[i];
      const Real* row = w1 + size_t(i) * in_dim;
      for (int j = 0; j < in_dim; j++) acc += row[j] * enc[j];
      h1[i] = acc > Real(0) ? acc : Real(0);
    }
    Real* h2 = &acts.h2[p * hidden];
    const Real* w2 = params + layout.w2;
    const Real* b2 = params + layout.b2;
    for (int i = 0; i < hidden; i++) {
      Real acc = b2[i];
      const Real* row = w2 + size_t(i) * hidden;
      for (int j = 0; j < hidden; j++) acc += row[j] * h1[j];
      h2[i] = acc > Real(0) ? acc : Real(0);
    }

    // heads
    const Real* wa = params + layout.wa;
    const Real* ba = params + layout.ba;
    for (int i = 0; i < 3; i++) {
      Real acc = ba[i];
      const Real* row = wa + size_t(i) * hidden;
      for (int j = 0; j < hidden; j++) acc += row[j] * h2[j];
      acts.albedo[p * 3 + i] = Real(1) / (Real(1) + std::exp(-acc));
    }
    const Real* wt = params + layout.wt;
    const Real* bt = params + layout.bt;
    Real v[3];
    for (int i = 0; i < 3; i++) {
      Real acc = bt[i];
      const Real* row = wt + size_t(i) * hidden;
      for (int j = 0; j < hidden; j++) acc += row[j] * h2[j];
      Real th = std::tanh(acc);
      acts.tanh_out[p * 3 + i] = th;
      v[i] = th;
    }
    v[2] += Real(1) + Real(detail::kNormalEps);
    Real inv_len = Real(1) / std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (int i = 0; i < 3; i++) acts.n_tac[p * 3 + i] = v[i] * inv_len;

    if (n_labels > 0) {
      const Real* wl = params + layout.wl;
      const Real* bl = params + layout.bl;
      for (int i = 0; i < n_labels; i++) {
        Real acc = bl[i];
        const Real* row = wl + size_t(i) * hidden;
        for (int j = 0; j < hidden; j++) acc += row[j] * h2[j];
        acts.logits[p * size_t(n_labels) + i] = acc;
      }
    }
  }
}

// Reverse-mode gradients for a saved batch. Upstream buffers may be null
// (treated as zero). Gradients accumulate into grad; the per-point math runs
// in fixed-size chunks reduced in order, then hash-table contributions are
// scattered sequentially, so results do not depend on the worker count.
template <typename Real>
void field_backward(const FieldConfig& config, const ParamLayout& layout, const Real* params,
                    const FieldActivations<Real>& acts, const Real* d_albedo, const Real* d_ntac,
                    const Real* d_logits, Real* grad) {
  const int L = config.grid.levels;
  const int F = config.grid.features_per_level;
  const int in_dim = layout.input_dim;
  const int hidden = config.hidden_width;
  const int n_labels = config.n_labels;
  const size_t count = acts.count;
  if (acts.input_dim != in_dim || acts.hidden != hidden || acts.n_labels != n_labels)
    throw std::runtime_error("field_backward: activations do not match the field shape");

  const size_t mlp_base = layout.w1;  // trunk + heads live after the tables
  const size_t mlp_size = layout.total - mlp_base;

  constexpr size_t kChunk = 4096;
  const size_t n_chunks = count == 0 ? 0 : (count + kChunk - 1) / kChunk;
  std::vector<Real> chunk_grads(n_chunks * mlp_size, Real(0));
  std::vector<Real> d_encoding(count * in_dim);

#pragma omp parallel for schedule(static)
  for (long long ci = 0; ci < (long long)n_chunks; ci++) {
    const size_t chunk = size_t(ci);
    Real* cg = chunk_grads.data() + chunk * mlp_size;
    const size_t lo = chunk * kChunk;
    const size_t hi = std::min(count, lo + kChunk);
    std::vector<Real> dh2(hidden), dh1(hidden);

    for (size_t p = lo; p < hi; p++) {
      for (int i = 0; i < hidden; i++) dh2[i] = Real(0);

      // albedo head
      if (d_albedo) {
        const Real* h2 = &acts.h2[p * hidden];
        for (int i = 0; i < 3; i++) {
          Real a = acts.albedo[p * 3 + i];
          Real da = d_albedo[p * 3 + i] * a * (Real(1) - a);
          if (da == Real(0)) continue;
          Real* gw = cg + (layout.wa - mlp_base) + size_t(i) * hidden;
          const Real* row = params + layout.wa + size_t(i) * hidden;
          for (int j = 0; j < hidden; j++) {
            gw[j] += da * h2[j];
            dh2[j] += row[j] * da;
          }
          cg[layout.ba - mlp_base + i] += da;
        }
      }

      // tactile head through the hemisphere map
      if (d_ntac) {
        const Real* nt = &acts.n_tac[p * 3];
        const Real* th = &acts.tanh_out[p * 3];
        Real v2 = th[2] + Real(1) + Real(detail::kNormalEps);
        Real len = std::sqrt(th[0] * th[0] + th[1] * th[1] + v2 * v2);
        Real ndot = nt[0] * d_ntac[p * 3] + nt[1] * d_ntac[p * 3 + 1] + nt[2] * d_ntac[p * 3 + 2];
        const Real* h2 = &acts.h2[p * hidden];
        for (int i = 0; i < 3; i++) {
          Real dv = (d_ntac[p * 3 + i] - nt[i] * ndot) / len;
          Real dt = dv * (Real(1) - th[i] * th[i]);
          if (dt == Real(0)) continue;
          Real* gw = cg + (layout.wt - mlp_base) + size_t(i) * hidden;
          const Real* row = params + layout.wt + size_t(i) * hidden;
          for (int j = 0; j < hidden; j++) {
            gw[j] += dt * h2[j];
            dh2[j] += row[j] * dt;
          }
          cg[layout.bt - mlp_base + i] += dt;
        }
      }

      if (n_labels > 0 && d_logits) {
        const Real* h2 = &acts.h2[p * hidden];
        for (int i = 0; i < n_labels; i++) {
          Real dl = d_logits[p * size_t(n_labels) + i];
          if (dl == Real(0)) continue;
          Real* gw = cg + (layout.wl - mlp_base) + size_t(i) * hidden;
          const Real* row = params + layout.wl + size_t(i) * hidden;
          for (int j = 0; j < hidden; j++) {
            gw[j] += dl * h2[j];
            dh2[j] += row[j] * dl;
          }
          cg[layout.bl - mlp_base + i] += dl;
        }
      }

      // trunk
      const Real* h1 = &acts.h1[p * hidden];
      const Real* h2 = &acts.h2[p * hidden];
      for (int i = 0; i < hidden; i++) dh1[i] = Real(0);
      for (int i = 0; i < hidden; i++) {
        if (h2[i] <= Real(0) || dh2[i] == Real(0)) continue;
        Real d = dh2[i];
        Real* gw = cg + (layout.w2 - mlp_base) + size_t(i) * hidden;
        const Real* row = params + layout.w2 + size_t(i) * hidden;
        for (int j = 0; j < hidden; j++) {
          gw[j] += d * h1[j];
          dh1[j] += row[j] * d;
        }
        cg[layout.b2 - mlp_base + i] += d;
      }
      const Real* enc = &acts.encoding[p * in_dim];
      Real* denc = &d_encoding[p * in_dim];
      for (int j = 0; j < in_dim; j++) denc[j] = Real(0);
      for (int i = 0; i < hidden; i++) {
        if (h1[i] <= Real(0) || dh1[i] == Real(0)) continue;
        Real d = dh1[i];
        Real* gw = cg + (layout.w1 - mlp_base) + size_t(i) * in_dim;
        const Real* row = params + layout.w1 + size_t(i) * in_dim;
        for (int j = 0; j < in_dim; j++) {
          gw[j] += d * enc[j];
          denc[j] += row[j] * d;
        }
        cg[layout.b1 - mlp_base + i] += d;
      }
    }
  }

  // Fixed-order reductions.
  for (size_t chunk = 0; chunk < n_chunks; chunk++) {
    const Real* cg = chunk_grads.data() + chunk * mlp_size;
    Real* g = grad + mlp_base;
    for (size_t i = 0; i < mlp_size; i++) g[i] += cg[i];
  }

  // Sequential scatter into the hash tables (collisions sum).
  for (size_t p = 0; p < count; p++) {
    const Real* u = &acts.unit_points[p * 3];
    const Real* denc = &d_encoding[p * in_dim];
    for (int level = 0; level < L; level++) {
      bool any = false;
      for (int f = 0; f < F; f++) any = any || denc[level * F + f] != Real(0);
      if (!any) continue;
      const int res = layout.level_resolution[level];
      Real* table_grad = grad + layout.level_offset[level];
      int cell[3];
      Real frac[3];
      for (int k = 0; k < 3; k++) {
        Real pos = u[k] * Real(res);
        int c = int(pos);
        if (c > res - 1) c = res - 1;
        cell[k] = c;
        frac[k] = pos - Real(c);
      }
      for (int corner = 0; corner < 8; corner++) {
        int dx = corner & 1, dy = (corner >> 1) & 1, dz = (corner >> 2) & 1;
        Real w = (dx ? frac[0] : Real(1) - frac[0]) * (dy ? frac[1] : Real(1) - frac[1]) *
                 (dz ? frac[2] : Real(1) - frac[2]);
        int64_t idx = detail::grid_index(layout, level, cell[0] + dx, cell[1] + dy, cell[2] + dz);
        Real* feat = table_grad + size_t(idx) * F;
        for (int f = 0; f < F; f++) feat[f] += w * denc[level * F + f];
      }
    }
  }
}

// Convenience float wrappers.
void field_forward(const TextureField& field, const Vec3f* points, size_t count,
                   FieldActivations<float>& acts);

void field_backward(const TextureField& field, const FieldActivations<float>& acts,
                    const float* d_albedo, const float* d_ntac, const float* d_logits,
                    std::vector<float>& grad);

}  // namespace tactex
