#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tactex/image.hpp"
#include "tactex/losses.hpp"
#include "tactex/tensorio.hpp"

namespace tactex {

// Pre-extracted attention probability maps: K clustered self-attention maps
// and N per-part cross-attention maps, each normalized to sum 1 over pixels.
struct AttentionMaps {
  int width = 0, height = 0;
  int num_clusters = 0;  // K
  int num_parts = 0;     // N
  std::vector<float> self_maps;   // K x H x W
  std::vector<float> cross_maps;  // N x H x W
  std::vector<std::string> part_names;

  const float* self_map(int k) const { return self_maps.data() + size_t(k) * width * height; }
  const float* cross_map(int n) const { return cross_maps.data() + size_t(n) * width * height; }
};

// Throws unless entries are nonnegative, every map sums to 1 within 1e-5,
// and K >= N >= 1.
void validate_attention(const AttentionMaps& maps);

AttentionMaps attention_from_tensors(const Tensor& self_maps, const Tensor& cross_maps);

// Per-pixel label in {1..N}, 0 = background.
struct LabelMap {
  int width = 0, height = 0;
  std::vector<uint8_t> labels;

  uint8_t at(int x, int y) const { return labels[size_t(y) * width + x]; }
};

// Per-pixel argmax over the K cluster maps; ties pick the lowest index.
// Returns 0-based cluster indices.
std::vector<int> preliminary_segmentation(const AttentionMaps& maps);

inline constexpr double kKlEpsilon = 1e-12;

// D_KL(p || q) with entries floored at kKlEpsilon.
double kl_divergence(const float* p, const float* q, size_t count);

struct KlAssignment {
  std::vector<int> cluster_to_part;  // K entries, 0-based
  std::vector<double> divergence;    // K x N, row-major
  LabelMap labels;                   // merged segmentation, labels in 1..N
};

// Assign each self-attention cluster to the part minimizing KL divergence
// (ties to the lowest part index) and merge the preliminary segmentation.
KlAssignment kl_assign(const AttentionMaps& maps);

// Masked mean softmax cross-entropy of rendered part logits against a label
// map; background (label 0) pixels are excluded. grad may be null, otherwise
// mask.width * mask.height * n_parts entries, accumulated.
template <typename Real>
Real loss_label(const Real* logits, const LabelMap& labels, const Mask& mask, int n_parts,
                Real* grad) {
  if (labels.width != mask.width || labels.height != mask.height)
    throw std::runtime_error("loss_label: label/mask resolution mismatch");
  const size_t total = size_t(mask.width) * mask.height;
  size_t count = 0;
  for (size_t i = 0; i < total; i++)
    if (mask.data[i] && labels.labels[i] > 0) count++;
  if (count == 0) throw std::runtime_error("loss_label: empty mask");

  Real acc = 0;
  std::vector<Real> prob(n_parts);
  for (size_t i = 0; i < total; i++) {
    if (!mask.data[i] || labels.labels[i] == 0) continue;
    int target = labels.labels[i] - 1;
    if (target >= n_parts) throw std::runtime_error("loss_label: label exceeds logit channels");
    const Real* z = logits + i * n_parts;
    Real zmax = z[0];
    for (int c = 1; c < n_parts; c++) zmax = std::max(zmax, z[c]);
    Real denom = 0;
    for (int c = 0; c < n_parts; c++) {
      prob[c] = std::exp(z[c] - zmax);
      denom += prob[c];
    }
    for (int c = 0; c < n_parts; c++) prob[c] /= denom;
    acc -= std::log(std::max(prob[target], Real(1e-30)));
    if (grad) {
      for (int c = 0; c < n_parts; c++)
        grad[i * n_parts + c] += (prob[c] - (c == target ? Real(1) : Real(0))) / Real(count);
    }
  }
  return acc / Real(count);
}

// Part-masked tactile loss: sum over parts of the cosine loss restricted to
// that part's mask. Masks must be pairwise disjoint; empty parts contribute
// zero. With a single full mask this is exactly the plain cosine loss.
template <typename Real>
Real masked_tactile_losses(const Real* pred, const std::vector<const Real*>& targets,
                           const std::vector<Mask>& part_masks, Real* grad) {
  if (targets.size() != part_masks.size())
    throw std::runtime_error("masked_tactile_losses: need one target per part mask");
  if (part_masks.empty()) throw std::runtime_error("masked_tactile_losses: no parts");

  const size_t total = size_t(part_masks[0].width) * part_masks[0].height;
  for (size_t i = 0; i < total; i++) {
    int hits = 0;
    for (const Mask& m : part_masks) hits += m.data[i] ? 1 : 0;
    if (hits > 1) throw std::runtime_error("masked_tactile_losses: overlapping part masks");
  }

  Real acc = 0;
  for (size_t n = 0; n < targets.size(); n++) {
    if (part_masks[n].count() == 0) continue;
    acc += loss_cosine(pred, targets[n], part_masks[n], grad);
  }
  return acc;
}

// Label map <-> indexed PNG (0 = background).
void save_label_png(const std::string& path, const LabelMap& labels);
LabelMap load_label_png(const std::string& path);

}  // namespace tactex
