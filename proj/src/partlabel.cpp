#include "tactex/partlabel.hpp"

#include <algorithm>
#include <cmath>

#include "tactex/pngio.hpp"

namespace tactex {

void validate_attention(const AttentionMaps& maps) {
  if (maps.num_parts < 1 || maps.num_clusters < maps.num_parts)
    throw std::runtime_error("attention maps need K >= N >= 1");
  auto check = [&](const float* m, const char* kind) {
    double sum = 0;
    for (size_t i = 0; i < size_t(maps.width) * maps.height; i++) {
      if (m[i] < 0) throw std::runtime_error(std::string(kind) + " attention map has negative entries");
      sum += m[i];
    }
    if (std::fabs(sum - 1.0) > 1e-5)
      throw std::runtime_error(std::string(kind) + " attention map does not sum to 1");
  };
  for (int k = 0; k < maps.num_clusters; k++) check(maps.self_map(k), "self");
  for (int n = 0; n < maps.num_parts; n++) check(maps.cross_map(n), "cross");
}

AttentionMaps attention_from_tensors(const Tensor& self_maps, const Tensor& cross_maps) {
  if (self_maps.shape.size() != 3 || cross_maps.shape.size() != 3)
    throw std::runtime_error("attention tensors must have shape [maps, H, W]");
  if (self_maps.shape[1] != cross_maps.shape[1] || self_maps.shape[2] != cross_maps.shape[2])
    throw std::runtime_error("self/cross attention resolutions differ");

  AttentionMaps maps;
  maps.num_clusters = self_maps.shape[0];
  maps.num_parts = cross_maps.shape[0];
  maps.height = self_maps.shape[1];
  maps.width = self_maps.shape[2];
  maps.self_maps = self_maps.data;
  maps.cross_maps = cross_maps.data;
  validate_attention(maps);
  return maps;
}

std::vector<int> preliminary_segmentation(const AttentionMaps& maps) {
  const size_t total = size_t(maps.width) * maps.height;
  std::vector<int> cluster(total, 0);
  for (size_t i = 0; i < total; i++) {
    float best = maps.self_map(0)[i];
    int arg = 0;
    for (int k = 1; k < maps.num_clusters; k++) {
      float v = maps.self_map(k)[i];
      if (v > best) {  // strict: ties keep the lowest index
        best = v;
        arg = k;
      }
    }
    cluster[i] = arg;
  }
  return cluster;
}

double kl_divergence(const float* p, const float* q, size_t count) {
  double acc = 0;
  for (size_t i = 0; i < count; i++) {
    double pi = std::max(double(p[i]), kKlEpsilon);
    double qi = std::max(double(q[i]), kKlEpsilon);
    acc += pi * std::log(pi / qi);
  }
  return acc;
}

KlAssignment kl_assign(const AttentionMaps& maps) {
  const size_t total = size_t(maps.width) * maps.height;
  KlAssignment out;
  out.divergence.resize(size_t(maps.num_clusters) * maps.num_parts);
  out.cluster_to_part.resize(maps.num_clusters);

  for (int k = 0; k < maps.num_clusters; k++) {
    double best = 0;
    int arg = 0;
    for (int n = 0; n < maps.num_parts; n++) {
      double d = kl_divergence(maps.self_map(k), maps.cross_map(n), total);
      out.divergence[size_t(k) * maps.num_parts + n] = d;
      if (n == 0 || d < best) {  // strict: ties keep the lowest part
        best = d;
        arg = n;
      }
    }
    out.cluster_to_part[k] = arg;
  }

  std::vector<int> prelim = preliminary_segmentation(maps);
  out.labels.width = maps.width;
  out.labels.height = maps.height;
  out.labels.labels.resize(total);
  for (size_t i = 0; i < total; i++)
    out.labels.labels[i] = uint8_t(out.cluster_to_part[prelim[i]] + 1);
  return out;
}

void save_label_png(const std::string& path, const LabelMap& labels) {
  write_png_indexed(path, labels.labels, labels.width, labels.height);
}

LabelMap load_label_png(const std::string& path) {
  LabelMap out;
  out.labels = read_png_indices(path, &out.width, &out.height);
  return out;
}

}  // namespace tactex
